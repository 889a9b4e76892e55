// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any criterion fails. Each criterion carries its own tolerance and time
// budget; oracles are computed independently of the code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "phoneseq/phoneseq.hpp"

using namespace phoneseq;
using testutil::random_model_parts;
using testutil::seq;

namespace {

struct check_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw check_failure(what);
}

int g_failures = 0;

template <class Body>
void criterion(int id, const std::string& name, double budget_seconds, Body&& body) {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (ok && budget_seconds > 0.0 && elapsed >= budget_seconds) {
    ok = false;
    detail += " -- exceeded time budget of " + std::to_string(budget_seconds) + "s";
  }
  std::printf("%s  criterion %d: %s  [%.2fs] %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), elapsed,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double relative_gap(double a, double b) {
  double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

// --- criterion 1: composing the ML probabilities reproduces the posterior

std::string run_bayes_consistency() {
  std::mt19937_64 rng(10001);
  int models = 0, checks = 0;
  while (models < 1000) {
    auto parts = random_model_parts(rng, 2, 6, 50);
    auto model = SequenceModel::build(parts.tables, parts.sets, 0.0);
    ++models;
    double prior_sum = 0.0;
    for (std::size_t l = 0; l < model.language_count(); ++l) prior_sum += model.prior(static_cast<int>(l));
    check(relative_gap(prior_sum, 1.0) < 1e-12, "priors do not sum to 1");
    for (const auto& [sequence, entry] : model.sequences()) {
      double pooled = 0.0;
      for (double rate : entry.rates) pooled += rate;
      for (std::size_t l = 0; l < model.language_count(); ++l) {
        int lang = static_cast<int>(l);
        double composed =
            model.seq_given_lang(sequence, lang) * model.prior(lang) / model.seq_prob(sequence);
        double closed_form = entry.rates[l] / pooled;  // independent route via the stored rates
        check(relative_gap(composed, closed_form) < 1e-12,
              "composed posterior deviates from the closed form");
        check(relative_gap(model.posterior_given_seq(sequence, lang), closed_form) < 1e-12,
              "posterior deviates from the closed form");
        ++checks;
      }
    }
  }
  return std::to_string(models) + " models, " + std::to_string(checks) + " checks, tol 1e-12";
}

// --- criterion 2: log-space joint score vs an explicit product oracle

std::string run_product_oracle() {
  std::mt19937_64 rng(10002);
  int lists = 0;
  for (int round = 0; round < 1000; ++round) {
    auto parts = random_model_parts(rng, 2, 6, 50);
    double epsilon = (round % 2 == 0) ? 1e-6 : 1e-3;
    auto model = SequenceModel::build(parts.tables, parts.sets, epsilon);
    std::vector<PhoneSequence> pool;
    for (const auto& [sequence, entry] : model.sequences()) pool.push_back(sequence);

    std::size_t h = 1 + rng() % 20;
    std::vector<PhoneSequence> obs;
    for (std::size_t i = 0; i < h; ++i) obs.push_back(pool[rng() % pool.size()]);
    ++lists;

    for (std::size_t l = 0; l < model.language_count(); ++l) {
      long double product =
          std::pow(static_cast<long double>(model.prior(static_cast<int>(l))),
                   1.0L - static_cast<long double>(h));
      for (const auto& s : obs) {
        long double numerator = 0.0L, denominator = 0.0L;
        for (std::size_t k = 0; k < model.language_count(); ++k) {
          long double rate = parts.tables[k].normalized(s);
          if (k == l) numerator = rate + epsilon;
          denominator += rate + epsilon;
        }
        product *= numerator / denominator;
      }
      long double score = model.log_posterior_given_obs(obs, static_cast<int>(l));
      check(relative_gap(static_cast<double>(std::exp(score)), static_cast<double>(product)) < 1e-10,
            "exp(log score) deviates from the explicit product");
    }
  }
  return std::to_string(lists) + " observation lists (h <= 20), tol 1e-10";
}

// --- criterion 3: counting vs brute-force (start, length) enumeration

std::string run_counting_oracle() {
  std::mt19937_64 rng(10003);
  for (int round = 0; round < 500; ++round) {
    std::vector<Utterance> utterances;
    std::size_t n_utts = rng() % 21;
    std::size_t inventory = 1 + rng() % 6;
    for (std::size_t u = 0; u < n_utts; ++u) {
      Utterance utterance{"s", {}};
      std::size_t len = rng() % 13;
      for (std::size_t i = 0; i < len; ++i)
        utterance.phones.push_back(std::string(1, static_cast<char>('a' + rng() % inventory)));
      utterances.push_back(std::move(utterance));
    }
    int max_p = 1 + static_cast<int>(rng() % 5);

    SequenceCountMap oracle;
    for (const auto& utterance : utterances)
      for (std::size_t start = 0; start < utterance.phones.size(); ++start)
        for (std::size_t len = 1;
             len <= static_cast<std::size_t>(max_p) && start + len <= utterance.phones.size(); ++len)
          ++oracle[PhoneSequence(utterance.phones.begin() + static_cast<std::ptrdiff_t>(start),
                                 utterance.phones.begin() + static_cast<std::ptrdiff_t>(start + len))];

    auto counts = count_sequences(utterances, max_p);
    check(counts.sentences == utterances.size(), "sentence count mismatch");
    check(counts.raw == oracle, "counts differ from the brute-force enumeration");
  }
  return "500 random corpora, exact match";
}

// --- criterion 4: dominance boundary and monotonicity in alpha

std::string run_dominance_properties() {
  // boundary: equality is accepted
  std::vector<CountTable> boundary = {testutil::make_table("L1", 1, {{"x", 2}}),
                                      testutil::make_table("L2", 1, {{"x", 1}})};
  check(is_discriminative(seq("x"), "L1", boundary, 2.0), "equality boundary rejected");
  check(!is_discriminative(seq("x"), "L1", boundary, 2.0 + 1e-9), "above-boundary accepted");

  std::mt19937_64 rng(10004);
  for (int round = 0; round < 100; ++round) {
    std::size_t n_lang = 2 + rng() % 4;
    std::size_t n_seq = 1 + rng() % 30;
    std::vector<PhoneSequence> pool;
    for (std::size_t i = 0; i < n_seq; ++i) pool.push_back(seq("w" + std::to_string(i)));
    std::vector<CountTable> tables;
    for (std::size_t l = 0; l < n_lang; ++l) {
      CountTable table;
      table.language = "L" + std::to_string(l);
      table.sentence_count = 1 + rng() % 20;
      for (const auto& s : pool)
        if (rng() % 10 < 7) table.raw[s] = 1 + rng() % 100;
      tables.push_back(std::move(table));
    }
    double lo = 1.0 + static_cast<double>(rng() % 40) / 10.0;
    double hi = lo + static_cast<double>(rng() % 40) / 10.0;
    ExtractionConfig config;
    config.min_count_per_speaker = 0.0;
    config.max_sequences_per_language = 1000000;  // test the filter, not the cap
    config.alpha = lo;
    auto loose = extract_sets(tables, config);
    config.alpha = hi;
    auto strict = extract_sets(tables, config);
    for (std::size_t l = 0; l < loose.size(); ++l) {
      std::set<PhoneSequence> allowed(loose[l].sequences.begin(), loose[l].sequences.end());
      for (const auto& s : strict[l].sequences)
        check(allowed.count(s) == 1, "raising alpha added a sequence");
    }
  }
  return "boundary inclusive; sets antitone in alpha over 100 random tables";
}

// --- criteria 5-8: synthetic end-to-end protocol

SynthSpec benchmark_spec(std::uint64_t seed, double rate) {
  SynthSpec spec;
  spec.languages = {"FR", "GR", "IT", "SP"};
  spec.speakers_per_language = {31, 20, 20, 10};
  spec.sentences_per_speaker = 100;
  spec.sentence_length = 12;
  spec.inventory = {"aa", "ae", "ah", "ax", "b",  "d", "eh", "er", "ey", "f",
                    "g",  "ih", "iy", "k",  "l",  "m", "n",  "r",  "s",  "t"};
  spec.signatures["FR"].push_back(Signature{seq("ax b ax"), rate});
  spec.signatures["GR"].push_back(Signature{seq("iy g iy"), rate});
  spec.signatures["IT"].push_back(Signature{seq("eh r eh"), rate});
  spec.signatures["SP"].push_back(Signature{seq("s t s"), rate});
  spec.seed = seed;
  return spec;
}

struct EndToEndRun {
  std::uint64_t seed;
  EvaluationReport global_report;
  EvaluationReport local_report;
  std::string global_text, local_text, global_json, local_json;
};

std::vector<EndToEndRun> g_runs;  // stashed by criterion 5 for criteria 7 and 8

bool diagonal_dominant(const ConfusionMatrix& matrix) {
  for (std::size_t i = 0; i < matrix.languages.size(); ++i)
    for (std::size_t j = 0; j < matrix.languages.size(); ++j)
      if (i != j && !(matrix.cells[i][i] > matrix.cells[i][j])) return false;
  return true;
}

std::string run_synthetic_end_to_end() {
  g_runs.clear();
  const ExtractionConfig config;  // stock defaults
  const double beta = 2.5, epsilon = 1e-6;
  double min_global = 1.0, min_local = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto corpus = generate(benchmark_spec(seed, 1.0));
    EndToEndRun run;
    run.seed = seed;
    run.global_report = evaluate_loo(corpus, config, Mode::global, beta, epsilon);
    run.local_report = evaluate_loo(corpus, config, Mode::local, beta, epsilon);
    run.global_text = render_report(run.global_report);
    run.local_text = render_report(run.local_report);
    run.global_json = report_to_json(run.global_report).dump(2);
    run.local_json = report_to_json(run.local_report).dump(2);

    min_global = std::min(min_global, run.global_report.classification_rate);
    min_local = std::min(min_local, run.local_report.classification_rate);
    check(run.global_report.classification_rate >= 0.95,
          "seed " + std::to_string(seed) + ": global rate " +
              std::to_string(run.global_report.classification_rate) + " < 0.95");
    check(run.local_report.classification_rate >= 0.85,
          "seed " + std::to_string(seed) + ": local rate " +
              std::to_string(run.local_report.classification_rate) + " < 0.85");
    check(diagonal_dominant(run.global_report.matrix),
          "seed " + std::to_string(seed) + ": global matrix not diagonal-dominant");
    check(diagonal_dominant(run.local_report.matrix),
          "seed " + std::to_string(seed) + ": local matrix not diagonal-dominant");
    g_runs.push_back(std::move(run));
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "5 seeds; min global rate %.4f (>= 0.95), min local rate %.4f (>= 0.85)",
                min_global, min_local);
  return buf;
}

std::string run_signal_ablation() {
  const ExtractionConfig config;
  double max_rate = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto corpus = generate(benchmark_spec(seed, 0.0));
    auto report = evaluate_loo(corpus, config, Mode::global, 2.5, 1e-6);
    max_rate = std::max(max_rate, report.classification_rate);
    check(report.classification_rate <= 0.75,
          "seed " + std::to_string(seed) + ": rate " +
              std::to_string(report.classification_rate) + " above 3x chance (0.75)");
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "5 seeds; max rate without signal %.4f (chance 0.25, bound 0.75)",
                max_rate);
  return buf;
}

std::string run_loo_hygiene() {
  check(!g_runs.empty(), "criterion 5 artifacts unavailable");
  std::size_t folds_checked = 0;
  for (const auto& run : g_runs) {
    for (const EvaluationReport* report : {&run.global_report, &run.local_report}) {
      std::set<std::string> all;
      for (const auto& fold : report->folds) all.insert(fold.speaker_id);
      for (const auto& fold : report->folds) {
        std::set<std::string> train(fold.train_speaker_ids.begin(), fold.train_speaker_ids.end());
        check(train.count(fold.speaker_id) == 0,
              "held-out speaker " + fold.speaker_id + " appears in its own training tally");
        auto expected = all;
        expected.erase(fold.speaker_id);
        check(train == expected, "training tally is not the speaker set minus the held-out");
        ++folds_checked;
      }
    }
  }
  return std::to_string(folds_checked) + " fold audits clean";
}

std::string run_determinism() {
  check(!g_runs.empty(), "criterion 5 artifacts unavailable");
  const auto& reference = g_runs.front();
  auto corpus = generate(benchmark_spec(reference.seed, 1.0));
  const ExtractionConfig config;
  auto global_report = evaluate_loo(corpus, config, Mode::global, 2.5, 1e-6);
  auto local_report = evaluate_loo(corpus, config, Mode::local, 2.5, 1e-6);
  check(render_report(global_report) == reference.global_text, "global text report differs");
  check(render_report(local_report) == reference.local_text, "local text report differs");
  check(report_to_json(global_report).dump(2) == reference.global_json, "global json differs");
  check(report_to_json(local_report).dump(2) == reference.local_json, "local json differs");
  return "repeated runs byte-identical (text and json, both modes)";
}

}  // namespace

int main() {
  criterion(1, "Bayes consistency of the ML probabilities", 5.0, run_bayes_consistency);
  criterion(2, "log-space score vs direct-product oracle", 5.0, run_product_oracle);
  criterion(3, "counting vs brute-force enumeration", 10.0, run_counting_oracle);
  criterion(4, "dominance boundary and alpha monotonicity", 5.0, run_dominance_properties);
  criterion(5, "synthetic end-to-end leave-one-out protocol", 120.0, run_synthetic_end_to_end);
  criterion(6, "signal ablation stays near chance", 120.0, run_signal_ablation);
  criterion(7, "leave-one-out hygiene audit", 0.0, run_loo_hygiene);
  criterion(8, "determinism of repeated evaluations", 0.0, run_determinism);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
