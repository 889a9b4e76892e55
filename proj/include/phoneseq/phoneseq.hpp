#pragma once

#include "phoneseq/base.hpp"
#include "phoneseq/classifier.hpp"
#include "phoneseq/corpus.hpp"
#include "phoneseq/counting.hpp"
#include "phoneseq/evaluation.hpp"
#include "phoneseq/extraction.hpp"
#include "phoneseq/model.hpp"
#include "phoneseq/syngen.hpp"
