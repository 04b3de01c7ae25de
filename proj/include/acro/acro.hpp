#pragma once

#include "acro/error.hpp"
#include "acro/version.hpp"
#include "acro/corpus.hpp"
#include "acro/candidates.hpp"
#include "acro/dictionary.hpp"
#include "acro/nn/tensor.hpp"
#include "acro/nn/layers.hpp"
#include "acro/nn/checkpoint.hpp"
#include "acro/nn/trainer.hpp"
#include "acro/crf.hpp"
#include "acro/vocab.hpp"
#include "acro/tagger.hpp"
#include "acro/gad.hpp"
#include "acro/evaluation.hpp"
