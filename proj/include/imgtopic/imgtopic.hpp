#pragma once

#include "imgtopic/corpus.hpp"
#include "imgtopic/embedding.hpp"
#include "imgtopic/error.hpp"
#include "imgtopic/eval.hpp"
#include "imgtopic/pipeline.hpp"
#include "imgtopic/query_repr.hpp"
#include "imgtopic/retrieval.hpp"
#include "imgtopic/selection.hpp"
#include "imgtopic/vocabmap.hpp"
