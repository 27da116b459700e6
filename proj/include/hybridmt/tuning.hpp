#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hybridmt/loglinear.hpp"
#include "hybridmt/mert.hpp"
#include "hybridmt/search.hpp"

namespace hybridmt {

// Decodes the whole dev set under the given weights, one n-best list per sentence.
using DevDecoder = std::function<std::vector<NBestList>(const FeatureWeights&)>;

struct TuningOptions {
  std::size_t iterations = 5;
  MertOptions mert;
};

struct TuningIteration {
  std::size_t iteration = 0;
  double decode_bleu = 0.0;  // 1-best of this iteration's decode
  double pool_bleu_before = 0.0;
  double pool_bleu_after = 0.0;
  std::size_t pool_size = 0;
};

struct TuningResult {
  FeatureWeights weights;
  std::vector<TuningIteration> iterations;
  bool aborted = false;
  std::string error;
};

// decode -> merge into pool -> optimize, repeated. A decoder exception stops
// the loop and keeps the last weights produced.
TuningResult run_tuning(const DevDecoder& decoder, NBestPool& pool, const FeatureWeights& init,
                        const TuningOptions& options, std::ostream* log = nullptr);

}  // namespace hybridmt
