#include "hybridmt/scorer.hpp"

#include <algorithm>
#include <cmath>

namespace hybridmt {

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

void log_softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  const double log_z = max + std::log(sum);
  for (double& v : values) v -= log_z;
}

}  // namespace hybridmt
