#include "hybridmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "hybridmt/common.hpp"

namespace hybridmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hypothesis_length += other.hypothesis_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats& BleuStats::operator-=(const BleuStats& other) {
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    matches[n] -= other.matches[n];
    totals[n] -= other.totals[n];
  }
  hypothesis_length -= other.hypothesis_length;
  reference_length -= other.reference_length;
  return *this;
}

BleuStats operator+(BleuStats a, const BleuStats& b) { return a += b; }

BleuStats accumulate_bleu(std::span<const std::string> hypothesis,
                          std::span<const std::vector<std::string>> references) {
  if (references.empty()) throw Error("BLEU needs at least one reference");
  BleuStats stats;
  stats.hypothesis_length = static_cast<long long>(hypothesis.size());

  long long best_len = static_cast<long long>(references[0].size());
  for (const auto& ref : references) {
    const auto len = static_cast<long long>(ref.size());
    const long long diff = std::llabs(len - stats.hypothesis_length);
    const long long best_diff = std::llabs(best_len - stats.hypothesis_length);
    if (diff < best_diff || (diff == best_diff && len < best_len)) best_len = len;
  }
  stats.reference_length = best_len;

  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    const NgramCounts hyp_counts = count_ngrams(hypothesis, n);
    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : count_ngrams(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    long long matched = 0, total = 0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      if (auto it = max_ref.find(gram); it != max_ref.end()) matched += std::min(count, it->second);
    }
    stats.matches[n - 1] = matched;
    stats.totals[n - 1] = total;
  }
  return stats;
}

double corpus_bleu(const BleuStats& stats) {
  if (stats.hypothesis_length <= 0) return 0.0;
  double log_precision = 0.0;
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    if (stats.matches[n] <= 0 || stats.totals[n] <= 0) return 0.0;
    log_precision += std::log(static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]));
  }
  log_precision /= static_cast<double>(kBleuOrder);
  const double ratio =
      static_cast<double>(stats.reference_length) / static_cast<double>(stats.hypothesis_length);
  const double log_brevity = std::min(0.0, 1.0 - ratio);
  return std::exp(log_precision + log_brevity);
}

double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::vector<std::string>>>& references) {
  if (references.empty()) throw Error("BLEU needs at least one reference set");
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    std::vector<std::vector<std::string>> refs;
    for (const auto& set : references) {
      if (set.size() != hypotheses.size()) {
        throw Error("reference set has " + std::to_string(set.size()) + " lines, hypotheses have " +
                    std::to_string(hypotheses.size()));
      }
      refs.push_back(set[i]);
    }
    total += accumulate_bleu(hypotheses[i], refs);
  }
  return corpus_bleu(total);
}

std::vector<std::string> merge_subwords(std::span<const std::string> tokens, std::string_view marker) {
  std::vector<std::string> out;
  bool continue_previous = false;
  for (const auto& token : tokens) {
    const bool joins = token.size() >= marker.size() &&
                       std::string_view(token).substr(token.size() - marker.size()) == marker;
    std::string piece = joins ? token.substr(0, token.size() - marker.size()) : token;
    if (continue_previous && !out.empty()) {
      out.back() += piece;
    } else {
      out.push_back(std::move(piece));
    }
    continue_previous = joins;
  }
  return out;
}

}  // namespace hybridmt
