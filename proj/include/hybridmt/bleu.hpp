#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace hybridmt {

inline constexpr std::size_t kBleuOrder = 4;

// Sufficient statistics for BLEU; additive across sentences.
struct BleuStats {
  std::array<long long, kBleuOrder> matches{};
  std::array<long long, kBleuOrder> totals{};
  long long hypothesis_length = 0;
  long long reference_length = 0;  // closest reference length, ties -> shorter

  BleuStats& operator+=(const BleuStats& other);
  BleuStats& operator-=(const BleuStats& other);
  bool operator==(const BleuStats&) const = default;
};

BleuStats operator+(BleuStats a, const BleuStats& b);

// Clipped n-gram counts against the per-n-gram maximum over references.
// Requires at least one reference.
BleuStats accumulate_bleu(std::span<const std::string> hypothesis,
                          std::span<const std::vector<std::string>> references);

// Geometric mean of the four precisions times the brevity penalty; 0 when
// any precision is 0 or the hypothesis is empty.
double corpus_bleu(const BleuStats& stats);

// Convenience over line-aligned corpora. references[r][i] is reference r of
// sentence i.
double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::vector<std::string>>>& references);

// Undo "@@ " subword joins.
std::vector<std::string> merge_subwords(std::span<const std::string> tokens,
                                        std::string_view marker = "@@");

}  // namespace hybridmt
