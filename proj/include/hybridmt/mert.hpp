#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hybridmt/bleu.hpp"
#include "hybridmt/loglinear.hpp"

namespace hybridmt {

struct PoolCandidate {
  std::vector<std::string> target;
  FeatureVector features;
  BleuStats stats;  // against the sentence's references
};

// Per-sentence n-best candidates merged across tuning iterations.
class NBestPool {
 public:
  // references[i] holds all references of sentence i.
  explicit NBestPool(std::vector<std::vector<std::vector<std::string>>> references);

  // Returns the number of new (non-duplicate) candidates.
  std::size_t add(std::size_t sentence, std::vector<std::string> target,
                  const FeatureVector& features);

  std::size_t num_sentences() const { return sentences_.size(); }
  std::size_t num_candidates() const;
  std::span<const PoolCandidate> candidates(std::size_t sentence) const { return sentences_[sentence]; }
  const std::vector<std::vector<std::string>>& references(std::size_t sentence) const {
    return references_[sentence];
  }

 private:
  using Key = std::pair<std::vector<std::string>, std::array<double, kNumFeatures>>;
  std::vector<std::vector<std::vector<std::string>>> references_;
  std::vector<std::vector<PoolCandidate>> sentences_;
  std::vector<std::set<Key>> seen_;
};

// Index of the highest-scoring candidate per sentence (lowest index on ties);
// sentences without candidates get SIZE_MAX.
std::vector<std::size_t> select_candidates(const NBestPool& pool, std::span<const double> weights);

// Corpus BLEU of the per-sentence argmax under `weights`.
double pool_bleu(const NBestPool& pool, std::span<const double> weights);

struct LineSearchResult {
  double gamma = 0.0;
  double bleu = 0.0;
  double bleu_at_zero = 0.0;
  // Range of gamma values with the same optimal selection.
  double interval_low = 0.0;
  double interval_high = 0.0;
};

// Exact line search along weights + gamma * direction over the upper envelopes
// of the candidates' score lines. Throws ConfigError on a zero direction.
LineSearchResult line_search(const NBestPool& pool, std::span<const double> weights,
                             std::span<const double> direction);

struct MertOptions {
  std::size_t restarts = 1;
  std::size_t random_directions = 8;
  std::uint64_t seed = 1;
  double min_improvement = 1e-7;
  std::size_t max_rounds = 100;
};

struct MertResult {
  FeatureWeights weights;
  double bleu = 0.0;
  double initial_bleu = 0.0;
};

// Coordinate plus random-direction ascent, best over restarts. Never returns
// weights scoring below `init` on the pool.
MertResult optimize(const NBestPool& pool, const FeatureWeights& init, const MertOptions& options = {});

}  // namespace hybridmt
