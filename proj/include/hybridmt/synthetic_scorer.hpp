#pragma once

#include <cstdint>
#include <memory>

#include "hybridmt/scorer.hpp"
#include "hybridmt/vocabulary.hpp"

namespace hybridmt {

struct SyntheticConfig {
  // Scale of the pseudo-random logits; larger values give peakier distributions.
  double peaking = 2.0;
  // Attention logits are -sharpness * (j - center)^2 plus jitter in [0, jitter).
  double attention_sharpness = 2.0;
  double attention_jitter = 0.3;
  // Added to the sentence-end logit per emitted word beyond the source length.
  double end_bias = 1.0;
};

// Deterministic test double. Outputs depend only on (seed, source, full
// target prefix); the attention center sits on the current target position,
// clamped to the last source word, so attention drifts left to right.
class SyntheticScorer : public Scorer {
 public:
  SyntheticScorer(std::uint64_t seed, Vocabulary vocab, SyntheticConfig config = {});

  const Vocabulary& target_vocabulary() const override { return vocab_; }
  std::unique_ptr<SentenceScorer> bind(std::span<const std::string> source) const override;

  std::uint64_t seed() const { return seed_; }
  const SyntheticConfig& config() const { return config_; }

 private:
  std::uint64_t seed_;
  Vocabulary vocab_;
  SyntheticConfig config_;
};

std::unique_ptr<Scorer> make_synthetic_scorer(std::uint64_t seed, Vocabulary vocab,
                                              double peaking);

}  // namespace hybridmt
