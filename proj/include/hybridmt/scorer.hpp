#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hybridmt/common.hpp"
#include "hybridmt/vocabulary.hpp"

namespace hybridmt {

// Opaque per-hypothesis decoder state. Implementations derive from this.
struct ScorerState {
  virtual ~ScorerState() = default;
};
using StateHandle = std::shared_ptr<const ScorerState>;

struct StepOutput {
  // Natural-log distribution over the target vocabulary.
  std::vector<double> log_probs;
  // Distribution over source positions.
  std::vector<double> attention;
  StateHandle next_state;
};

// A scorer bound to one source sentence. Immutable; `step` never mutates
// its input state.
class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  virtual std::size_t source_length() const = 0;
  virtual StateHandle initial_state() const = 0;
  // Distribution of the next target word after feeding `prev_word`
  // (Vocabulary::kBegin on the first step).
  virtual StepOutput step(const StateHandle& state, TokenId prev_word) const = 0;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const Vocabulary& target_vocabulary() const = 0;
  virtual std::unique_ptr<SentenceScorer> bind(std::span<const std::string> source) const = 0;
};

// Maximum-subtracted softmax / log-softmax, in place.
void softmax_inplace(std::span<double> values);
void log_softmax_inplace(std::span<double> values);

}  // namespace hybridmt
