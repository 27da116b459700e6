#include "hybridmt/synthetic_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace hybridmt {

namespace {

struct SyntheticState : ScorerState {
  std::vector<TokenId> prefix;  // every word fed so far, starting with <s>
};

class SyntheticSentenceScorer : public SentenceScorer {
 public:
  SyntheticSentenceScorer(const SyntheticScorer& parent, std::span<const std::string> source)
      : parent_(parent), length_(source.size()) {
    if (source.empty()) throw Error("cannot bind an empty source sentence");
    std::hash<std::string> hasher;
    source_seed_.push_back(static_cast<std::uint32_t>(parent.seed()));
    source_seed_.push_back(static_cast<std::uint32_t>(parent.seed() >> 32));
    for (const auto& word : source) {
      const auto h = static_cast<std::uint64_t>(hasher(word));
      source_seed_.push_back(static_cast<std::uint32_t>(h));
      source_seed_.push_back(static_cast<std::uint32_t>(h >> 32));
    }
  }

  std::size_t source_length() const override { return length_; }

  StateHandle initial_state() const override { return std::make_shared<SyntheticState>(); }

  StepOutput step(const StateHandle& state, TokenId prev_word) const override {
    const auto* s = dynamic_cast<const SyntheticState*>(state.get());
    if (s == nullptr) throw Error("state handle does not belong to this scorer");
    const auto& vocab = parent_.target_vocabulary();
    if (prev_word >= vocab.size()) throw Error("target token id outside vocabulary");
    const auto& config = parent_.config();

    auto next = std::make_shared<SyntheticState>();
    next->prefix = s->prefix;
    next->prefix.push_back(prev_word);

    std::vector<std::uint32_t> seed_data = source_seed_;
    seed_data.push_back(0x5eed);
    seed_data.insert(seed_data.end(), next->prefix.begin(), next->prefix.end());
    std::seed_seq seq(seed_data.begin(), seed_data.end());
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    StepOutput out;
    out.log_probs.resize(vocab.size());
    for (double& v : out.log_probs) v = config.peaking * (2.0 * unit(rng) - 1.0);
    // Number of target words emitted before this prediction.
    const auto position = static_cast<double>(next->prefix.size() - 1);
    const double overrun = position - static_cast<double>(length_);
    out.log_probs[Vocabulary::kEnd] += config.end_bias * overrun;
    log_softmax_inplace(out.log_probs);

    const double center = std::min(position, static_cast<double>(length_ - 1));
    out.attention.resize(length_);
    for (std::size_t j = 0; j < length_; ++j) {
      const double d = static_cast<double>(j) - center;
      out.attention[j] = -config.attention_sharpness * d * d + config.attention_jitter * unit(rng);
    }
    softmax_inplace(out.attention);
    out.next_state = std::move(next);
    return out;
  }

 private:
  const SyntheticScorer& parent_;
  std::size_t length_;
  std::vector<std::uint32_t> source_seed_;
};

}  // namespace

SyntheticScorer::SyntheticScorer(std::uint64_t seed, Vocabulary vocab, SyntheticConfig config)
    : seed_(seed), vocab_(std::move(vocab)), config_(config) {}

std::unique_ptr<SentenceScorer> SyntheticScorer::bind(std::span<const std::string> source) const {
  return std::make_unique<SyntheticSentenceScorer>(*this, source);
}

std::unique_ptr<Scorer> make_synthetic_scorer(std::uint64_t seed, Vocabulary vocab, double peaking) {
  SyntheticConfig config;
  config.peaking = peaking;
  return std::make_unique<SyntheticScorer>(seed, std::move(vocab), config);
}

}  // namespace hybridmt
