#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridmt/common.hpp"
#include "hybridmt/loglinear.hpp"
#include "hybridmt/ngram_lm.hpp"
#include "hybridmt/phrase_table.hpp"
#include "hybridmt/scorer.hpp"

namespace hybridmt {

struct SearchParams {
  std::size_t beam_word = 32;    // N_w
  std::size_t beam_phrase = 96;  // N_p
  double tau_focus = 0.3;
  double tau_cov = 0.7;  // +inf disables the coverage check
  double max_step_factor = 2.0;
  bool length_normalization = false;
  std::size_t nbest_size = 1;
  // Finished hypotheses are kept up to nbest_size * finished_factor unless
  // unbounded_finished is set.
  std::size_t finished_factor = 4;
  bool unbounded_finished = false;
  // Per word hypothesis cap on phrase candidates; 0 = no cap.
  std::size_t max_phrase_candidates = 0;
  bool record_attention = false;

  void validate() const;
  std::size_t max_steps(std::size_t source_length) const;
};

// Pending target phrase of a hypothesis in the phrase beam.
struct PhraseState {
  std::vector<TokenId> target;
  std::size_t emitted = 0;  // k
  bool operator==(const PhraseState&) const = default;
  auto operator<=>(const PhraseState&) const = default;
};

// One decoding step of a derivation, chained back to the start.
struct TraceNode {
  std::shared_ptr<const TraceNode> parent;
  // Set on the step where a move begins.
  std::shared_ptr<const DerivationMove> move_started;
  // Binary coverage the phrase was checked against (phrase moves only).
  std::vector<std::size_t> covered_at_creation;
  std::vector<double> attention;  // empty unless attention is recorded
};

struct Hypothesis {
  std::vector<TokenId> target;  // extended target ids, see TargetLexicon
  double score = 0.0;           // Q(h)
  FeatureVector features;
  std::vector<double> coverage;  // C(h, .)
  LmHistory lm_history;
  std::optional<PhraseState> phrase;
  StateHandle state;
  std::shared_ptr<const TraceNode> trace;

  std::size_t steps() const { return target.size(); }
  bool finished() const;
};

// Target vocabulary plus out-of-vocabulary words introduced by phrases for
// one sentence. Extra words score as UNK in the neural model.
class TargetLexicon {
 public:
  TargetLexicon(const Vocabulary& vocab, const ArpaModel* lm);

  TokenId intern(const std::string& word);
  const std::string& word(TokenId id) const;
  TokenId scorer_id(TokenId id) const { return id < vocab_->size() ? id : Vocabulary::kUnknown; }
  LmWordId lm_id(TokenId id) const;
  std::size_t vocab_size() const { return vocab_->size(); }

 private:
  const Vocabulary* vocab_;
  const ArpaModel* lm_;
  std::vector<std::string> extra_;
  std::unordered_map<std::string, TokenId> extra_index_;
  std::vector<LmWordId> lm_ids_;
};

struct NBestEntry {
  std::size_t rank = 0;
  std::vector<std::string> target;  // without the sentence-end token
  double score = 0.0;               // Q
  double ranking_score = 0.0;       // Q, or Q / length under length normalization
  FeatureVector features;
  DerivationRecord derivation;
  // One row per target step (including sentence end), one column per source word.
  std::vector<std::vector<double>> attention;
  bool finished = true;
  std::size_t length = 0;  // scorer steps, including sentence end
};

using NBestList = std::vector<NBestEntry>;

// Called after every beam step with the pruned beams; used by tests.
struct SearchObserver {
  virtual ~SearchObserver() = default;
  virtual void on_step(std::size_t step, std::span<const Hypothesis> word_beam,
                       std::span<const Hypothesis> phrase_beam,
                       std::span<const Hypothesis> newly_finished) = 0;
};

// Returns the argmax source position with attention > tau_focus, lowest index
// on ties; nullopt if no position qualifies.
std::optional<std::size_t> find_focus(std::span<const double> attention, double tau_focus);

// Positions whose accumulated attention exceeds tau_cov.
std::vector<std::size_t> binary_coverage(std::span<const double> coverage, double tau_cov);

// Keeps the best hypothesis per (target, phrase state), then the top `size`
// by score; ties broken lexicographically on target, then phrase state.
std::vector<Hypothesis> prune_and_recombine(std::vector<Hypothesis> candidates, std::size_t size);

// Score used to rank finished hypotheses.
double ranking_score(const Hypothesis& h, bool length_normalization);

// Expansion primitives for one step. `outputs[i]` belongs to beam entry i.
struct StepContext {
  const FeatureWeights* weights = nullptr;
  const ArpaModel* lm = nullptr;
  const TranslationOptions* options = nullptr;
  const SearchParams* params = nullptr;
  TargetLexicon* lexicon = nullptr;
  std::size_t source_length = 0;
  std::span<const std::string> source;
};

std::vector<Hypothesis> generate_word_hypotheses(std::span<const Hypothesis> word_beam,
                                                 std::span<const StepOutput> outputs,
                                                 const StepContext& ctx);
std::vector<Hypothesis> generate_phrase_hypotheses(std::span<const Hypothesis> word_beam,
                                                   std::span<const StepOutput> outputs,
                                                   const StepContext& ctx);
std::vector<Hypothesis> advance_phrase_hypotheses(std::span<const Hypothesis> phrase_beam,
                                                  std::span<const StepOutput> outputs,
                                                  const StepContext& ctx);

// Hybrid beam search over one sentence. `lm` may be null.
NBestList decode(std::span<const std::string> source, const Scorer& scorer,
                 const TranslationOptions& options, const ArpaModel* lm,
                 const FeatureWeights& weights, const SearchParams& params,
                 SearchObserver* observer = nullptr);

DerivationRecord derivation_of(const Hypothesis& h);

}  // namespace hybridmt
