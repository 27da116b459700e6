#include "hybridmt/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hybridmt {

namespace {

// Recombination identity: emitted target plus pending phrase obligations.
int compare_keys(const Hypothesis& a, const Hypothesis& b) {
  if (a.target != b.target) return a.target < b.target ? -1 : 1;
  if (a.phrase.has_value() != b.phrase.has_value()) return a.phrase.has_value() ? 1 : -1;
  if (a.phrase && *a.phrase != *b.phrase) return *a.phrase < *b.phrase ? -1 : 1;
  return 0;
}

bool better_ranked(const Hypothesis& a, const Hypothesis& b, bool length_normalization) {
  const double ra = ranking_score(a, length_normalization);
  const double rb = ranking_score(b, length_normalization);
  if (ra != rb) return ra > rb;
  return compare_keys(a, b) < 0;
}

void add_attention(std::vector<double>& coverage, std::span<const double> attention) {
  for (std::size_t j = 0; j < coverage.size(); ++j) coverage[j] += attention[j];
}

std::shared_ptr<const TraceNode> make_trace(const Hypothesis& parent, const StepOutput& out,
                                            const StepContext& ctx,
                                            std::shared_ptr<const DerivationMove> move,
                                            std::vector<std::size_t> covered = {}) {
  auto node = std::make_shared<TraceNode>();
  node->parent = parent.trace;
  node->move_started = std::move(move);
  node->covered_at_creation = std::move(covered);
  if (ctx.params->record_attention) node->attention = out.attention;
  return node;
}

TokenId scorer_input(const Hypothesis& h, const TargetLexicon& lexicon) {
  return h.target.empty() ? Vocabulary::kBegin : lexicon.scorer_id(h.target.back());
}

}  // namespace

void SearchParams::validate() const {
  if (beam_word < 1) throw ConfigError("word beam size must be >= 1");
  if (!(tau_focus >= 0.0 && tau_focus <= 1.0)) throw ConfigError("tau_focus must be in [0, 1]");
  if (!(tau_cov > 0.0)) throw ConfigError("tau_cov must be > 0 (inf disables the coverage check)");
  if (!(max_step_factor > 0.0) || !std::isfinite(max_step_factor)) {
    throw ConfigError("max_step_factor must be a positive number");
  }
  if (nbest_size < 1) throw ConfigError("nbest_size must be >= 1");
  if (finished_factor < 1) throw ConfigError("finished_factor must be >= 1");
}

std::size_t SearchParams::max_steps(std::size_t source_length) const {
  const double steps = std::ceil(max_step_factor * static_cast<double>(source_length));
  return std::max<std::size_t>(1, static_cast<std::size_t>(steps));
}

bool Hypothesis::finished() const {
  return !phrase && !target.empty() && target.back() == Vocabulary::kEnd;
}

TargetLexicon::TargetLexicon(const Vocabulary& vocab, const ArpaModel* lm) : vocab_(&vocab), lm_(lm) {
  if (lm_ != nullptr) {
    lm_ids_.reserve(vocab.size());
    for (const auto& token : vocab.tokens()) lm_ids_.push_back(lm_->index(token));
  }
}

TokenId TargetLexicon::intern(const std::string& word) {
  if (auto id = vocab_->find(word)) return *id;
  auto [it, inserted] =
      extra_index_.emplace(word, static_cast<TokenId>(vocab_->size() + extra_.size()));
  if (inserted) {
    extra_.push_back(word);
    if (lm_ != nullptr) lm_ids_.push_back(lm_->index(word));
  }
  return it->second;
}

const std::string& TargetLexicon::word(TokenId id) const {
  return id < vocab_->size() ? vocab_->token(id) : extra_.at(id - vocab_->size());
}

LmWordId TargetLexicon::lm_id(TokenId id) const { return lm_ids_.at(id); }

std::optional<std::size_t> find_focus(std::span<const double> attention, double tau_focus) {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < attention.size(); ++j) {
    if (attention[j] > tau_focus && (!best || attention[j] > attention[*best])) best = j;
  }
  return best;
}

std::vector<std::size_t> binary_coverage(std::span<const double> coverage, double tau_cov) {
  std::vector<std::size_t> covered;
  for (std::size_t j = 0; j < coverage.size(); ++j) {
    if (coverage[j] > tau_cov) covered.push_back(j);
  }
  return covered;
}

double ranking_score(const Hypothesis& h, bool length_normalization) {
  if (!length_normalization || h.target.empty()) return h.score;
  return h.score / static_cast<double>(h.target.size());
}

std::vector<Hypothesis> prune_and_recombine(std::vector<Hypothesis> candidates, std::size_t size) {
  std::sort(candidates.begin(), candidates.end(), [](const Hypothesis& a, const Hypothesis& b) {
    const int c = compare_keys(a, b);
    if (c != 0) return c < 0;
    return a.score > b.score;
  });
  auto last = std::unique(candidates.begin(), candidates.end(),
                          [](const Hypothesis& a, const Hypothesis& b) { return compare_keys(a, b) == 0; });
  candidates.erase(last, candidates.end());
  auto by_score = [](const Hypothesis& a, const Hypothesis& b) { return better_ranked(a, b, false); };
  if (candidates.size() > size) {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(size),
                      candidates.end(), by_score);
    candidates.resize(size);
  } else {
    std::sort(candidates.begin(), candidates.end(), by_score);
  }
  return candidates;
}

std::vector<Hypothesis> generate_word_hypotheses(std::span<const Hypothesis> word_beam,
                                                 std::span<const StepOutput> outputs,
                                                 const StepContext& ctx) {
  const FeatureWeights& w = *ctx.weights;
  const double lambda_nmt = w[Feature::kNmt];

  struct Pair {
    double selection;
    std::size_t hyp;
    TokenId word;
  };
  std::vector<Pair> pairs;
  const std::size_t vocab_size = ctx.lexicon->vocab_size();
  pairs.reserve(word_beam.size() * vocab_size);
  for (std::size_t i = 0; i < word_beam.size(); ++i) {
    const auto& log_probs = outputs[i].log_probs;
    for (TokenId e = 0; e < vocab_size; ++e) {
      if (e == Vocabulary::kBegin) continue;
      pairs.push_back({word_beam[i].score + lambda_nmt * log_probs[e], i, e});
    }
  }
  // Selection ignores the LM and word penalty terms.
  auto better = [&](const Pair& a, const Pair& b) {
    if (a.selection != b.selection) return a.selection > b.selection;
    const auto& ta = word_beam[a.hyp].target;
    const auto& tb = word_beam[b.hyp].target;
    if (ta != tb) return ta < tb;
    return a.word < b.word;
  };
  const std::size_t keep = std::min(ctx.params->beam_word, pairs.size());
  std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(keep), pairs.end(), better);
  pairs.resize(keep);

  std::vector<Hypothesis> out;
  out.reserve(keep);
  for (const Pair& p : pairs) {
    const Hypothesis& h = word_beam[p.hyp];
    const StepOutput& step = outputs[p.hyp];
    Hypothesis next;
    next.target = h.target;
    next.target.push_back(p.word);
    next.features = h.features;
    const double log_prob = step.log_probs[p.word];
    double lm_score = 0.0;
    if (ctx.lm != nullptr) {
      const LmWordId lm_word = ctx.lexicon->lm_id(p.word);
      lm_score = ctx.lm->score_word(h.lm_history, lm_word);
      next.lm_history = ctx.lm->extend(h.lm_history, lm_word);
    }
    next.features[Feature::kNmt] += log_prob;
    next.features[Feature::kLm] += lm_score;
    next.features[Feature::kWordPenalty] += 1.0;
    next.score = h.score + lambda_nmt * log_prob + w[Feature::kLm] * lm_score + w[Feature::kWordPenalty];
    next.coverage = h.coverage;
    add_attention(next.coverage, step.attention);
    next.state = step.next_state;
    auto move = std::make_shared<DerivationMove>();
    move->kind = DerivationMove::Kind::kWord;
    move->target = {ctx.lexicon->word(p.word)};
    next.trace = make_trace(h, step, ctx, std::move(move));
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<Hypothesis> generate_phrase_hypotheses(std::span<const Hypothesis> word_beam,
                                                   std::span<const StepOutput> outputs,
                                                   const StepContext& ctx) {
  std::vector<Hypothesis> out;
  if (ctx.options == nullptr || ctx.options->empty()) return out;
  const FeatureWeights& w = *ctx.weights;
  const Feature penalty_feature =
      w.split_word_penalty ? Feature::kPhraseWordPenalty : Feature::kWordPenalty;

  for (std::size_t i = 0; i < word_beam.size(); ++i) {
    const Hypothesis& h = word_beam[i];
    const StepOutput& step = outputs[i];
    const auto focus = find_focus(step.attention, ctx.params->tau_focus);
    if (!focus) continue;
    const auto covered = binary_coverage(h.coverage, ctx.params->tau_cov);
    const auto is_covered = [&](std::size_t j) {
      return std::binary_search(covered.begin(), covered.end(), j);
    };

    std::vector<Hypothesis> from_h;
    for (std::size_t length = 1; *focus + length <= ctx.source_length; ++length) {
      if (is_covered(*focus + length - 1)) break;
      for (const PhrasePair& pair : ctx.options->at(*focus, length)) {
        std::vector<TokenId> target;
        target.reserve(pair.target.size());
        for (const auto& word : pair.target) target.push_back(ctx.lexicon->intern(word));

        Hypothesis next;
        next.target = h.target;
        next.target.push_back(target[0]);
        next.features = h.features;
        const double log_prob = step.log_probs[ctx.lexicon->scorer_id(target[0])];
        double lm_score = 0.0;
        if (ctx.lm != nullptr) {
          std::vector<LmWordId> lm_words;
          lm_words.reserve(target.size());
          for (TokenId t : target) lm_words.push_back(ctx.lexicon->lm_id(t));
          lm_score = ctx.lm->score_phrase(h.lm_history, lm_words, &next.lm_history);
        }
        const auto words = static_cast<double>(target.size());
        const auto source_words = static_cast<double>(length);
        next.features[Feature::kNmt] += log_prob;
        next.features[Feature::kLm] += lm_score;
        next.features[penalty_feature] += words;
        next.features[Feature::kPhrasePenalty] += 1.0;
        next.features[Feature::kSourceCoverage] += source_words;
        next.features[Feature::kPhraseSourceGivenTarget] += pair.log_p_source_given_target;
        next.features[Feature::kPhraseTargetGivenSource] += pair.log_p_target_given_source;
        next.score = h.score + w[Feature::kNmt] * log_prob + w[Feature::kLm] * lm_score +
                     words * w[penalty_feature] + w[Feature::kPhrasePenalty] +
                     source_words * w[Feature::kSourceCoverage] +
                     w[Feature::kPhraseSourceGivenTarget] * pair.log_p_source_given_target +
                     w[Feature::kPhraseTargetGivenSource] * pair.log_p_target_given_source;
        next.coverage = h.coverage;
        add_attention(next.coverage, step.attention);
        next.state = step.next_state;
        if (target.size() > 1) next.phrase = PhraseState{std::move(target), 1};

        auto move = std::make_shared<DerivationMove>();
        move->kind = DerivationMove::Kind::kPhrase;
        move->target = pair.target;
        move->source = pair.source;
        move->source_start = *focus;
        next.trace = make_trace(h, step, ctx, std::move(move), covered);
        from_h.push_back(std::move(next));
      }
    }
    const std::size_t cap = ctx.params->max_phrase_candidates;
    if (cap > 0 && from_h.size() > cap) {
      std::partial_sort(from_h.begin(), from_h.begin() + static_cast<std::ptrdiff_t>(cap), from_h.end(),
                        [](const Hypothesis& a, const Hypothesis& b) { return better_ranked(a, b, false); });
      from_h.resize(cap);
    }
    std::move(from_h.begin(), from_h.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Hypothesis> advance_phrase_hypotheses(std::span<const Hypothesis> phrase_beam,
                                                  std::span<const StepOutput> outputs,
                                                  const StepContext& ctx) {
  std::vector<Hypothesis> out;
  out.reserve(phrase_beam.size());
  const double lambda_nmt = (*ctx.weights)[Feature::kNmt];
  for (std::size_t i = 0; i < phrase_beam.size(); ++i) {
    const Hypothesis& h = phrase_beam[i];
    if (!h.phrase || h.phrase->emitted >= h.phrase->target.size()) {
      throw Error("phrase beam entry without a pending phrase");
    }
    const StepOutput& step = outputs[i];
    const TokenId word = h.phrase->target[h.phrase->emitted];
    const double log_prob = step.log_probs[ctx.lexicon->scorer_id(word)];

    Hypothesis next;
    next.target = h.target;
    next.target.push_back(word);
    next.features = h.features;
    next.features[Feature::kNmt] += log_prob;
    next.score = h.score + lambda_nmt * log_prob;
    next.coverage = h.coverage;
    add_attention(next.coverage, step.attention);
    next.lm_history = h.lm_history;
    next.state = step.next_state;
    if (h.phrase->emitted + 1 < h.phrase->target.size()) {
      next.phrase = PhraseState{h.phrase->target, h.phrase->emitted + 1};
    }
    next.trace = make_trace(h, step, ctx, nullptr);
    out.push_back(std::move(next));
  }
  return out;
}

DerivationRecord derivation_of(const Hypothesis& h) {
  std::vector<const TraceNode*> nodes;
  for (const TraceNode* n = h.trace.get(); n != nullptr; n = n->parent.get()) nodes.push_back(n);
  std::reverse(nodes.begin(), nodes.end());
  DerivationRecord record;
  std::size_t emitted = 0;
  for (const TraceNode* n : nodes) {
    if (n->move_started) record.moves.push_back(*n->move_started);
    ++emitted;
  }
  // An unfinished hypothesis may be mid-phrase; keep only the emitted part.
  std::size_t total = 0;
  for (auto& m : record.moves) {
    if (total + m.target.size() > emitted) m.pending = total + m.target.size() - emitted;
    total += m.target.size();
  }
  return record;
}

namespace {

NBestEntry make_entry(const Hypothesis& h, const TargetLexicon& lexicon, const SearchParams& params) {
  NBestEntry e;
  e.score = h.score;
  e.ranking_score = ranking_score(h, params.length_normalization);
  e.features = h.features;
  e.finished = h.finished();
  e.length = h.target.size();
  for (std::size_t i = 0; i < h.target.size(); ++i) {
    if (i + 1 == h.target.size() && e.finished) break;
    e.target.push_back(lexicon.word(h.target[i]));
  }
  e.derivation = derivation_of(h);
  if (params.record_attention) {
    for (const TraceNode* n = h.trace.get(); n != nullptr; n = n->parent.get()) {
      e.attention.push_back(n->attention);
    }
    std::reverse(e.attention.begin(), e.attention.end());
  }
  return e;
}

}  // namespace

NBestList decode(std::span<const std::string> source, const Scorer& scorer,
                 const TranslationOptions& options, const ArpaModel* lm,
                 const FeatureWeights& weights, const SearchParams& params,
                 SearchObserver* observer) {
  params.validate();
  weights.validate();
  if (source.empty()) throw Error("cannot decode an empty source sentence");
  const std::size_t length = source.size();
  const auto sentence = scorer.bind(source);
  TargetLexicon lexicon(scorer.target_vocabulary(), lm);

  StepContext ctx;
  ctx.weights = &weights;
  ctx.lm = lm;
  ctx.options = &options;
  ctx.params = &params;
  ctx.lexicon = &lexicon;
  ctx.source_length = length;
  ctx.source = source;

  Hypothesis initial;
  initial.coverage.assign(length, 0.0);
  if (lm != nullptr) initial.lm_history = lm->begin_sentence();
  initial.state = sentence->initial_state();

  std::vector<Hypothesis> word_beam{std::move(initial)};
  std::vector<Hypothesis> phrase_beam;
  std::vector<Hypothesis> finished;
  const std::size_t finished_limit = params.nbest_size * params.finished_factor;
  auto finished_order = [&](const Hypothesis& a, const Hypothesis& b) {
    return better_ranked(a, b, params.length_normalization);
  };

  const std::size_t max_steps = params.max_steps(length);
  for (std::size_t step = 1; step <= max_steps; ++step) {
    if (word_beam.empty() && phrase_beam.empty()) break;

    std::vector<StepOutput> word_outputs;
    word_outputs.reserve(word_beam.size());
    for (const auto& h : word_beam) word_outputs.push_back(sentence->step(h.state, scorer_input(h, lexicon)));
    std::vector<StepOutput> phrase_outputs;
    phrase_outputs.reserve(phrase_beam.size());
    for (const auto& h : phrase_beam) {
      phrase_outputs.push_back(sentence->step(h.state, scorer_input(h, lexicon)));
    }

    std::vector<Hypothesis> next_word = generate_word_hypotheses(word_beam, word_outputs, ctx);
    std::vector<Hypothesis> next_phrase;
    auto route = [&](std::vector<Hypothesis>&& candidates) {
      for (auto& c : candidates) (c.phrase ? next_phrase : next_word).push_back(std::move(c));
    };
    route(generate_phrase_hypotheses(word_beam, word_outputs, ctx));
    route(advance_phrase_hypotheses(phrase_beam, phrase_outputs, ctx));

    next_word = prune_and_recombine(std::move(next_word), params.beam_word);
    next_phrase = prune_and_recombine(std::move(next_phrase), params.beam_phrase);

    std::vector<Hypothesis> done;
    auto split = std::stable_partition(next_word.begin(), next_word.end(),
                                       [](const Hypothesis& h) { return !h.finished(); });
    std::move(split, next_word.end(), std::back_inserter(done));
    next_word.erase(split, next_word.end());

    if (observer != nullptr) observer->on_step(step, next_word, next_phrase, done);

    std::move(done.begin(), done.end(), std::back_inserter(finished));
    if (!params.unbounded_finished && finished.size() > finished_limit) {
      std::partial_sort(finished.begin(), finished.begin() + static_cast<std::ptrdiff_t>(finished_limit),
                        finished.end(), finished_order);
      finished.resize(finished_limit);
    }
    word_beam = std::move(next_word);
    phrase_beam = std::move(next_phrase);
  }

  NBestList result;
  std::vector<Hypothesis>* pool = &finished;
  std::vector<Hypothesis> unfinished;
  if (finished.empty()) {
    unfinished = std::move(word_beam);
    std::move(phrase_beam.begin(), phrase_beam.end(), std::back_inserter(unfinished));
    pool = &unfinished;
  }
  std::sort(pool->begin(), pool->end(), finished_order);
  const std::size_t n = finished.empty() ? std::min<std::size_t>(1, pool->size())
                                         : std::min(params.nbest_size, pool->size());
  for (std::size_t i = 0; i < n; ++i) {
    NBestEntry e = make_entry((*pool)[i], lexicon, params);
    e.rank = i + 1;
    result.push_back(std::move(e));
  }
  return result;
}

}  // namespace hybridmt
