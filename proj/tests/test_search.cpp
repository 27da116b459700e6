#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "hybridmt/search.hpp"
#include "hybridmt/synthetic_scorer.hpp"
#include "oracles/search_oracles.hpp"
#include "support/instances.hpp"
#include "support/scripted_scorer.hpp"

using namespace hybridmt;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// <s> </s> <unk> a b
struct StepFixture {
  Vocabulary vocab = Vocabulary::from_words({"a", "b"});
  ArpaModel lm = testing_support::parse_arpa(
      "\\data\\\nngram 1=5\n\\1-grams:\n-99 <s>\n-3.0 a\n-0.1 b\n-1.0 </s>\n-2.0 <unk>\n\\end\\\n");
  std::vector<std::string> source{"f0", "f1", "f2"};
  TranslationOptions options;
  FeatureWeights weights = FeatureWeights::hybrid_defaults();
  SearchParams params;
  TargetLexicon lexicon{vocab, &lm};

  StepFixture() {
    options.set({0, 1}, {PhrasePair{{"f0"}, {"a"}, std::log(0.9), std::log(0.8)}});
    options.set({0, 2}, {PhrasePair{{"f0", "f1"}, {"b", "a"}, std::log(0.5), std::log(0.4)}});
    options.set({1, 1}, {PhrasePair{{"f1"}, {"zz"}, std::log(0.3), std::log(0.3)}});
  }

  StepContext context() {
    StepContext ctx;
    ctx.weights = &weights;
    ctx.lm = &lm;
    ctx.options = &options;
    ctx.params = &params;
    ctx.lexicon = &lexicon;
    ctx.source_length = source.size();
    ctx.source = source;
    return ctx;
  }

  Hypothesis root(std::vector<double> coverage = {0.0, 0.0, 0.0}) const {
    Hypothesis h;
    h.coverage = std::move(coverage);
    h.lm_history = lm.begin_sentence();
    return h;
  }

  // probs over <s> </s> <unk> a b
  static StepOutput output(std::vector<double> probs, std::vector<double> attention) {
    StepOutput out;
    for (double p : probs) out.log_probs.push_back(std::log(p));
    out.attention = std::move(attention);
    return out;
  }
};

Hypothesis with_target(std::vector<TokenId> target, double score) {
  Hypothesis h;
  h.target = std::move(target);
  h.score = score;
  return h;
}

}  // namespace

TEST(Focus, ArgmaxAboveThreshold) {
  const std::vector<double> a{0.1, 0.5, 0.4};
  EXPECT_EQ(find_focus(a, 0.3), 1u);
  EXPECT_EQ(find_focus(a, 0.5), std::nullopt);
  const std::vector<double> flat{0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(find_focus(flat, 0.3), std::nullopt);
  EXPECT_EQ(find_focus(flat, 0.0), 0u);
}

TEST(Focus, TiesGoToTheLowestIndex) {
  const std::vector<double> a{0.1, 0.45, 0.45};
  EXPECT_EQ(find_focus(a, 0.3), 1u);
}

TEST(Coverage, StrictThreshold) {
  const std::vector<double> c{0.8, 0.7, 0.71, 0.0};
  EXPECT_EQ(binary_coverage(c, 0.7), (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(binary_coverage(c, kInf).empty());
}

TEST(Prune, KeepsBestPerKeyThenTopK) {
  std::vector<Hypothesis> c{with_target({3}, -1.0), with_target({3}, -0.5), with_target({4}, -2.0),
                            with_target({4, 3}, -0.1)};
  auto out = prune_and_recombine(c, 10);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].target, (std::vector<TokenId>{4, 3}));
  EXPECT_EQ(out[1].score, -0.5);
  EXPECT_EQ(out[2].score, -2.0);
  out = prune_and_recombine(c, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, -0.1);
}

TEST(Prune, PhraseStateIsPartOfTheKey) {
  Hypothesis plain = with_target({3}, -1.0);
  Hypothesis pending = with_target({3}, -2.0);
  pending.phrase = PhraseState{{3, 4}, 1};
  Hypothesis other = with_target({3}, -3.0);
  other.phrase = PhraseState{{3, 3}, 1};
  EXPECT_EQ(prune_and_recombine({plain, pending, other}, 10).size(), 3u);
}

TEST(Prune, TiesBrokenByTarget) {
  auto out = prune_and_recombine({with_target({4}, -1.0), with_target({3}, -1.0)}, 1);
  EXPECT_EQ(out[0].target, (std::vector<TokenId>{3}));
}

TEST(Prune, MatchesReferenceOnRandomCandidates) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Hypothesis> c;
    for (int i = 0; i < 33; ++i) {
      Hypothesis h = with_target({static_cast<TokenId>(3 + rng() % 3), static_cast<TokenId>(3 + rng() % 3)},
                                 -static_cast<double>(rng() % 50) / 7.0);
      if (rng() % 3 == 0) h.phrase = PhraseState{{3, 4, static_cast<TokenId>(3 + rng() % 2)}, 2};
      c.push_back(h);
    }
    // reference: best per key in a map, then full sort
    std::map<std::pair<std::vector<TokenId>, std::optional<PhraseState>>, double> best;
    for (const auto& h : c) {
      auto key = std::make_pair(h.target, h.phrase);
      auto it = best.find(key);
      if (it == best.end() || h.score > it->second) best[key] = h.score;
    }
    std::vector<std::pair<double, decltype(best)::key_type>> ranked;
    for (const auto& [k, s] : best) ranked.push_back({s, k});
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t size = 1 + rng() % 12;
    const auto out = prune_and_recombine(c, size);
    ASSERT_EQ(out.size(), std::min(size, ranked.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out[i].score, ranked[i].first);
      EXPECT_EQ(std::make_pair(out[i].target, out[i].phrase), ranked[i].second);
    }
  }
}

TEST(WordExpansion, SelectionIgnoresTheLm) {
  StepFixture s;
  s.params.beam_word = 1;
  s.weights[Feature::kLm] = 1.0;
  const std::vector<Hypothesis> beam{s.root()};
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.2, 0.3, 0.5})};
  const auto out = generate_word_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(out.size(), 1u);
  // b would win on LM (-0.1 vs -3.0), but selection uses Q + nmt only
  EXPECT_EQ(out[0].target, (std::vector<TokenId>{3}));
}

TEST(WordExpansion, ScoreAndFeatures) {
  StepFixture s;
  s.params.beam_word = 10;
  const std::vector<Hypothesis> beam{s.root()};
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.2, 0.3, 0.5})};
  const auto out = generate_word_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(out.size(), 4u);  // every word but <s>
  for (const auto& h : out) EXPECT_NE(h.target[0], Vocabulary::kBegin);
  const auto& a = out[0];
  const double lm = std::log(10.0) * -3.0;
  EXPECT_NEAR(a.score, std::log(0.5) + 0.5 * lm + 0.5, 1e-12);
  EXPECT_EQ(a.features[Feature::kWordPenalty], 1.0);
  EXPECT_EQ(a.coverage, (std::vector<double>{0.2, 0.3, 0.5}));
  const auto moves = derivation_of(a).moves;
  ASSERT_EQ(moves.size(), 1u);
  EXPECT_FALSE(moves[0].is_phrase());
}

TEST(PhraseExpansion, HandScore) {
  StepFixture s;
  const std::vector<Hypothesis> beam{s.root()};
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  const auto out = generate_phrase_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(out.size(), 2u);  // spans (0,1) and (0,2); focus is 0
  const Hypothesis& one = out[0];
  const Hypothesis& two = out[1];
  EXPECT_FALSE(one.phrase.has_value());
  ASSERT_TRUE(two.phrase.has_value());
  EXPECT_EQ(two.phrase->emitted, 1u);
  EXPECT_EQ(two.target, (std::vector<TokenId>{4}));

  const std::vector<std::string> ba{"b", "a"};
  const double lm = s.lm.score_phrase(s.lm.begin_sentence(), ba);
  const auto& w = s.weights;
  const double expected = w[Feature::kNmt] * std::log(0.4) + w[Feature::kLm] * lm +
                          2 * w[Feature::kWordPenalty] + w[Feature::kPhrasePenalty] +
                          2 * w[Feature::kSourceCoverage] + w[Feature::kPhraseSourceGivenTarget] * std::log(0.5) +
                          w[Feature::kPhraseTargetGivenSource] * std::log(0.4);
  EXPECT_NEAR(two.score, expected, 1e-12);
  EXPECT_EQ(two.features[Feature::kWordPenalty], 2.0);
  EXPECT_EQ(two.features[Feature::kSourceCoverage], 2.0);
  EXPECT_EQ(two.features[Feature::kPhrasePenalty], 1.0);
  EXPECT_EQ(two.lm_history, s.lm.extend(s.lm.extend(s.lm.begin_sentence(), s.lm.index("b")), s.lm.index("a")));
}

TEST(PhraseExpansion, SplitModeUsesPhraseWordPenalty) {
  StepFixture s;
  s.weights.split_word_penalty = true;
  s.weights[Feature::kPhraseWordPenalty] = -3.0;
  const std::vector<Hypothesis> beam{s.root()};
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  const auto out = generate_phrase_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].features[Feature::kPhraseWordPenalty], 2.0);
  EXPECT_EQ(out[1].features[Feature::kWordPenalty], 0.0);
}

TEST(PhraseExpansion, StopsAtCoveredPositions) {
  StepFixture s;
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  const std::vector<Hypothesis> beam{s.root({0.0, 0.9, 0.0})};
  const auto out = generate_phrase_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(derivation_of(out[0]).moves[0].source, (std::vector<std::string>{"f0"}));

  s.params.tau_cov = kInf;
  EXPECT_EQ(generate_phrase_hypotheses(beam, outputs, s.context()).size(), 2u);
}

TEST(PhraseExpansion, NothingWhenFocusIsCovered) {
  StepFixture s;
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  const std::vector<Hypothesis> beam{s.root({0.95, 0.0, 0.0})};
  EXPECT_TRUE(generate_phrase_hypotheses(beam, outputs, s.context()).empty());
}

TEST(PhraseExpansion, NothingWithoutFocus) {
  StepFixture s;
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.3, 0.3, 0.4})};
  const std::vector<Hypothesis> beam{s.root()};
  s.params.tau_focus = 0.4;
  EXPECT_TRUE(generate_phrase_hypotheses(beam, outputs, s.context()).empty());
}

TEST(PhraseExpansion, OutOfVocabularyTargetsScoreAsUnk) {
  StepFixture s;
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.1, 0.8, 0.1})};
  const std::vector<Hypothesis> beam{s.root()};
  const auto out = generate_phrase_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].features[Feature::kNmt], std::log(0.05));
  EXPECT_EQ(s.lexicon.word(out[0].target[0]), "zz");
  EXPECT_GE(out[0].target[0], s.vocab.size());
}

TEST(PhraseExpansion, CandidateCap) {
  StepFixture s;
  s.params.max_phrase_candidates = 1;
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  const std::vector<Hypothesis> beam{s.root()};
  const auto all = [&] {
    SearchParams p = s.params;
    p.max_phrase_candidates = 0;
    StepContext ctx = s.context();
    ctx.params = &p;
    return generate_phrase_hypotheses(beam, outputs, ctx);
  }();
  const auto capped = generate_phrase_hypotheses(beam, outputs, s.context());
  ASSERT_EQ(capped.size(), 1u);
  EXPECT_EQ(capped[0].score, std::max(all[0].score, all[1].score));
}

TEST(PhraseAdvance, AddsOnlyTheNeuralTerm) {
  StepFixture s;
  const std::vector<Hypothesis> beam{s.root()};
  const std::vector<StepOutput> first{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  const auto created = generate_phrase_hypotheses(beam, first, s.context());
  const Hypothesis& pending = created[1];
  const std::vector<Hypothesis> phrase_beam{pending};
  const std::vector<StepOutput> second{StepFixture::output({1e-3, 0.049, 0.05, 0.25, 0.65}, {0.1, 0.8, 0.1})};
  const auto advanced = advance_phrase_hypotheses(phrase_beam, second, s.context());
  ASSERT_EQ(advanced.size(), 1u);
  const Hypothesis& h = advanced[0];
  EXPECT_EQ(h.target, (std::vector<TokenId>{4, 3}));
  EXPECT_FALSE(h.phrase.has_value());
  EXPECT_NEAR(h.score - pending.score, s.weights[Feature::kNmt] * std::log(0.25), 1e-12);
  FeatureVector delta = h.features;
  for (std::size_t i = 0; i < kNumFeatures; ++i) delta.values[i] -= pending.features.values[i];
  EXPECT_NEAR(delta[Feature::kNmt], std::log(0.25), 1e-12);
  for (std::size_t i = 1; i < kNumFeatures; ++i) EXPECT_EQ(delta.values[i], 0.0);
  EXPECT_EQ(h.lm_history, pending.lm_history);
  EXPECT_NEAR(h.coverage[1], 0.3 + 0.8, 1e-15);
  // No new move starts on an advancement step.
  EXPECT_EQ(derivation_of(h).moves.size(), 1u);
}

TEST(PhraseAdvance, RejectsEntriesWithoutPendingPhrase) {
  StepFixture s;
  const std::vector<Hypothesis> beam{s.root()};
  const std::vector<StepOutput> outputs{StepFixture::output({1e-3, 0.049, 0.05, 0.5, 0.4}, {0.6, 0.3, 0.1})};
  EXPECT_THROW(advance_phrase_hypotheses(beam, outputs, s.context()), Error);
}

TEST(Ranking, LengthNormalizationCountsSentenceEnd) {
  const Hypothesis h = with_target({3, 4, Vocabulary::kEnd}, -6.0);
  EXPECT_EQ(ranking_score(h, false), -6.0);
  EXPECT_EQ(ranking_score(h, true), -2.0);
}

TEST(Params, Validation) {
  SearchParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.max_steps(5), 10u);
  p.max_step_factor = 1.5;
  EXPECT_EQ(p.max_steps(3), 5u);
  auto bad = [](auto mutate) {
    SearchParams q;
    mutate(q);
    EXPECT_THROW(q.validate(), ConfigError);
  };
  bad([](SearchParams& q) { q.beam_word = 0; });
  bad([](SearchParams& q) { q.tau_focus = 1.5; });
  bad([](SearchParams& q) { q.tau_cov = 0.0; });
  bad([](SearchParams& q) { q.max_step_factor = kInf; });
  bad([](SearchParams& q) { q.nbest_size = 0; });
}

namespace {

struct BeamSizeObserver : SearchObserver {
  std::size_t max_word = 0, max_phrase = 0, steps = 0;
  void on_step(std::size_t step, std::span<const Hypothesis> word, std::span<const Hypothesis> phrase,
               std::span<const Hypothesis>) override {
    steps = step;
    max_word = std::max(max_word, word.size());
    max_phrase = std::max(max_phrase, phrase.size());
    for (const auto& h : phrase) EXPECT_TRUE(h.phrase.has_value());
    for (const auto& h : word) EXPECT_FALSE(h.phrase.has_value());
  }
};

struct Random {
  Vocabulary vocab;
  SyntheticScorer scorer;
  PhraseTable table;
  ArpaModel lm;
  std::vector<std::string> source;

  explicit Random(std::uint64_t seed)
      : vocab(Vocabulary::from_words({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"})),
        scorer(seed, vocab),
        lm(testing_support::parse_arpa(generate_normalized_arpa({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"}, 3, seed))) {
    std::mt19937_64 rng(seed);
    source = testing_support::random_sentence(rng, 3 + rng() % 6, 5);
    for (int i = 0; i < 40; ++i) {
      PhrasePair p;
      p.source = testing_support::random_sentence(rng, 1 + rng() % 2, 5);
      p.target = testing_support::random_sentence(rng, 1 + rng() % 3, 8, "t");
      p.log_p_source_given_target = -static_cast<double>(rng() % 100) / 50.0;
      p.log_p_target_given_source = -static_cast<double>(rng() % 100) / 50.0;
      if (table.find(p.source, p.target) == nullptr) table.add(p);
    }
  }
};

}  // namespace

TEST(Decode, RespectsBeamBoundsAndStepLimit) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Random r(seed);
    SearchParams p;
    p.beam_word = 3;
    p.beam_phrase = 2;
    BeamSizeObserver obs;
    decode(r.source, r.scorer, match_source(r.source, r.table), &r.lm, FeatureWeights::hybrid_defaults(), p, &obs);
    EXPECT_LE(obs.max_word, 3u);
    EXPECT_LE(obs.max_phrase, 2u);
    EXPECT_LE(obs.steps, p.max_steps(r.source.size()));
  }
}

TEST(Decode, IsDeterministic) {
  Random r(5);
  const auto options = match_source(r.source, r.table);
  SearchParams p;
  p.nbest_size = 5;
  const auto a = decode(r.source, r.scorer, options, &r.lm, FeatureWeights::hybrid_defaults(), p);
  const auto b = decode(r.source, r.scorer, options, &r.lm, FeatureWeights::hybrid_defaults(), p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].target, b[i].target);
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].derivation, b[i].derivation);
  }
}

TEST(Decode, NBestIsSortedAndAuditable) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Random r(seed);
    SearchParams p;
    p.nbest_size = 8;
    p.length_normalization = seed % 2 == 0;
    const auto weights = FeatureWeights::hybrid_defaults();
    const auto list = decode(r.source, r.scorer, match_source(r.source, r.table), &r.lm, weights, p);
    ASSERT_FALSE(list.empty());
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_EQ(list[i].rank, i + 1);
      if (i > 0) {
        EXPECT_LE(list[i].ranking_score, list[i - 1].ranking_score);
      }
      const auto audit = audit_derivation(r.source, list[i].derivation, {&r.scorer, &r.table, &r.lm}, weights);
      EXPECT_NEAR(audit.score, list[i].score, 1e-9);
      auto target = list[i].derivation.target();
      if (list[i].finished) target.pop_back();
      EXPECT_EQ(target, list[i].target);
    }
  }
}

TEST(Decode, FallsBackToTheBestUnfinishedHypothesis) {
  const auto vocab = Vocabulary::from_words({"a", "b"});
  testing_support::ScriptedScorer scorer(vocab, {{{1e-9, 1e-9, 0.1, 0.5, 0.4}, {1.0}}});
  const std::vector<std::string> source{"f"};
  SearchParams p;
  p.beam_word = 1;
  const auto list = decode(source, scorer, TranslationOptions{}, nullptr, FeatureWeights::pure_nmt(), p);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_FALSE(list[0].finished);
  EXPECT_EQ(list[0].target, (std::vector<std::string>{"a", "a"}));
}

TEST(Decode, RejectsEmptySource) {
  Random r(1);
  EXPECT_THROW(decode(std::vector<std::string>{}, r.scorer, TranslationOptions{}, nullptr,
                      FeatureWeights::pure_nmt(), SearchParams{}),
               Error);
}

TEST(Decode, FinishedPoolIsBoundedByDefault) {
  struct Counter : SearchObserver {
    std::size_t finished = 0;
    void on_step(std::size_t, std::span<const Hypothesis>, std::span<const Hypothesis>,
                 std::span<const Hypothesis> done) override {
      finished += done.size();
    }
  };
  Random r(3);
  SearchParams p;
  p.nbest_size = 2;
  p.finished_factor = 2;
  Counter c;
  const auto list = decode(r.source, r.scorer, match_source(r.source, r.table), &r.lm,
                           FeatureWeights::hybrid_defaults(), p, &c);
  EXPECT_GT(c.finished, 4u);
  EXPECT_EQ(list.size(), 2u);
}

TEST(Decode, PureNmtMatchesPlainBeamSearch) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const auto vocab = Vocabulary::from_words({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9"});
    SyntheticScorer scorer(rng(), vocab);
    const auto source = testing_support::random_sentence(rng, 1 + rng() % 8, 6);
    SearchParams p;
    p.beam_word = 1 + rng() % 8;
    p.beam_phrase = 0;
    p.length_normalization = true;
    const auto list = decode(source, scorer, TranslationOptions{}, nullptr, FeatureWeights::pure_nmt(), p);
    const auto ref = oracle::plain_beam_search(source, scorer, p.beam_word, p.max_steps(source.size()));
    ASSERT_EQ(list.size(), 1u);
    EXPECT_EQ(vocab.map(list[0].target), ref.tokens) << "trial " << trial;
    EXPECT_EQ(list[0].finished, ref.finished);
    EXPECT_NEAR(list[0].score, ref.score, 1e-9);
  }
}

TEST(Decode, UnprunedSearchMatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto inst = testing_support::tiny_instance(seed);
    const auto ref = oracle::enumerate_derivations(inst.source, *inst.scorer, inst.table, &inst.lm, inst.weights,
                                                   inst.params);
    inst.params.nbest_size = 100000;
    MatchOptions match;
    match.max_candidates = 100000;
    const auto list = decode(inst.source, *inst.scorer, match_source(inst.source, inst.table, match), &inst.lm,
                             inst.weights, inst.params);
    ASSERT_FALSE(list.empty());
    ASSERT_TRUE(list[0].finished) << "seed " << seed;
    EXPECT_NEAR(list[0].score, ref.best_score(), 1e-9) << "seed " << seed;

    // every distinct finished target with its best derivation score
    std::map<std::vector<std::string>, double> best;
    for (const auto& d : ref.finished) {
      auto it = best.find(d.target);
      if (it == best.end() || d.score > it->second) best[d.target] = d.score;
    }
    ASSERT_EQ(list.size(), best.size()) << "seed " << seed;
    for (const auto& e : list) {
      ASSERT_TRUE(best.count(e.target));
      EXPECT_NEAR(e.score, best[e.target], 1e-9);
    }
  }
}
