#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hybridmt/common.hpp"
#include "hybridmt/phrase_table.hpp"

using namespace hybridmt;

namespace {

PhraseTable parse(const std::string& text) {
  std::istringstream in(text);
  return PhraseTable::parse(in, "test");
}

PhrasePair pair(std::vector<std::string> src, std::vector<std::string> tgt, double p_fe, double p_ef) {
  return PhrasePair{std::move(src), std::move(tgt), std::log(p_fe), std::log(p_ef)};
}

std::vector<std::string> tokens(const std::string& s) { return split_tokens(s); }

}  // namespace

TEST(PhraseTable, ParsesFieldsAsNaturalLogs) {
  const auto t = parse("a b ||| X Y ||| 0.5 0.25\n");
  ASSERT_EQ(t.size(), 1u);
  const auto* p = t.find(tokens("a b"), tokens("X Y"));
  ASSERT_NE(p, nullptr);
  EXPECT_DOUBLE_EQ(p->log_p_source_given_target, std::log(0.5));
  EXPECT_DOUBLE_EQ(p->log_p_target_given_source, std::log(0.25));
}

TEST(PhraseTable, EmptyInputGivesEmptyTable) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("\n   \n").empty());
}

TEST(PhraseTable, RejectsZeroAndMalformedEntries) {
  EXPECT_THROW(parse("a ||| b ||| 0 0.5\n"), FormatError);
  EXPECT_THROW(parse("a ||| b ||| -0.1 0.5\n"), FormatError);
  EXPECT_THROW(parse("a ||| b ||| 1.5 0.5\n"), FormatError);
  EXPECT_THROW(parse("a ||| b ||| 0.5\n"), FormatError);
  EXPECT_THROW(parse("a ||| b\n"), FormatError);
  EXPECT_THROW(parse(" ||| b ||| 0.5 0.5\n"), FormatError);
  EXPECT_THROW(parse("a ||| b ||| x 0.5\n"), FormatError);
}

TEST(PhraseTable, ErrorsCarryTheLineNumber) {
  try {
    parse("a ||| b ||| 0.5 0.5\nc ||| d ||| 0 0.5\n");
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(PhraseTable, DropsReservedTargetTokensAndCountsThem) {
  const auto t = parse("a ||| x </s> ||| 0.5 0.5\na ||| <s> ||| 0.5 0.5\na ||| y ||| 0.5 0.5\n");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.dropped_reserved(), 2u);
}

TEST(PhraseMatching, SpansFollowTheTable) {
  PhraseTable t;
  t.add(pair({"a", "b"}, {"X"}, 0.5, 0.5));
  t.add(pair({"a"}, {"Y"}, 0.5, 0.5));
  const std::vector<std::string> sentence{"a", "b"};
  const auto options = match_source(sentence, t);
  ASSERT_EQ(options.at(0, 2).size(), 1u);
  EXPECT_EQ(options.at(0, 2)[0].target, tokens("X"));
  ASSERT_EQ(options.at(0, 1).size(), 1u);
  EXPECT_EQ(options.at(0, 1)[0].target, tokens("Y"));
  EXPECT_TRUE(options.at(1, 1).empty());
  EXPECT_EQ(options.spans().size(), 2u);
}

TEST(PhraseMatching, KeepsTheTopKByForwardProbability) {
  PhraseTable t;
  for (int i = 0; i < 150; ++i) {
    t.add(pair({"w"}, {"t" + std::to_string(i)}, 0.5, (i + 1) / 151.0));
  }
  const std::vector<std::string> sentence{"w"};
  MatchOptions opts;
  opts.max_candidates = 100;
  const auto options = match_source(sentence, t, opts);
  const auto& list = options.at(0, 1);
  ASSERT_EQ(list.size(), 100u);
  EXPECT_EQ(list.front().target, tokens("t149"));
  EXPECT_EQ(list.back().target, tokens("t50"));
  for (std::size_t i = 1; i < list.size(); ++i) {
    EXPECT_GE(list[i - 1].log_p_target_given_source, list[i].log_p_target_given_source);
  }
}

TEST(PhraseMatching, TiesBrokenByTargetPhrase) {
  PhraseTable t;
  t.add(pair({"w"}, {"zeta"}, 0.5, 0.5));
  t.add(pair({"w"}, {"alpha"}, 0.5, 0.5));
  t.add(pair({"w"}, {"mid"}, 0.5, 0.9));
  const std::vector<std::string> sentence{"w"};
  const auto options = match_source(sentence, t);
  const auto& list = options.at(0, 1);
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0].target, tokens("mid"));
  EXPECT_EQ(list[1].target, tokens("alpha"));
  EXPECT_EQ(list[2].target, tokens("zeta"));
}

TEST(PhraseMatching, EmptyTableGivesNoOptions) {
  const std::vector<std::string> sentence{"a", "b", "c"};
  EXPECT_TRUE(match_source(sentence, PhraseTable{}).empty());
}

TEST(PhraseMatching, LengthFiltersApply) {
  PhraseTable t;
  t.add(pair({"a"}, {"A"}, 0.5, 0.5));
  t.add(pair({"a", "b"}, {"AB"}, 0.5, 0.5));
  t.add(pair({"a", "b", "c"}, {"ABC"}, 0.5, 0.5));
  const std::vector<std::string> sentence{"a", "b", "c"};
  MatchOptions only_long;
  only_long.min_source_length = 2;
  auto o = match_source(sentence, t, only_long);
  EXPECT_TRUE(o.at(0, 1).empty());
  EXPECT_EQ(o.at(0, 2).size(), 1u);
  MatchOptions only_short;
  only_short.max_source_length = 1;
  o = match_source(sentence, t, only_short);
  EXPECT_EQ(o.at(0, 1).size(), 1u);
  EXPECT_TRUE(o.at(0, 2).empty());
  EXPECT_TRUE(o.at(0, 3).empty());
}

TEST(PhraseMatching, AgreesWithBruteForceRescan) {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 200; ++round) {
    PhraseTable t;
    for (int e = 0; e < 12; ++e) {
      std::vector<std::string> src(1 + rng() % 3);
      for (auto& w : src) w = std::string(1, static_cast<char>('a' + rng() % 3));
      t.add(pair(src, {"T" + std::to_string(e)}, 0.5, 0.5));
    }
    std::vector<std::string> sentence(1 + rng() % 7);
    for (auto& w : sentence) w = std::string(1, static_cast<char>('a' + rng() % 3));
    const auto options = match_source(sentence, t);
    for (std::size_t j = 0; j < sentence.size(); ++j) {
      for (std::size_t l = 1; j + l <= sentence.size(); ++l) {
        const std::vector<std::string> span(sentence.begin() + static_cast<long>(j),
                                            sentence.begin() + static_cast<long>(j + l));
        const auto* expected = t.lookup(span);
        const auto& got = options.at(j, l);
        ASSERT_EQ(got.size(), expected ? expected->size() : 0u);
        for (const auto& p : got) ASSERT_EQ(p.source, span);
      }
    }
  }
}
