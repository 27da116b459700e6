#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "hybridmt/common.hpp"
#include "hybridmt/nmt_model.hpp"
#include "hybridmt/vocabulary.hpp"
#include "support/scorer_check.hpp"

using namespace hybridmt;
using namespace hybridmt::nmt;

namespace {

ModelDims small_dims() { return ModelDims{4, 8, 6, 7}; }

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Hand-rolled container writer so malformed files can be produced.
struct ContainerSpec {
  std::string skip;
  std::string nan_in;
  std::string wrong_dims;
};

ContainerSpec missing(std::string name) { return {std::move(name), "", ""}; }
ContainerSpec with_nan(std::string name) { return {"", std::move(name), ""}; }
ContainerSpec misshapen(std::string name) { return {"", "", std::move(name)}; }

std::string build_container(const ModelDims& d, const ContainerSpec& spec) {
  std::ostringstream out;
  out << "HMTW";
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(d.embed));
  put_u32(out, static_cast<std::uint32_t>(d.hidden));
  put_u32(out, static_cast<std::uint32_t>(d.source_vocab));
  put_u32(out, static_cast<std::uint32_t>(d.target_vocab));
  auto layout = tensor_layout(d);
  std::erase_if(layout, [&](const TensorSpec& t) { return t.name == spec.skip; });
  for (auto& t : layout) {
    if (t.name == spec.wrong_dims) t.dims[0] += 1;
  }
  put_u32(out, static_cast<std::uint32_t>(layout.size()));
  for (const auto& t : layout) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out << t.name;
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto x : t.dims) put_u32(out, static_cast<std::uint32_t>(x));
  }
  for (const auto& t : layout) {
    std::size_t n = 1;
    for (auto x : t.dims) n *= x;
    for (std::size_t i = 0; i < n; ++i) {
      const float v = t.name == spec.nan_in ? std::numeric_limits<float>::quiet_NaN() : 0.25f;
      put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  return out.str();
}

std::string load_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_weights(in);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(NmtWeights, RoundTripIsExact) {
  const auto w = random_weights(ModelDims{4, 8, 5, 6}, 42);
  std::stringstream buffer;
  write_weights(w, buffer);
  const auto back = read_weights(buffer);
  EXPECT_EQ(back.dims, w.dims);
  EXPECT_EQ(back.decoder.candidate_recurrent, w.decoder.candidate_recurrent);
  EXPECT_EQ(back.output_projection, w.output_projection);
  EXPECT_EQ(back.attention_vector, w.attention_vector);
}

TEST(NmtWeights, WellFormedHandWrittenContainerLoads) {
  std::istringstream in(build_container(small_dims(), {}));
  const auto w = read_weights(in);
  EXPECT_EQ(w.dims.hidden, 8u);
  EXPECT_EQ(w.dims.embed, 4u);
  EXPECT_EQ(w.decoder.update_input.cols(), 4 + 16);
  EXPECT_DOUBLE_EQ(w.init_bias(0), 0.25);
}

TEST(NmtWeights, MissingTensorIsNamed) {
  const auto msg = load_error(build_container(small_dims(), missing("decoder.candidate_bias")));
  EXPECT_NE(msg.find("missing tensor"), std::string::npos) << msg;
  EXPECT_NE(msg.find("decoder.candidate_bias"), std::string::npos) << msg;
}

TEST(NmtWeights, NonFiniteValueIsNamed) {
  const auto msg = load_error(build_container(small_dims(), with_nan("attention_vector")));
  EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
  EXPECT_NE(msg.find("attention_vector"), std::string::npos) << msg;
}

TEST(NmtWeights, DimensionMismatchIsNamed) {
  const auto msg = load_error(build_container(small_dims(), misshapen("readout_bias")));
  EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find("readout_bias"), std::string::npos) << msg;
}

TEST(NmtWeights, BadMagicAndTruncation) {
  EXPECT_NE(load_error("XXXX").find("magic"), std::string::npos);
  const auto full = build_container(small_dims(), {});
  EXPECT_NE(load_error(full.substr(0, full.size() - 3)).find("truncated"), std::string::npos);
}

TEST(NmtForward, SingleWordSourceShape) {
  const auto w = random_weights(small_dims(), 1);
  const std::vector<TokenId> src{4};
  const auto ann = encode(src, w);
  EXPECT_EQ(ann.vectors.rows(), 1);
  EXPECT_EQ(ann.vectors.cols(), 16);
  EXPECT_EQ(initial_state(ann, w).hidden.size(), 8);
}

TEST(NmtForward, EncodeIsDeterministic) {
  const auto w = random_weights(small_dims(), 3);
  const std::vector<TokenId> src{3, 4, 5};
  EXPECT_EQ(encode(src, w).vectors, encode(src, w).vectors);
}

TEST(NmtForward, RejectsOutOfRangeIds) {
  const auto w = random_weights(small_dims(), 3);
  const std::vector<TokenId> bad{3, 99};
  EXPECT_THROW(encode(bad, w), Error);
  const std::vector<TokenId> src{3};
  const auto ann = encode(src, w);
  EXPECT_THROW(step(initial_state(ann, w), 99, ann, w), Error);
}

TEST(NmtForward, ZeroInitTensorsGiveZeroState) {
  auto w = random_weights(small_dims(), 5);
  w.init_projection.setZero();
  w.init_bias.setZero();
  const std::vector<TokenId> src{3, 4};
  EXPECT_EQ(initial_state(encode(src, w), w).hidden, Eigen::VectorXd::Zero(8));
}

TEST(NmtForward, ZeroAttentionProjectionGivesUniformAttention) {
  auto w = random_weights(small_dims(), 6);
  w.attention_state.setZero();
  w.attention_annotation.setZero();
  const std::vector<TokenId> src{3, 4, 5, 3};
  const auto ann = encode(src, w);
  const auto out = step(initial_state(ann, w), Vocabulary::kBegin, ann, w);
  for (double a : out.attention) EXPECT_EQ(a, 0.25);
}

TEST(NmtForward, OutputsAreOnTheSimplex) {
  const auto w = random_weights(ModelDims{5, 8, 9, 11}, 7, 2.0);
  const std::vector<TokenId> src{3, 4, 5, 6, 7};
  const auto ann = encode(src, w);
  auto s = initial_state(ann, w);
  TokenId prev = Vocabulary::kBegin;
  for (int t = 0; t < 10; ++t) {
    const auto out = step(s, prev, ann, w);
    double a = 0.0, p = 0.0;
    for (double x : out.attention) a += x;
    for (double x : out.log_probs) p += std::exp(x);
    EXPECT_NEAR(a, 1.0, 1e-6);
    EXPECT_NEAR(p, 1.0, 1e-6);
    s = out.next_state;
    prev = static_cast<TokenId>(3 + t % 8);
  }
}

TEST(NmtForward, MatchesExtendedPrecisionOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = testing_support::check_scorer_configuration(seed);
    EXPECT_LT(c.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_LT(c.max_simplex_error, 1e-6) << "seed " << seed;
  }
}

TEST(NmtScorer, AdapterMatchesFreeFunctionsAndMapsUnknownWords) {
  auto weights = std::make_shared<const ModelWeights>(random_weights(ModelDims{3, 4, 6, 6}, 11));
  const auto src_vocab = Vocabulary::from_words({"x", "y", "z"});
  const auto tgt_vocab = Vocabulary::from_words({"a", "b", "c"});
  NmtScorer scorer(weights, src_vocab, tgt_vocab);
  const std::vector<std::string> source{"x", "never-seen"};
  const auto bound = scorer.bind(source);
  EXPECT_EQ(bound->source_length(), 2u);
  const auto out = bound->step(bound->initial_state(), Vocabulary::kBegin);

  const std::vector<TokenId> ids{3, Vocabulary::kUnknown};
  const auto ann = encode(ids, *weights);
  const auto direct = step(initial_state(ann, *weights), Vocabulary::kBegin, ann, *weights);
  EXPECT_EQ(out.log_probs, direct.log_probs);
  EXPECT_EQ(out.attention, direct.attention);
}

TEST(NmtScorer, RejectsVocabularySizeMismatch) {
  auto weights = std::make_shared<const ModelWeights>(random_weights(ModelDims{3, 4, 6, 6}, 11));
  EXPECT_THROW(NmtScorer(weights, Vocabulary::from_words({"x"}), Vocabulary::from_words({"a", "b", "c"})), Error);
}
