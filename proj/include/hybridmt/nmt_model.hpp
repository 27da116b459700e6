#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hybridmt/common.hpp"
#include "hybridmt/scorer.hpp"
#include "hybridmt/vocabulary.hpp"

namespace hybridmt::nmt {

struct ModelDims {
  std::size_t embed = 0;
  std::size_t hidden = 0;
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;

  bool operator==(const ModelDims&) const = default;
};

// Reset/update/candidate GRU parameters. `*_input` multiply the input,
// `*_recurrent` the previous hidden state.
struct GruWeights {
  Eigen::MatrixXd update_input, update_recurrent;
  Eigen::VectorXd update_bias;
  Eigen::MatrixXd reset_input, reset_recurrent;
  Eigen::VectorXd reset_bias;
  Eigen::MatrixXd candidate_input, candidate_recurrent;
  Eigen::VectorXd candidate_bias;
};

// Attention encoder-decoder parameters. All arithmetic is double precision;
// the on-disk container stores float32.
struct ModelWeights {
  ModelDims dims;

  Eigen::MatrixXd source_embedding;  // source_vocab x embed
  Eigen::MatrixXd target_embedding;  // target_vocab x embed

  GruWeights encoder_forward;   // input embed
  GruWeights encoder_backward;  // input embed
  GruWeights decoder;           // input embed + 2*hidden

  // s_0 = tanh(init_projection * backward_state_1 + init_bias)
  Eigen::MatrixXd init_projection;
  Eigen::VectorXd init_bias;

  // energy_j = attention_vector . tanh(attention_state * s + attention_annotation * h_j)
  Eigen::MatrixXd attention_state;       // hidden x hidden
  Eigen::MatrixXd attention_annotation;  // hidden x 2*hidden
  Eigen::VectorXd attention_vector;      // hidden

  // t = tanh(readout_state * s_i + readout_embedding * y + readout_context * c + readout_bias)
  Eigen::MatrixXd readout_state;      // embed x hidden
  Eigen::MatrixXd readout_embedding;  // embed x embed
  Eigen::MatrixXd readout_context;    // embed x 2*hidden
  Eigen::VectorXd readout_bias;       // embed

  Eigen::MatrixXd output_projection;  // target_vocab x embed
  Eigen::VectorXd output_bias;        // target_vocab
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> dims;
};

// Every tensor of the container, in serialization order.
std::vector<TensorSpec> tensor_layout(const ModelDims& dims);

using TensorRef = std::variant<Eigen::MatrixXd*, Eigen::VectorXd*>;
// Name -> storage, in tensor_layout order.
std::vector<std::pair<std::string, TensorRef>> tensors(ModelWeights& weights);

// Allocates all tensors at the declared sizes, zero-filled.
ModelWeights zero_weights(const ModelDims& dims);
// Uniform(-scale, scale), deterministic in `seed`.
ModelWeights random_weights(const ModelDims& dims, std::uint64_t seed, double scale = 0.5);

ModelWeights load_weights(const std::filesystem::path& path);
ModelWeights read_weights(std::istream& in);
void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
void write_weights(const ModelWeights& weights, std::ostream& out);

// Rows are positions; columns are [forward; backward] halves of width hidden.
struct Annotations {
  Eigen::MatrixXd vectors;  // J x 2*hidden
  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
};

struct DecoderState {
  Eigen::VectorXd hidden;
};

struct StepResult {
  std::vector<double> log_probs;
  std::vector<double> attention;
  DecoderState next_state;
};

Annotations encode(std::span<const TokenId> source, const ModelWeights& weights);
DecoderState initial_state(const Annotations& annotations, const ModelWeights& weights);
StepResult step(const DecoderState& state, TokenId prev_word, const Annotations& annotations,
                const ModelWeights& weights);

// Scorer adapter over a loaded model.
class NmtScorer : public Scorer {
 public:
  NmtScorer(std::shared_ptr<const ModelWeights> weights, Vocabulary source_vocab,
            Vocabulary target_vocab);

  const Vocabulary& target_vocabulary() const override { return target_vocab_; }
  const Vocabulary& source_vocabulary() const { return source_vocab_; }
  const ModelWeights& weights() const { return *weights_; }
  std::unique_ptr<SentenceScorer> bind(std::span<const std::string> source) const override;

 private:
  std::shared_ptr<const ModelWeights> weights_;
  Vocabulary source_vocab_;
  Vocabulary target_vocab_;
};

}  // namespace hybridmt::nmt
