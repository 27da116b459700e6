#include "hybridmt/nmt_model.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace hybridmt::nmt {

namespace {

constexpr std::array<char, 4> kMagic = {'H', 'M', 'T', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string dims_string(const std::vector<std::size_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void append_gru(std::vector<TensorSpec>& out, const std::string& prefix, std::size_t input,
                std::size_t hidden) {
  for (const char* gate : {"update", "reset", "candidate"}) {
    out.push_back({prefix + "." + gate + "_input", {hidden, input}});
    out.push_back({prefix + "." + gate + "_recurrent", {hidden, hidden}});
    out.push_back({prefix + "." + gate + "_bias", {hidden}});
  }
}

void append_gru_refs(std::vector<std::pair<std::string, TensorRef>>& out, const std::string& prefix,
                     GruWeights& g) {
  out.emplace_back(prefix + ".update_input", &g.update_input);
  out.emplace_back(prefix + ".update_recurrent", &g.update_recurrent);
  out.emplace_back(prefix + ".update_bias", &g.update_bias);
  out.emplace_back(prefix + ".reset_input", &g.reset_input);
  out.emplace_back(prefix + ".reset_recurrent", &g.reset_recurrent);
  out.emplace_back(prefix + ".reset_bias", &g.reset_bias);
  out.emplace_back(prefix + ".candidate_input", &g.candidate_input);
  out.emplace_back(prefix + ".candidate_recurrent", &g.candidate_recurrent);
  out.emplace_back(prefix + ".candidate_bias", &g.candidate_bias);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<unsigned char, 4> b = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                          static_cast<unsigned char>(v >> 16),
                                          static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

bool read_u32(std::istream& in, std::uint32_t& v) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

std::uint32_t read_u32_or_throw(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!read_u32(in, v)) throw FormatError(std::string("weights container truncated reading ") + what);
  return v;
}

VectorXd sigmoid(const VectorXd& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

VectorXd gru_step(const GruWeights& g, const VectorXd& input, const VectorXd& h) {
  const VectorXd update = sigmoid(g.update_input * input + g.update_recurrent * h + g.update_bias);
  const VectorXd reset = sigmoid(g.reset_input * input + g.reset_recurrent * h + g.reset_bias);
  const VectorXd candidate =
      (g.candidate_input * input + g.candidate_recurrent * reset.cwiseProduct(h) + g.candidate_bias)
          .array()
          .tanh()
          .matrix();
  return (1.0 - update.array()).matrix().cwiseProduct(h) + update.cwiseProduct(candidate);
}

void check_weights(const ModelWeights& w) {
  auto copy = w;
  auto refs = tensors(copy);
  const auto layout = tensor_layout(w.dims);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& spec = layout[i];
    bool ok = std::visit(
        [&](auto* t) {
          using T = std::remove_pointer_t<decltype(t)>;
          if constexpr (std::is_same_v<T, VectorXd>) {
            return spec.dims.size() == 1 && static_cast<std::size_t>(t->size()) == spec.dims[0];
          } else {
            return spec.dims.size() == 2 && static_cast<std::size_t>(t->rows()) == spec.dims[0] &&
                   static_cast<std::size_t>(t->cols()) == spec.dims[1];
          }
        },
        refs[i].second);
    if (!ok) throw Error("tensor " + spec.name + " does not have dims " + dims_string(spec.dims));
  }
}

}  // namespace

std::vector<TensorSpec> tensor_layout(const ModelDims& d) {
  const std::size_t e = d.embed, h = d.hidden, a = 2 * d.hidden;
  std::vector<TensorSpec> out;
  out.push_back({"source_embedding", {d.source_vocab, e}});
  out.push_back({"target_embedding", {d.target_vocab, e}});
  append_gru(out, "encoder_forward", e, h);
  append_gru(out, "encoder_backward", e, h);
  append_gru(out, "decoder", e + a, h);
  out.push_back({"init_projection", {h, h}});
  out.push_back({"init_bias", {h}});
  out.push_back({"attention_state", {h, h}});
  out.push_back({"attention_annotation", {h, a}});
  out.push_back({"attention_vector", {h}});
  out.push_back({"readout_state", {e, h}});
  out.push_back({"readout_embedding", {e, e}});
  out.push_back({"readout_context", {e, a}});
  out.push_back({"readout_bias", {e}});
  out.push_back({"output_projection", {d.target_vocab, e}});
  out.push_back({"output_bias", {d.target_vocab}});
  return out;
}

std::vector<std::pair<std::string, TensorRef>> tensors(ModelWeights& w) {
  std::vector<std::pair<std::string, TensorRef>> out;
  out.emplace_back("source_embedding", &w.source_embedding);
  out.emplace_back("target_embedding", &w.target_embedding);
  append_gru_refs(out, "encoder_forward", w.encoder_forward);
  append_gru_refs(out, "encoder_backward", w.encoder_backward);
  append_gru_refs(out, "decoder", w.decoder);
  out.emplace_back("init_projection", &w.init_projection);
  out.emplace_back("init_bias", &w.init_bias);
  out.emplace_back("attention_state", &w.attention_state);
  out.emplace_back("attention_annotation", &w.attention_annotation);
  out.emplace_back("attention_vector", &w.attention_vector);
  out.emplace_back("readout_state", &w.readout_state);
  out.emplace_back("readout_embedding", &w.readout_embedding);
  out.emplace_back("readout_context", &w.readout_context);
  out.emplace_back("readout_bias", &w.readout_bias);
  out.emplace_back("output_projection", &w.output_projection);
  out.emplace_back("output_bias", &w.output_bias);
  return out;
}

ModelWeights zero_weights(const ModelDims& dims) {
  if (dims.embed == 0 || dims.hidden == 0 || dims.source_vocab == 0 || dims.target_vocab == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  ModelWeights w;
  w.dims = dims;
  const auto layout = tensor_layout(dims);
  auto refs = tensors(w);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& d = layout[i].dims;
    std::visit(
        [&](auto* t) {
          using T = std::remove_pointer_t<decltype(t)>;
          if constexpr (std::is_same_v<T, VectorXd>) {
            *t = VectorXd::Zero(static_cast<Eigen::Index>(d[0]));
          } else {
            *t = MatrixXd::Zero(static_cast<Eigen::Index>(d[0]), static_cast<Eigen::Index>(d[1]));
          }
        },
        refs[i].second);
  }
  return w;
}

ModelWeights random_weights(const ModelDims& dims, std::uint64_t seed, double scale) {
  ModelWeights w = zero_weights(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& [name, ref] : tensors(w)) {
    std::visit(
        [&](auto* t) {
          // float-representable so a save/load round trip is exact
          for (Eigen::Index i = 0; i < t->size(); ++i) {
            t->data()[i] = static_cast<double>(static_cast<float>(dist(rng)));
          }
        },
        ref);
  }
  return w;
}

void write_weights(const ModelWeights& weights, std::ostream& out) {
  check_weights(weights);
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(weights.dims.embed));
  write_u32(out, static_cast<std::uint32_t>(weights.dims.hidden));
  write_u32(out, static_cast<std::uint32_t>(weights.dims.source_vocab));
  write_u32(out, static_cast<std::uint32_t>(weights.dims.target_vocab));
  const auto layout = tensor_layout(weights.dims);
  write_u32(out, static_cast<std::uint32_t>(layout.size()));
  for (const auto& spec : layout) {
    write_u32(out, static_cast<std::uint32_t>(spec.name.size()));
    out.write(spec.name.data(), static_cast<std::streamsize>(spec.name.size()));
    write_u32(out, static_cast<std::uint32_t>(spec.dims.size()));
    for (auto d : spec.dims) write_u32(out, static_cast<std::uint32_t>(d));
  }
  auto copy = weights;
  for (auto& [name, ref] : tensors(copy)) {
    std::visit(
        [&](auto* t) {
          // row-major payload
          for (Eigen::Index r = 0; r < t->rows(); ++r) {
            for (Eigen::Index c = 0; c < t->cols(); ++c) {
              write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>((*t)(r, c))));
            }
          }
        },
        ref);
  }
  if (!out) throw Error("failed writing weights container");
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_weights(weights, out);
}

ModelWeights read_weights(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a weights container (bad magic)");
  }
  const std::uint32_t version = read_u32_or_throw(in, "version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported weights container version " + std::to_string(version));
  }
  ModelDims dims;
  dims.embed = read_u32_or_throw(in, "embed size");
  dims.hidden = read_u32_or_throw(in, "hidden size");
  dims.source_vocab = read_u32_or_throw(in, "source vocabulary size");
  dims.target_vocab = read_u32_or_throw(in, "target vocabulary size");
  const std::uint32_t count = read_u32_or_throw(in, "tensor count");
  if (count > 4096) throw FormatError("implausible tensor count " + std::to_string(count));

  struct HeaderEntry {
    std::string name;
    std::vector<std::size_t> dims;
  };
  std::vector<HeaderEntry> header;
  for (std::uint32_t i = 0; i < count; ++i) {
    HeaderEntry entry;
    const std::uint32_t name_len = read_u32_or_throw(in, "tensor name length");
    if (name_len > 1024) throw FormatError("implausible tensor name length");
    entry.name.resize(name_len);
    if (!in.read(entry.name.data(), name_len)) throw FormatError("weights container truncated in header");
    const std::uint32_t rank = read_u32_or_throw(in, "tensor rank");
    if (rank == 0 || rank > 2) {
      throw FormatError("tensor " + entry.name + " has unsupported rank " + std::to_string(rank));
    }
    for (std::uint32_t r = 0; r < rank; ++r) entry.dims.push_back(read_u32_or_throw(in, "tensor dims"));
    header.push_back(std::move(entry));
  }

  ModelWeights w = zero_weights(dims);
  const auto layout = tensor_layout(dims);
  std::map<std::string, std::size_t> expected;
  for (std::size_t i = 0; i < layout.size(); ++i) expected.emplace(layout[i].name, i);
  std::map<std::string, std::size_t> present;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& entry = header[i];
    auto it = expected.find(entry.name);
    if (it == expected.end()) throw FormatError("unexpected tensor " + entry.name);
    if (!present.emplace(entry.name, i).second) throw FormatError("duplicate tensor " + entry.name);
    const auto& want = layout[it->second].dims;
    if (want != entry.dims) {
      throw FormatError("dimension mismatch for tensor " + entry.name + ": expected " +
                        dims_string(want) + ", got " + dims_string(entry.dims));
    }
  }
  for (const auto& spec : layout) {
    if (!present.contains(spec.name)) throw FormatError("missing tensor " + spec.name);
  }

  auto refs = tensors(w);
  std::map<std::string, TensorRef> by_name(refs.begin(), refs.end());
  for (const auto& entry : header) {
    TensorRef ref = by_name.at(entry.name);
    std::visit(
        [&](auto* t) {
          for (Eigen::Index r = 0; r < t->rows(); ++r) {
            for (Eigen::Index c = 0; c < t->cols(); ++c) {
              std::uint32_t bits = 0;
              if (!read_u32(in, bits)) throw FormatError("truncated payload in tensor " + entry.name);
              const float value = std::bit_cast<float>(bits);
              if (!std::isfinite(value)) throw FormatError("non-finite value in tensor " + entry.name);
              (*t)(r, c) = static_cast<double>(value);
            }
          }
        },
        ref);
  }
  return w;
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weights " + path.string());
  try {
    return read_weights(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Annotations encode(std::span<const TokenId> source, const ModelWeights& w) {
  if (source.empty()) throw Error("cannot encode an empty source sentence");
  const auto h = static_cast<Eigen::Index>(w.dims.hidden);
  const auto length = static_cast<Eigen::Index>(source.size());
  for (TokenId id : source) {
    if (id >= w.dims.source_vocab) {
      throw Error("source token id " + std::to_string(id) + " outside source vocabulary");
    }
  }
  Annotations ann;
  ann.vectors = MatrixXd::Zero(length, 2 * h);
  VectorXd state = VectorXd::Zero(h);
  for (Eigen::Index j = 0; j < length; ++j) {
    const VectorXd x = w.source_embedding.row(source[j]).transpose();
    state = gru_step(w.encoder_forward, x, state);
    ann.vectors.row(j).head(h) = state.transpose();
  }
  state = VectorXd::Zero(h);
  for (Eigen::Index j = length - 1; j >= 0; --j) {
    const VectorXd x = w.source_embedding.row(source[j]).transpose();
    state = gru_step(w.encoder_backward, x, state);
    ann.vectors.row(j).tail(h) = state.transpose();
  }
  return ann;
}

DecoderState initial_state(const Annotations& ann, const ModelWeights& w) {
  const auto h = static_cast<Eigen::Index>(w.dims.hidden);
  if (ann.size() == 0) throw Error("initial_state needs at least one annotation");
  if (ann.vectors.cols() != 2 * h) throw Error("annotation width does not match the model");
  const VectorXd backward_first = ann.vectors.row(0).tail(h).transpose();
  DecoderState s;
  s.hidden = (w.init_projection * backward_first + w.init_bias).array().tanh().matrix();
  return s;
}

StepResult step(const DecoderState& state, TokenId prev_word, const Annotations& ann,
                const ModelWeights& w) {
  const auto h = static_cast<Eigen::Index>(w.dims.hidden);
  if (state.hidden.size() != h) throw Error("decoder state dimension does not match the model");
  if (ann.size() == 0 || ann.vectors.cols() != 2 * h) throw Error("annotation width does not match the model");
  if (prev_word >= w.dims.target_vocab) {
    throw Error("target token id " + std::to_string(prev_word) + " outside target vocabulary");
  }
  const auto length = static_cast<Eigen::Index>(ann.size());

  const VectorXd state_proj = w.attention_state * state.hidden;
  std::vector<double> attention(static_cast<std::size_t>(length));
  for (Eigen::Index j = 0; j < length; ++j) {
    const VectorXd hidden =
        (state_proj + w.attention_annotation * ann.vectors.row(j).transpose()).array().tanh().matrix();
    attention[static_cast<std::size_t>(j)] = w.attention_vector.dot(hidden);
  }
  softmax_inplace(attention);

  VectorXd context = VectorXd::Zero(2 * h);
  for (Eigen::Index j = 0; j < length; ++j) {
    context += attention[static_cast<std::size_t>(j)] * ann.vectors.row(j).transpose();
  }

  const VectorXd embedding = w.target_embedding.row(prev_word).transpose();
  VectorXd input(embedding.size() + context.size());
  input << embedding, context;
  StepResult out;
  out.next_state.hidden = gru_step(w.decoder, input, state.hidden);

  const VectorXd readout = (w.readout_state * out.next_state.hidden + w.readout_embedding * embedding +
                            w.readout_context * context + w.readout_bias)
                               .array()
                               .tanh()
                               .matrix();
  const VectorXd logits = w.output_projection * readout + w.output_bias;
  out.log_probs.assign(logits.data(), logits.data() + logits.size());
  log_softmax_inplace(out.log_probs);
  out.attention = std::move(attention);
  return out;
}

namespace {

struct NmtState : ScorerState {
  DecoderState decoder;
};

class NmtSentenceScorer : public SentenceScorer {
 public:
  NmtSentenceScorer(std::shared_ptr<const ModelWeights> weights, Annotations annotations)
      : weights_(std::move(weights)), annotations_(std::move(annotations)) {}

  std::size_t source_length() const override { return annotations_.size(); }

  StateHandle initial_state() const override {
    auto s = std::make_shared<NmtState>();
    s->decoder = nmt::initial_state(annotations_, *weights_);
    return s;
  }

  StepOutput step(const StateHandle& state, TokenId prev_word) const override {
    const auto* s = dynamic_cast<const NmtState*>(state.get());
    if (s == nullptr) throw Error("state handle does not belong to this scorer");
    StepResult r = nmt::step(s->decoder, prev_word, annotations_, *weights_);
    auto next = std::make_shared<NmtState>();
    next->decoder = std::move(r.next_state);
    return StepOutput{std::move(r.log_probs), std::move(r.attention), std::move(next)};
  }

 private:
  std::shared_ptr<const ModelWeights> weights_;
  Annotations annotations_;
};

}  // namespace

NmtScorer::NmtScorer(std::shared_ptr<const ModelWeights> weights, Vocabulary source_vocab,
                     Vocabulary target_vocab)
    : weights_(std::move(weights)),
      source_vocab_(std::move(source_vocab)),
      target_vocab_(std::move(target_vocab)) {
  if (!weights_) throw ConfigError("NmtScorer needs model weights");
  if (source_vocab_.size() != weights_->dims.source_vocab) {
    throw ConfigError("source vocabulary has " + std::to_string(source_vocab_.size()) +
                      " tokens but the model expects " + std::to_string(weights_->dims.source_vocab));
  }
  if (target_vocab_.size() != weights_->dims.target_vocab) {
    throw ConfigError("target vocabulary has " + std::to_string(target_vocab_.size()) +
                      " tokens but the model expects " + std::to_string(weights_->dims.target_vocab));
  }
}

std::unique_ptr<SentenceScorer> NmtScorer::bind(std::span<const std::string> source) const {
  const auto ids = source_vocab_.map(source);
  return std::make_unique<NmtSentenceScorer>(weights_, encode(ids, *weights_));
}

}  // namespace hybridmt::nmt
