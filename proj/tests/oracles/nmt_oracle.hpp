#pragma once

// Straightforward long double forward pass of the attention encoder-decoder,
// written with explicit loops against the tensor definitions.

#include <cmath>
#include <vector>

#include "hybridmt/nmt_model.hpp"

namespace oracle {

using Real = long double;
using Vec = std::vector<Real>;

inline Vec matvec(const Eigen::MatrixXd& m, const Vec& x) {
  Vec y(static_cast<std::size_t>(m.rows()), 0.0L);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Real acc = 0.0L;
    for (Eigen::Index j = 0; j < m.cols(); ++j) acc += static_cast<Real>(m(i, j)) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

inline Vec add(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec add(Vec a, const Eigen::VectorXd& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += static_cast<Real>(b(static_cast<Eigen::Index>(i)));
  return a;
}

inline Vec row(const Eigen::MatrixXd& m, std::size_t r) {
  Vec v(static_cast<std::size_t>(m.cols()));
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = static_cast<Real>(m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
  return v;
}

inline Real sigmoid(Real x) { return 1.0L / (1.0L + std::exp(-x)); }

inline Vec gru(const hybridmt::nmt::GruWeights& g, const Vec& x, const Vec& h) {
  const Vec zpre = add(add(matvec(g.update_input, x), matvec(g.update_recurrent, h)), g.update_bias);
  const Vec rpre = add(add(matvec(g.reset_input, x), matvec(g.reset_recurrent, h)), g.reset_bias);
  Vec rh(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) rh[i] = sigmoid(rpre[i]) * h[i];
  const Vec cpre = add(add(matvec(g.candidate_input, x), matvec(g.candidate_recurrent, rh)), g.candidate_bias);
  Vec out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Real z = sigmoid(zpre[i]);
    out[i] = (1.0L - z) * h[i] + z * std::tanh(cpre[i]);
  }
  return out;
}

struct Forward {
  std::vector<Vec> annotations;  // J rows of 2*hidden
  Vec initial;
};

inline Forward encode(const std::vector<hybridmt::TokenId>& source, const hybridmt::nmt::ModelWeights& w) {
  const std::size_t hidden = w.dims.hidden;
  const std::size_t J = source.size();
  std::vector<Vec> fwd(J), bwd(J);
  Vec h(hidden, 0.0L);
  for (std::size_t j = 0; j < J; ++j) fwd[j] = h = gru(w.encoder_forward, row(w.source_embedding, source[j]), h);
  h.assign(hidden, 0.0L);
  for (std::size_t j = J; j-- > 0;) bwd[j] = h = gru(w.encoder_backward, row(w.source_embedding, source[j]), h);
  Forward f;
  for (std::size_t j = 0; j < J; ++j) {
    Vec a = fwd[j];
    a.insert(a.end(), bwd[j].begin(), bwd[j].end());
    f.annotations.push_back(std::move(a));
  }
  f.initial = add(matvec(w.init_projection, bwd[0]), w.init_bias);
  for (auto& v : f.initial) v = std::tanh(v);
  return f;
}

struct Step {
  Vec attention;
  Vec log_probs;
  Vec next_state;
};

inline Step step(const Vec& s, hybridmt::TokenId prev, const std::vector<Vec>& ann,
                 const hybridmt::nmt::ModelWeights& w) {
  const std::size_t J = ann.size();
  Step out;
  Vec energy(J);
  const Vec sp = matvec(w.attention_state, s);
  for (std::size_t j = 0; j < J; ++j) {
    Vec hid = add(sp, matvec(w.attention_annotation, ann[j]));
    Real e = 0.0L;
    for (std::size_t k = 0; k < hid.size(); ++k) e += static_cast<Real>(w.attention_vector(static_cast<Eigen::Index>(k))) * std::tanh(hid[k]);
    energy[j] = e;
  }
  Real total = 0.0L;
  out.attention.resize(J);
  for (std::size_t j = 0; j < J; ++j) total += out.attention[j] = std::exp(energy[j]);
  for (auto& a : out.attention) a /= total;

  Vec context(ann[0].size(), 0.0L);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < context.size(); ++k) context[k] += out.attention[j] * ann[j][k];
  }
  const Vec y = row(w.target_embedding, prev);
  Vec input = y;
  input.insert(input.end(), context.begin(), context.end());
  out.next_state = gru(w.decoder, input, s);

  Vec t = add(add(add(matvec(w.readout_state, out.next_state), matvec(w.readout_embedding, y)),
                  matvec(w.readout_context, context)),
              w.readout_bias);
  for (auto& v : t) v = std::tanh(v);
  Vec logits = add(matvec(w.output_projection, t), w.output_bias);
  Real z = 0.0L;
  for (Real l : logits) z += std::exp(l);
  const Real log_z = std::log(z);
  out.log_probs.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.log_probs[i] = logits[i] - log_z;
  return out;
}

}  // namespace oracle
