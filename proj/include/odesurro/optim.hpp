#pragma once

// Summed squared-error loss, global-norm gradient clipping and Adam.
// The optimizer pieces work on any type exposing blocks() as an array of
// spans, so they apply equally to LstmParams and to small test fixtures.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "odesurro/error.hpp"

namespace odesurro {

template <class P>
concept ParameterBlocks = requires(P& p, const P& cp) {
  { p.blocks() };
  { cp.blocks() };
  { *std::begin(p.blocks()) } -> std::convertible_to<std::span<double>>;
  { *std::begin(cp.blocks()) } -> std::convertible_to<std::span<const double>>;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // dLoss/dpred, same layout as pred
};

// pred and target are row-major [batch x dim] matrices flattened.
inline LossResult summed_mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw ShapeMismatch("pred has " + std::to_string(pred.size()) + " values, target has " +
                        std::to_string(target.size()));
  }
  LossResult r;
  r.grad.resize(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double e = pred[k] - target[k];
    r.loss += e * e;
    r.grad[k] = 2.0 * e;
  }
  return r;
}

template <ParameterBlocks P>
double global_norm(const P& grads) {
  double sq = 0.0;
  for (auto block : grads.blocks()) {
    for (double g : block) sq += g * g;
  }
  return std::sqrt(sq);
}

struct ClipConfig {
  double max_norm = 1.0;
  bool operator==(const ClipConfig&) const = default;
};

// Rescales in place when the global L2 norm exceeds max_norm. Returns the
// norm measured before clipping.
template <ParameterBlocks P>
double clip_gradients(P& grads, const ClipConfig& cfg) {
  if (!(cfg.max_norm > 0.0)) throw ConfigError("clip max_norm must be positive");
  const double n = global_norm(grads);
  if (!std::isfinite(n)) throw NonFiniteGradient("global norm is " + std::to_string(n));
  if (n > cfg.max_norm) {
    const double scale = cfg.max_norm / n;
    for (auto block : grads.blocks()) {
      for (double& g : block) g *= scale;
    }
  }
  return n;
}

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m, v;  // one buffer per parameter block
};

template <ParameterBlocks P>
void adam_step(P& params, const P& grads, AdamState& st) {
  auto pb = params.blocks();
  auto gb = grads.blocks();
  const std::size_t nblocks = std::size(pb);
  if (std::size(gb) != nblocks) throw ShapeMismatch("gradient block count");
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (pb[b].size() != gb[b].size()) throw ShapeMismatch("gradient block size");
    for (double g : gb[b]) {
      if (!std::isfinite(g)) throw NonFiniteGradient("adam input");
    }
  }
  if (st.m.size() != nblocks) {
    st.m.assign(nblocks, {});
    st.v.assign(nblocks, {});
  }
  for (std::size_t b = 0; b < nblocks; ++b) {
    st.m[b].resize(pb[b].size(), 0.0);
    st.v[b].resize(pb[b].size(), 0.0);
  }

  ++st.t;
  const double t = static_cast<double>(st.t);
  const double bc1 = 1.0 - std::pow(st.beta1, t);
  const double bc2 = 1.0 - std::pow(st.beta2, t);
  for (std::size_t b = 0; b < nblocks; ++b) {
    std::span<double> theta = pb[b];
    std::span<const double> g = gb[b];
    std::vector<double>& m = st.m[b];
    std::vector<double>& v = st.v[b];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      theta[k] -= st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
    }
  }
}

}  // namespace odesurro
