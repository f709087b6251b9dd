#pragma once

// Single-layer LSTM cell with a fully-connected output map.
//
//   z  = W_ih x + b_ih + W_hh h0 + b_hh        (4H rows, gate blocks i, f, g, o)
//   i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
//   c1 = f * c0 + i * g
//   h1 = o * tanh(c1)
//   y  = W_fc h1 + b_fc
//
// Matrices are row-major. All arithmetic is double precision.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "odesurro/activation.hpp"
#include "odesurro/binary_io.hpp"
#include "odesurro/error.hpp"
#include "odesurro/random.hpp"

namespace odesurro {

struct LstmDims {
  std::uint32_t input = 6;
  std::uint32_t hidden = 50;
  std::uint32_t output = 6;
  std::uint32_t layers = 1;

  std::size_t gates() const { return 4 * static_cast<std::size_t>(hidden); }
  bool operator==(const LstmDims&) const = default;
};

// Weight blocks of the cell. Gradients share this layout.
struct LstmParams {
  std::vector<double> W_ih, W_hh, b_ih, b_hh, W_fc, b_fc;

  static constexpr std::size_t kNumBlocks = 6;
  static constexpr std::array<const char*, kNumBlocks> block_names = {"W_ih", "W_hh", "b_ih",
                                                                      "b_hh", "W_fc", "b_fc"};

  static LstmParams zeros(const LstmDims& d) {
    LstmParams p;
    p.W_ih.assign(d.gates() * d.input, 0.0);
    p.W_hh.assign(d.gates() * d.hidden, 0.0);
    p.b_ih.assign(d.gates(), 0.0);
    p.b_hh.assign(d.gates(), 0.0);
    p.W_fc.assign(static_cast<std::size_t>(d.output) * d.hidden, 0.0);
    p.b_fc.assign(d.output, 0.0);
    return p;
  }

  std::array<std::span<double>, kNumBlocks> blocks() {
    return {W_ih, W_hh, b_ih, b_hh, W_fc, b_fc};
  }
  std::array<std::span<const double>, kNumBlocks> blocks() const {
    return {W_ih, W_hh, b_ih, b_hh, W_fc, b_fc};
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto b : blocks()) n += b.size();
    return n;
  }

  void set_zero() {
    for (auto b : blocks()) std::fill(b.begin(), b.end(), 0.0);
  }

  bool operator==(const LstmParams&) const = default;
};

using Gradients = LstmParams;

struct LstmModel {
  LstmDims dims;
  LstmParams params;

  static LstmModel zeros(const LstmDims& d = {}) { return {d, LstmParams::zeros(d)}; }

  // Every weight uniform on [-1/sqrt(hidden), 1/sqrt(hidden)].
  static LstmModel init_uniform(const LstmDims& d, std::uint64_t seed) {
    LstmModel m = zeros(d);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.hidden));
    CounterRng rng(derive_key({seed, 0x4C53544Dull /* "LSTM" */}));
    for (auto block : m.params.blocks()) {
      for (double& w : block) w = rng.uniform(-bound, bound);
    }
    return m;
  }

  bool operator==(const LstmModel&) const = default;
};

struct CellState {
  std::vector<double> h, c;

  static CellState zeros(std::size_t hidden) {
    return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
  }
};

// Everything backward() needs; reusable across calls to avoid reallocation.
struct ForwardCache {
  std::vector<double> x, h0, c0;
  std::vector<double> gates;  // activated gates, blocks i, f, g, o of length H
  std::vector<double> c1, tanh_c1, h1;
  std::vector<double> y;
  bool zero_h0 = true;
  bool zero_c0 = true;

  std::span<const double> gate(std::size_t block, std::size_t hidden) const {
    return {gates.data() + block * hidden, hidden};
  }
};

namespace detail {

inline void check_dims(const LstmModel& m) {
  const LstmDims& d = m.dims;
  if (d.layers != 1) throw DimensionMismatch("only single-layer cells are supported");
  if (d.input == 0 || d.hidden == 0 || d.output == 0) throw DimensionMismatch("zero dimension");
  const LstmParams& p = m.params;
  if (p.W_ih.size() != d.gates() * d.input || p.W_hh.size() != d.gates() * d.hidden ||
      p.b_ih.size() != d.gates() || p.b_hh.size() != d.gates() ||
      p.W_fc.size() != static_cast<std::size_t>(d.output) * d.hidden ||
      p.b_fc.size() != d.output) {
    throw DimensionMismatch("weight block sizes disagree with model dims");
  }
}

inline bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace detail

// Hot path: no weight-size validation, only input/state sizes. When the
// incoming state is zero the W_hh product and the forget gate (which only
// ever multiplies c0) are skipped; the forget-gate slots are then left at 0.
inline void forward(const LstmModel& m, std::span<const double> x, const CellState& s0,
                    ForwardCache& cache) {
  const std::size_t I = m.dims.input, H = m.dims.hidden, O = m.dims.output;
  if (x.size() != I) throw DimensionMismatch("input has " + std::to_string(x.size()) +
                                             " entries, model expects " + std::to_string(I));
  if (s0.h.size() != H || s0.c.size() != H) throw DimensionMismatch("cell state size");
  const LstmParams& p = m.params;

  cache.x.assign(x.begin(), x.end());
  cache.h0 = s0.h;
  cache.c0 = s0.c;
  cache.zero_h0 = detail::all_zero(s0.h);
  cache.zero_c0 = detail::all_zero(s0.c);
  cache.gates.resize(4 * H);
  cache.c1.resize(H);
  cache.tanh_c1.resize(H);
  cache.h1.resize(H);
  cache.y.resize(O);

  double* z = cache.gates.data();
  for (std::size_t r = 0; r < 4 * H; ++r) {
    if (cache.zero_c0 && r >= H && r < 2 * H) {
      z[r] = 0.0;
      continue;
    }
    double acc = p.b_ih[r] + p.b_hh[r];
    const double* wi = &p.W_ih[r * I];
    for (std::size_t k = 0; k < I; ++k) acc += wi[k] * x[k];
    if (!cache.zero_h0) {
      const double* wh = &p.W_hh[r * H];
      for (std::size_t k = 0; k < H; ++k) acc += wh[k] * s0.h[k];
    }
    z[r] = acc;
  }
  std::span<double> all(cache.gates);
  activation::sigmoid_inplace(all.subspan(0, H));
  if (cache.zero_c0) {
    std::fill(all.begin() + H, all.begin() + 2 * H, 0.0);
  } else {
    activation::sigmoid_inplace(all.subspan(H, H));
  }
  activation::tanh_inplace(all.subspan(2 * H, H));
  activation::sigmoid_inplace(all.subspan(3 * H, H));

  const double* gi = z;
  const double* gf = z + H;
  const double* gg = z + 2 * H;
  const double* go = z + 3 * H;
  for (std::size_t u = 0; u < H; ++u) {
    cache.c1[u] = cache.zero_c0 ? gi[u] * gg[u] : gf[u] * s0.c[u] + gi[u] * gg[u];
  }
  std::copy(cache.c1.begin(), cache.c1.end(), cache.tanh_c1.begin());
  activation::tanh_inplace(cache.tanh_c1);
  for (std::size_t u = 0; u < H; ++u) cache.h1[u] = go[u] * cache.tanh_c1[u];

  for (std::size_t r = 0; r < O; ++r) {
    double acc = 0.0;
    const double* w = &p.W_fc[r * H];
    for (std::size_t k = 0; k < H; ++k) acc += w[k] * cache.h1[k];
    cache.y[r] = p.b_fc[r] + acc;
  }
}

struct ForwardResult {
  std::vector<double> y;
  CellState state;
  ForwardCache cache;
};

inline ForwardResult forward(const LstmModel& m, std::span<const double> x, const CellState& s0) {
  detail::check_dims(m);
  ForwardResult r;
  forward(m, x, s0, r.cache);
  r.y = r.cache.y;
  r.state = {r.cache.h1, r.cache.c1};
  return r;
}

// One cell step from the zero state: the surrogate's prediction.
inline std::vector<double> predict(const LstmModel& m, std::span<const double> x) {
  return forward(m, x, CellState::zeros(m.dims.hidden)).y;
}

// Zero-state inference with weights repacked for contiguous access: W_ih is
// stored transposed and the forget-gate rows are dropped (they only scale
// c0 = 0). Per element the arithmetic order matches forward(), so outputs
// are bit-identical to predict().
class Predictor {
 public:
  explicit Predictor(const LstmModel& m)
      : in_(m.dims.input), hidden_(m.dims.hidden), out_(m.dims.output) {
    detail::check_dims(m);
    const std::size_t H = hidden_, I = in_;
    const std::size_t kept[3] = {0, 2, 3};  // gates i, g, o
    bias_.resize(3 * H);
    w_t_.resize(I * 3 * H);
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t u = 0; u < H; ++u) {
        const std::size_t r = kept[b] * H + u;
        bias_[b * H + u] = m.params.b_ih[r] + m.params.b_hh[r];
        for (std::size_t k = 0; k < I; ++k) w_t_[k * 3 * H + b * H + u] = m.params.W_ih[r * I + k];
      }
    }
    w_fc_t_.resize(H * out_);
    for (std::size_t r = 0; r < out_; ++r) {
      for (std::size_t k = 0; k < H; ++k) w_fc_t_[k * out_ + r] = m.params.W_fc[r * H + k];
    }
    b_fc_ = m.params.b_fc;
    z_.resize(3 * H);
    h_.resize(H);
    y_.resize(out_);
  }

  // Returned span is valid until the next call.
  std::span<const double> operator()(std::span<const double> x) {
    if (x.size() != in_) throw DimensionMismatch("input size");
    const std::size_t H = hidden_, G = 3 * H;
    double* z = z_.data();
    std::copy(bias_.begin(), bias_.end(), z);
    for (std::size_t k = 0; k < in_; ++k) {
      const double xk = x[k];
      const double* w = &w_t_[k * G];
      for (std::size_t r = 0; r < G; ++r) z[r] += w[r] * xk;
    }
    std::span<double> zs(z_);
    activation::sigmoid_inplace(zs.subspan(0, H));
    activation::tanh_inplace(zs.subspan(H, H));
    activation::sigmoid_inplace(zs.subspan(2 * H, H));
    for (std::size_t u = 0; u < H; ++u) h_[u] = z[u] * z[H + u];
    activation::tanh_inplace(h_);
    for (std::size_t u = 0; u < H; ++u) h_[u] = z[2 * H + u] * h_[u];
    // Output sums run over k in the same order as forward(), interleaved
    // across outputs.
    std::fill(y_.begin(), y_.end(), 0.0);
    for (std::size_t k = 0; k < H; ++k) {
      const double hk = h_[k];
      const double* w = &w_fc_t_[k * out_];
      for (std::size_t r = 0; r < out_; ++r) y_[r] += w[r] * hk;
    }
    for (std::size_t r = 0; r < out_; ++r) y_[r] = b_fc_[r] + y_[r];
    return y_;
  }

 private:
  std::size_t in_, hidden_, out_;
  std::vector<double> w_t_, bias_, w_fc_t_, b_fc_;
  std::vector<double> z_, h_, y_;
};

// Adds dLoss/dtheta for one forward call into `grads`. The incoming cell
// state is treated as a constant.
inline void accumulate_backward(const LstmModel& m, const ForwardCache& cache,
                                std::span<const double> dy, Gradients& grads) {
  const std::size_t I = m.dims.input, H = m.dims.hidden, O = m.dims.output;
  if (dy.size() != O) throw DimensionMismatch("dLoss/dy size");
  if (cache.h1.size() != H || cache.x.size() != I) throw DimensionMismatch("cache from another model");
  if (grads.b_fc.size() != O || grads.W_ih.size() != m.params.W_ih.size()) {
    throw DimensionMismatch("gradient buffers");
  }
  const LstmParams& p = m.params;

  std::vector<double> dh1(H, 0.0);
  for (std::size_t r = 0; r < O; ++r) {
    grads.b_fc[r] += dy[r];
    double* gw = &grads.W_fc[r * H];
    const double* w = &p.W_fc[r * H];
    for (std::size_t k = 0; k < H; ++k) {
      gw[k] += dy[r] * cache.h1[k];
      dh1[k] += w[k] * dy[r];
    }
  }

  const double* gi = cache.gates.data();
  const double* gf = gi + H;
  const double* gg = gi + 2 * H;
  const double* go = gi + 3 * H;
  std::vector<double> dz(4 * H);
  for (std::size_t u = 0; u < H; ++u) {
    const double i = gi[u], f = gf[u], g = gg[u], o = go[u];
    const double tc = cache.tanh_c1[u];
    const double d_o = dh1[u] * tc;
    const double dc1 = dh1[u] * o * (1.0 - tc * tc);
    dz[u] = dc1 * g * i * (1.0 - i);
    dz[H + u] = cache.zero_c0 ? 0.0 : dc1 * cache.c0[u] * f * (1.0 - f);
    dz[2 * H + u] = dc1 * i * (1.0 - g * g);
    dz[3 * H + u] = d_o * o * (1.0 - o);
  }

  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double d = dz[r];
    grads.b_ih[r] += d;
    grads.b_hh[r] += d;
    double* gw = &grads.W_ih[r * I];
    for (std::size_t k = 0; k < I; ++k) gw[k] += d * cache.x[k];
    if (!cache.zero_h0) {
      double* gh = &grads.W_hh[r * H];
      for (std::size_t k = 0; k < H; ++k) gh[k] += d * cache.h0[k];
    }
  }
}

inline Gradients backward(const LstmModel& m, const ForwardCache& cache, std::span<const double> dy) {
  detail::check_dims(m);
  Gradients g = LstmParams::zeros(m.dims);
  accumulate_backward(m, cache, dy, g);
  return g;
}

// Checkpoint: "SURRLSTM", u32 version, u32 input, u32 hidden, u32 output,
// u32 layers, then f64 blocks W_ih, W_hh, b_ih, b_hh, W_fc, b_fc.
inline constexpr std::string_view kCheckpointMagic = "SURRLSTM";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save(const LstmModel& m, const std::filesystem::path& path) {
  detail::check_dims(m);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binary::write_magic(os, kCheckpointMagic);
  binary::write_u32(os, kCheckpointVersion);
  binary::write_u32(os, m.dims.input);
  binary::write_u32(os, m.dims.hidden);
  binary::write_u32(os, m.dims.output);
  binary::write_u32(os, m.dims.layers);
  for (auto block : m.params.blocks()) binary::write_f64s(os, block);
  if (!os) throw IoError("write failed for " + path.string());
}

inline LstmModel load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  binary::expect_magic(is, kCheckpointMagic);
  const std::uint32_t version = binary::read_u32(is, "version");
  if (version != kCheckpointVersion) {
    throw DimensionMismatch("unsupported checkpoint version " + std::to_string(version));
  }
  LstmDims d;
  d.input = binary::read_u32(is, "input_dim");
  d.hidden = binary::read_u32(is, "hidden_dim");
  d.output = binary::read_u32(is, "output_dim");
  d.layers = binary::read_u32(is, "n_layers");
  if (d.layers != 1) throw DimensionMismatch("n_layers = " + std::to_string(d.layers));
  if (d.input == 0) throw DimensionMismatch("input_dim = 0");
  if (d.hidden == 0) throw DimensionMismatch("hidden_dim = 0");
  if (d.output == 0) throw DimensionMismatch("output_dim = 0");
  // Guard against absurd headers before allocating.
  if (d.hidden > (1u << 16) || d.input > (1u << 16) || d.output > (1u << 16)) {
    throw DimensionMismatch("implausible dims in header");
  }
  const std::uintmax_t n_weights =
      static_cast<std::uintmax_t>(d.gates()) * (d.input + d.hidden + 2) + std::uintmax_t{d.output} * (d.hidden + 1);
  if (std::filesystem::file_size(path) < 28 + 8 * n_weights) {
    throw IoError(path.string() + ": truncated (header promises " + std::to_string(n_weights) + " weights)");
  }
  LstmModel m = LstmModel::zeros(d);
  auto blocks = m.params.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    binary::read_f64s(is, blocks[b], LstmParams::block_names[b]);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint");
  return m;
}

}  // namespace odesurro
