#pragma once

// Training loop. Each epoch draws one batch with replacement, runs every
// input through one cell step from the zero state, backpropagates the summed
// squared error, clips the summed gradient to a global norm and takes an
// Adam step. Every eval_every epochs a fresh test draw is scored with the
// relative normed error ||pred - target||_F / ||target||_F and training
// stops once it falls below target_rel_error.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "odesurro/dataset.hpp"
#include "odesurro/datagen.hpp"
#include "odesurro/error.hpp"
#include "odesurro/lstm.hpp"
#include "odesurro/optim.hpp"

namespace odesurro {

struct TrainConfig {
  std::uint32_t lookahead_n = 25;
  double target_rel_error = 0.03;
  std::uint64_t max_epochs = 2'000'000;
  std::uint64_t eval_every = 100;
  std::uint32_t steps_per_epoch = 1;
  std::uint64_t seed = 0;
  SamplerConfig sampler;  // epoch_seed is replaced by `seed`
  ClipConfig clip;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LstmDims dims;

  void validate() const {
    if (!(target_rel_error > 0.0)) throw ConfigError("target_rel_error must be positive");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be >= 1");
    if (sampler.batch_size < 1 || sampler.test_batch_size < 1) throw ConfigError("batch sizes must be >= 1");
    if (!(clip.max_norm > 0.0)) throw ConfigError("clip max_norm must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (dims.input != kNumSpecies || dims.output != kNumSpecies) {
      throw ConfigError("model input/output dims must equal the species count");
    }
  }
};

struct CurvePoint {
  std::uint64_t epoch = 0;
  double rel_error = 0.0;
  double loss = 0.0;  // summed training loss of that epoch's last batch
  bool operator==(const CurvePoint&) const = default;
};

struct TrainingCurve {
  std::vector<CurvePoint> points;
  bool operator==(const TrainingCurve&) const = default;
};

struct TrainResult {
  LstmModel model;
  TrainingCurve curve;
  bool converged = false;
  std::uint64_t epochs = 0;  // epochs actually run
};

inline double relative_normed_error(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeMismatch("pred vs target size");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double e = pred[k] - target[k];
    num += e * e;
    den += target[k] * target[k];
  }
  if (den == 0.0) throw ZeroTargetNorm();
  return std::sqrt(num) / std::sqrt(den);
}

// Row-major predictions for every input of the batch.
inline std::vector<double> predict_batch(const LstmModel& m, const Batch& b) {
  std::vector<double> out(b.size() * m.dims.output);
  ForwardCache cache;
  const CellState zero = CellState::zeros(m.dims.hidden);
  for (std::size_t k = 0; k < b.size(); ++k) {
    forward(m, b.input(k), zero, cache);
    std::copy(cache.y.begin(), cache.y.end(), out.begin() + k * m.dims.output);
  }
  return out;
}

// Relative normed error on a with-replacement draw of `count` pairs from the
// test stream at `epoch`. Degenerate (zero-norm) draws are redrawn.
inline double evaluate(const LstmModel& m, const PairDataset& ds, std::size_t count,
                       std::uint64_t seed, std::uint64_t epoch) {
  detail::check_dims(m);
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    const Batch b = draw_batch(ds, seed, epoch, Purpose::test, count, attempt);
    try {
      return relative_normed_error(predict_batch(m, b), b.targets);
    } catch (const ZeroTargetNorm&) {
    }
  }
  throw ZeroTargetNorm();
}

// One optimizer step on a batch; returns the summed loss.
class BatchStepper {
 public:
  explicit BatchStepper(const LstmDims& d) : grads_(LstmParams::zeros(d)) {}

  double step(LstmModel& m, const Batch& b, const ClipConfig& clip, AdamState& adam) {
    const std::size_t B = b.size(), O = m.dims.output;
    caches_.resize(B);
    pred_.resize(B * O);
    const CellState zero = CellState::zeros(m.dims.hidden);
    for (std::size_t k = 0; k < B; ++k) {
      forward(m, b.input(k), zero, caches_[k]);
      std::copy(caches_[k].y.begin(), caches_[k].y.end(), pred_.begin() + k * O);
    }
    const LossResult loss = summed_mse(pred_, b.targets);
    if (!std::isfinite(loss.loss)) throw NonFiniteGradient("training loss is not finite");
    grads_.set_zero();
    for (std::size_t k = 0; k < B; ++k) {
      accumulate_backward(m, caches_[k], std::span<const double>(&loss.grad[k * O], O), grads_);
    }
    clip_gradients(grads_, clip);
    adam_step(m.params, grads_, adam);
    return loss.loss;
  }

  const Gradients& last_gradients() const { return grads_; }

 private:
  Gradients grads_;
  std::vector<ForwardCache> caches_;
  std::vector<double> pred_;
};

// Optional progress hook, called after every evaluation.
using TrainObserver = std::function<void(const CurvePoint&)>;

inline TrainResult train(const PairDataset& ds, const TrainConfig& cfg, const TrainObserver& observer = {}) {
  cfg.validate();
  if (ds.empty()) throw ConfigError("cannot train on an empty dataset");

  TrainResult r;
  r.model = LstmModel::init_uniform(cfg.dims, cfg.seed);
  AdamState adam;
  adam.lr = cfg.lr;
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;
  BatchStepper stepper(cfg.dims);

  for (std::uint64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss = 0.0;
    for (std::uint32_t s = 0; s < cfg.steps_per_epoch; ++s) {
      const Batch b = draw_batch(ds, cfg.seed, epoch, Purpose::train, cfg.sampler.batch_size, s);
      try {
        loss = stepper.step(r.model, b, cfg.clip, adam);
      } catch (const NonFiniteGradient& e) {
        throw NonFiniteGradient("epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    r.epochs = epoch;
    if (epoch % cfg.eval_every == 0) {
      const double rel = evaluate(r.model, ds, cfg.sampler.test_batch_size, cfg.seed, epoch);
      r.curve.points.push_back({epoch, rel, loss});
      if (observer) observer(r.curve.points.back());
      if (rel < cfg.target_rel_error) {
        r.converged = true;
        break;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Curve CSV: epoch,rel_error,loss

inline void write_curve_csv(const TrainingCurve& c, const std::filesystem::path& path) {
  std::string out = "epoch,rel_error,loss\n";
  for (const CurvePoint& p : c.points) {
    out += std::to_string(p.epoch);
    out.push_back(',');
    detail::append_double(out, p.rel_error);
    out.push_back(',');
    detail::append_double(out, p.loss);
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

inline TrainingCurve read_curve_csv(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  const std::string ctx = path.string();
  TrainingCurve c;
  std::size_t pos = text.find('\n');
  if (pos == std::string::npos || text.substr(0, pos) != "epoch,rel_error,loss") {
    throw SchemaMismatch(ctx + ": expected header epoch,rel_error,loss");
  }
  ++pos;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
        line.find(',', c2 + 1) != std::string_view::npos) {
      throw SchemaMismatch(ctx + ": expected 3 columns");
    }
    CurvePoint p;
    auto e = line.substr(0, c1);
    auto res = std::from_chars(e.data(), e.data() + e.size(), p.epoch);
    if (res.ec != std::errc() || res.ptr != e.data() + e.size()) throw SchemaMismatch(ctx + ": bad epoch");
    p.rel_error = detail::parse_double(line.substr(c1 + 1, c2 - c1 - 1), ctx);
    p.loss = detail::parse_double(line.substr(c2 + 1), ctx);
    if (!c.points.empty() && p.epoch <= c.points.back().epoch) {
      throw SchemaMismatch(ctx + ": epochs not strictly increasing");
    }
    c.points.push_back(p);
  }
  return c;
}

}  // namespace odesurro
