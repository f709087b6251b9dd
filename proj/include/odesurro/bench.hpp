#pragma once

// Wall-time comparison of one surrogate prediction against advancing the
// Euler solver across the same lookahead (lookahead_n * stride steps).
// Each timed block runs `inner_iters` calls; one untimed warm-up block
// precedes `repeats` timed blocks. Results are per-call seconds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "odesurro/datagen.hpp"
#include "odesurro/error.hpp"
#include "odesurro/euler.hpp"
#include "odesurro/lstm.hpp"

namespace odesurro {

struct BenchResult {
  std::uint32_t lookahead_n = 0;
  double euler_mean_s = 0.0;
  double euler_std_s = 0.0;
  double lstm_mean_s = 0.0;
  double lstm_std_s = 0.0;
  double speedup = 0.0;
  std::uint32_t repeats = 0;
  std::uint64_t inner_iters = 0;

  bool operator==(const BenchResult&) const = default;
};

struct BenchOptions {
  std::uint32_t repeats = 10;
  std::uint64_t inner_iters = 0;  // 0 = calibrate automatically
  std::uint32_t stride = 25;
  double dt = 0.01;
  double min_block_s = 2e-3;  // calibration target per timed block
};

namespace bench_detail {

using Clock = std::chrono::steady_clock;

template <class T>
inline void do_not_optimize(const T& value) {
  asm volatile("" : : "r,m"(value) : "memory");
}

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Smallest observable nonzero clock increment.
inline double clock_resolution_s() {
  double best = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto t0 = Clock::now();
    auto t1 = Clock::now();
    while (t1 == t0) t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

template <class Fn>
double time_block(Fn&& fn, std::uint64_t iters) {
  const auto t0 = Clock::now();
  for (std::uint64_t k = 0; k < iters; ++k) fn();
  return seconds_since(t0);
}

template <class Fn>
std::uint64_t calibrate(Fn&& fn, double min_block_s) {
  std::uint64_t iters = 1;
  while (true) {
    const double t = time_block(fn, iters);
    if (t >= min_block_s || iters >= (1ull << 40)) return iters;
    iters *= t > 0.0 ? std::max<std::uint64_t>(2, static_cast<std::uint64_t>(min_block_s / t * 1.2))
                     : 10;
  }
}

struct Stats {
  double mean = 0.0, std = 0.0;
};

inline Stats stats(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

}  // namespace bench_detail

inline BenchResult bench_pair(const LstmModel& model, const RunSpec& run, std::uint32_t lookahead_n,
                              const BenchOptions& opt = {}) {
  using namespace bench_detail;
  if (lookahead_n < 1) throw ConfigError("lookahead must be >= 1");
  if (opt.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (generation_active()) throw ConfigError("refusing to benchmark while corpus generation is running");
  detail::check_dims(model);
  if (model.dims.input != kNumSpecies) throw DimensionMismatch("model input dim");

  const std::size_t steps = static_cast<std::size_t>(lookahead_n) * opt.stride;
  Predictor predictor(model);
  double sink = 0.0;

  auto euler_call = [&] {
    StateVector s = advance(run.init, run.params, opt.dt, steps);
    do_not_optimize(s);
    sink += s[0];
  };
  auto lstm_call = [&] {
    std::span<const double> y = predictor(run.init);
    do_not_optimize(y.data());
    sink += y[0];
  };

  const double resolution = clock_resolution_s();
  const double min_block = std::max(opt.min_block_s, 100.0 * resolution);
  const std::uint64_t euler_iters = opt.inner_iters ? opt.inner_iters : calibrate(euler_call, min_block);
  const std::uint64_t lstm_iters = opt.inner_iters ? opt.inner_iters : calibrate(lstm_call, min_block);

  // Warm-up round, discarded.
  time_block(euler_call, euler_iters);
  time_block(lstm_call, lstm_iters);

  std::vector<double> euler_t, lstm_t;
  for (std::uint32_t r = 0; r < opt.repeats; ++r) {
    const double te = time_block(euler_call, euler_iters);
    const double tl = time_block(lstm_call, lstm_iters);
    if (te < 100.0 * resolution || tl < 100.0 * resolution) {
      throw ClockResolutionTooCoarse("timed block shorter than 100x clock resolution (" +
                                     std::to_string(resolution) + " s); raise inner_iters");
    }
    euler_t.push_back(te / static_cast<double>(euler_iters));
    lstm_t.push_back(tl / static_cast<double>(lstm_iters));
  }
  do_not_optimize(sink);

  // The timed path must compute the same prediction as the public API.
  const std::span<const double> timed = predictor(run.init);
  const std::vector<double> reference = predict(model, run.init);
  if (!std::equal(timed.begin(), timed.end(), reference.begin(), reference.end())) {
    throw DimensionMismatch("timed forward diverged from predict()");
  }

  const Stats es = stats(euler_t), ls = stats(lstm_t);
  BenchResult br;
  br.lookahead_n = lookahead_n;
  br.euler_mean_s = es.mean;
  br.euler_std_s = es.std;
  br.lstm_mean_s = ls.mean;
  br.lstm_std_s = ls.std;
  br.speedup = es.mean / ls.mean;
  br.repeats = opt.repeats;
  br.inner_iters = std::max(euler_iters, lstm_iters);
  return br;
}

inline const std::vector<std::uint32_t>& default_lookaheads() {
  static const std::vector<std::uint32_t> v = {1, 5, 10, 15, 25, 50};
  return v;
}

inline std::filesystem::path checkpoint_path(const std::filesystem::path& model_dir, std::uint32_t n) {
  return model_dir / ("model_n" + std::to_string(n) + ".bin");
}

// Benchmarks model_n<N>.bin from model_dir for each lookahead against the
// first run of the manifest.
inline std::vector<BenchResult> bench_table(const std::filesystem::path& model_dir,
                                            const CorpusManifest& manifest,
                                            const std::vector<std::uint32_t>& lookaheads,
                                            const BenchOptions& opt = {}) {
  if (manifest.runs.empty()) throw SchemaMismatch("manifest lists no runs");
  for (std::uint32_t n : lookaheads) {
    if (!std::filesystem::exists(checkpoint_path(model_dir, n))) throw MissingCheckpoint(n);
  }
  const RunRecord& rec = manifest.runs.front();
  const RunSpec run{rec.run_id, rec.seed, rec.params, rec.init};
  BenchOptions o = opt;
  o.dt = manifest.solver.dt;
  std::vector<BenchResult> out;
  for (std::uint32_t n : lookaheads) out.push_back(bench_pair(load(checkpoint_path(model_dir, n)), run, n, o));
  return out;
}

// ---------------------------------------------------------------------------
// CSV: lookahead,euler_mean_s,euler_std_s,lstm_mean_s,lstm_std_s,speedup

inline constexpr std::string_view kBenchHeader =
    "lookahead,euler_mean_s,euler_std_s,lstm_mean_s,lstm_std_s,speedup";

inline std::string bench_to_csv(const std::vector<BenchResult>& rows) {
  std::string out(kBenchHeader);
  out.push_back('\n');
  for (const BenchResult& r : rows) {
    out += std::to_string(r.lookahead_n);
    for (double v : {r.euler_mean_s, r.euler_std_s, r.lstm_mean_s, r.lstm_std_s, r.speedup}) {
      out.push_back(',');
      detail::append_double(out, v);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_bench_csv(const std::vector<BenchResult>& rows, const std::filesystem::path& path) {
  detail::write_file(path, bench_to_csv(rows));
}

inline std::vector<BenchResult> read_bench_csv(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  const std::string ctx = path.string();
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kBenchHeader) {
    throw SchemaMismatch(ctx + ": expected header " + std::string(kBenchHeader));
  }
  std::vector<BenchResult> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t c = line.find(',', start);
      f.emplace_back(line.data() + start, (c == std::string::npos ? line.size() : c) - start);
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (f.size() != 6) throw SchemaMismatch(ctx + ": expected 6 columns");
    BenchResult r;
    r.lookahead_n = static_cast<std::uint32_t>(detail::parse_double(f[0], ctx));
    r.euler_mean_s = detail::parse_double(f[1], ctx);
    r.euler_std_s = detail::parse_double(f[2], ctx);
    r.lstm_mean_s = detail::parse_double(f[3], ctx);
    r.lstm_std_s = detail::parse_double(f[4], ctx);
    r.speedup = detail::parse_double(f[5], ctx);
    rows.push_back(r);
  }
  return rows;
}

inline std::string bench_to_text(const std::vector<BenchResult>& rows) {
  std::ostringstream os;
  os << "lookahead   euler mean (s)   lstm mean (s)   speedup\n";
  for (const BenchResult& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%9u   %14.3e   %13.3e   %7.1fx\n", r.lookahead_n, r.euler_mean_s,
                  r.lstm_mean_s, r.speedup);
    os << buf;
  }
  return os.str();
}

}  // namespace odesurro
