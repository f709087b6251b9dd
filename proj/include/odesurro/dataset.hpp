#pragma once

// Lookahead pairs: each trajectory is downsampled every `stride` Euler
// steps and downsample i is paired with downsample i + lookahead_n.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "odesurro/binary_io.hpp"
#include "odesurro/circuit.hpp"
#include "odesurro/datagen.hpp"
#include "odesurro/error.hpp"
#include "odesurro/euler.hpp"
#include "odesurro/random.hpp"

namespace odesurro {

struct Pair {
  StateVector input{};
  StateVector target{};
  bool operator==(const Pair&) const = default;
};

// Where a pair came from; kept in memory only.
struct PairOrigin {
  std::uint64_t run_id = 0;
  std::uint64_t index = 0;  // downsample index of the input
};

struct PairDataset {
  std::uint32_t lookahead_n = 1;
  std::uint32_t stride = 25;
  double dt = 0.01;  // raw solver step
  std::vector<Pair> pairs;
  std::vector<PairOrigin> origins;  // parallel to pairs when built from trajectories
  std::filesystem::path manifest_path;
  std::vector<std::uint64_t> run_ids;

  double dt_sample() const { return static_cast<double>(stride) * dt; }
  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

inline std::size_t pairs_per_run(std::size_t n_steps, std::uint32_t lookahead_n, std::uint32_t stride) {
  const std::size_t points = n_steps / stride + 1;
  return points > lookahead_n ? points - lookahead_n : 0;
}

// Appends the pairs of one trajectory.
inline void append_pairs(PairDataset& ds, std::uint64_t run_id, const Trajectory& t) {
  const std::size_t n = ds.lookahead_n, stride = ds.stride;
  if (t.rows() < (n + 1) * stride + 1) throw RunTooShort(run_id);
  const std::size_t n_steps = t.rows() - 1;
  const std::size_t count = pairs_per_run(n_steps, ds.lookahead_n, ds.stride);
  for (std::size_t i = 0; i < count; ++i) {
    ds.pairs.push_back({t.states[i * stride], t.states[(i + n) * stride]});
    ds.origins.push_back({run_id, i});
  }
}

inline void check_pairing(std::uint32_t lookahead_n, std::uint32_t stride) {
  if (lookahead_n < 1) throw ConfigError("lookahead must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
}

// In-memory variant; runs are pooled in the order given.
inline PairDataset build_pairs(std::span<const std::uint64_t> run_ids,
                               std::span<const Trajectory> trajectories, std::uint32_t lookahead_n,
                               std::uint32_t stride) {
  check_pairing(lookahead_n, stride);
  if (run_ids.size() != trajectories.size()) throw ShapeMismatch("run ids vs trajectories");
  PairDataset ds;
  ds.lookahead_n = lookahead_n;
  ds.stride = stride;
  ds.dt = trajectories.empty() ? 0.0 : trajectories.front().dt;
  ds.run_ids.assign(run_ids.begin(), run_ids.end());
  for (std::size_t r = 0; r < run_ids.size(); ++r) append_pairs(ds, run_ids[r], trajectories[r]);
  return ds;
}

// Loads each selected run from disk. Pairs are pooled in ascending run id
// then index order regardless of the order of `run_ids`.
inline PairDataset build_pairs(const CorpusManifest& manifest, std::vector<std::uint64_t> run_ids,
                               std::uint32_t lookahead_n, std::uint32_t stride) {
  check_pairing(lookahead_n, stride);
  std::sort(run_ids.begin(), run_ids.end());
  run_ids.erase(std::unique(run_ids.begin(), run_ids.end()), run_ids.end());
  PairDataset ds;
  ds.lookahead_n = lookahead_n;
  ds.stride = stride;
  ds.dt = manifest.solver.dt;
  ds.manifest_path = manifest.directory / "manifest.json";
  ds.run_ids = run_ids;
  for (std::uint64_t id : run_ids) {
    const RunRecord& rec = manifest.run(id);
    if (manifest.solver.n_steps < static_cast<std::size_t>(lookahead_n + 1) * stride) {
      throw RunTooShort(id);
    }
    append_pairs(ds, id, read_trajectory_csv(manifest.directory / rec.file));
  }
  return ds;
}

// Picks `count` distinct run ids uniformly (partial Fisher-Yates), returned
// ascending. Asking for at least as many runs as exist returns all of them.
inline std::vector<std::uint64_t> select_runs(const CorpusManifest& manifest, std::size_t count,
                                              std::uint64_t seed) {
  std::vector<std::uint64_t> ids;
  ids.reserve(manifest.runs.size());
  for (const RunRecord& r : manifest.runs) ids.push_back(r.run_id);
  if (count < ids.size()) {
    CounterRng rng(derive_key({seed, 0x53454C45ull /* "SELE" */}));
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + rng.index(ids.size() - k);
      std::swap(ids[k], ids[j]);
    }
    ids.resize(count);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Sampling

enum class Purpose : std::uint64_t { train = 0, test = 1 };

struct SamplerConfig {
  std::uint64_t epoch_seed = 0;
  std::uint32_t batch_size = 30;
  std::uint32_t test_batch_size = 30;

  bool operator==(const SamplerConfig&) const = default;
};

// Row-major [size x 6] inputs and targets.
struct Batch {
  std::vector<std::size_t> indices;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return indices.size(); }
  std::span<const double> input(std::size_t k) const { return {&inputs[k * kNumSpecies], kNumSpecies}; }
  std::span<const double> target(std::size_t k) const {
    return {&targets[k * kNumSpecies], kNumSpecies};
  }
};

// Uniform with-replacement draw of `count` pairs from the stream
// (seed, epoch, purpose, attempt).
inline Batch draw_batch(const PairDataset& ds, std::uint64_t seed, std::uint64_t epoch, Purpose purpose,
                        std::size_t count, std::uint64_t attempt = 0) {
  if (ds.empty()) throw ConfigError("cannot sample from an empty dataset");
  CounterRng rng(derive_key({seed, epoch, static_cast<std::uint64_t>(purpose), attempt}));
  Batch b;
  b.indices.resize(count);
  b.inputs.resize(count * kNumSpecies);
  b.targets.resize(count * kNumSpecies);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = rng.index(ds.size());
    b.indices[k] = idx;
    std::copy(ds.pairs[idx].input.begin(), ds.pairs[idx].input.end(), b.inputs.begin() + k * kNumSpecies);
    std::copy(ds.pairs[idx].target.begin(), ds.pairs[idx].target.end(),
              b.targets.begin() + k * kNumSpecies);
  }
  return b;
}

inline Batch sample_batch(const PairDataset& ds, const SamplerConfig& cfg, std::uint64_t epoch,
                          Purpose purpose) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const std::size_t count = purpose == Purpose::train ? cfg.batch_size : cfg.test_batch_size;
  return draw_batch(ds, cfg.epoch_seed, epoch, purpose, count);
}

// ---------------------------------------------------------------------------
// Pair file: "ODEPAIRS", u32 version, u32 pair_count, u32 dim, u32 lookahead_n,
// u32 stride, f64 dt (raw solver step), then pair_count x 12 f64.

inline constexpr std::string_view kPairMagic = "ODEPAIRS";
inline constexpr std::uint32_t kPairVersion = 1;

inline void write_pairs(const PairDataset& ds, const std::filesystem::path& path) {
  if (ds.pairs.size() > 0xFFFFFFFFull) throw ShapeMismatch("too many pairs for u32 count");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binary::write_magic(os, kPairMagic);
  binary::write_u32(os, kPairVersion);
  binary::write_u32(os, static_cast<std::uint32_t>(ds.pairs.size()));
  binary::write_u32(os, static_cast<std::uint32_t>(kNumSpecies));
  binary::write_u32(os, ds.lookahead_n);
  binary::write_u32(os, ds.stride);
  binary::write_f64(os, ds.dt);
  for (const Pair& p : ds.pairs) {
    binary::write_f64s(os, p.input);
    binary::write_f64s(os, p.target);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

inline PairDataset read_pairs(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  binary::expect_magic(is, kPairMagic);
  const std::uint32_t version = binary::read_u32(is, "version");
  if (version != kPairVersion) throw SchemaMismatch("pair file version " + std::to_string(version));
  const std::uint32_t count = binary::read_u32(is, "pair_count");
  const std::uint32_t dim = binary::read_u32(is, "dim");
  if (dim != kNumSpecies) throw DimensionMismatch("pair file dim = " + std::to_string(dim));
  PairDataset ds;
  ds.lookahead_n = binary::read_u32(is, "lookahead_n");
  ds.stride = binary::read_u32(is, "stride");
  ds.dt = binary::read_f64(is, "dt");
  // Header is 8 + 5 * 4 + 8 bytes; refuse counts the file cannot hold.
  const std::uintmax_t body = std::filesystem::file_size(path) - 36;
  if (static_cast<std::uintmax_t>(count) * 2 * kNumSpecies * 8 > body) {
    throw IoError(path.string() + ": truncated (pair_count " + std::to_string(count) + ")");
  }
  ds.pairs.resize(count);
  for (Pair& p : ds.pairs) {
    binary::read_f64s(is, p.input, "pair record");
    binary::read_f64s(is, p.target, "pair record");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in pair file");
  return ds;
}

}  // namespace odesurro
