#pragma once

// RunConfig: every knob of the generate -> make-dataset -> train -> bench
// pipeline in one JSON document. Unknown keys are rejected; missing keys
// keep their defaults.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odesurro/bench.hpp"
#include "odesurro/datagen.hpp"
#include "odesurro/error.hpp"
#include "odesurro/trainer.hpp"

namespace odesurro {

struct DatasetOptions {
  std::uint64_t runs = 1000;  // runs selected from the corpus
  std::uint32_t stride = 25;
  std::uint64_t select_seed = 0;
};

struct BenchConfig {
  std::vector<std::uint32_t> lookaheads = default_lookaheads();
  std::uint32_t repeats = 10;
  std::uint64_t inner_iters = 0;
};

struct RunConfig {
  GenConfig gen;  // gen.solver is the solver section
  DatasetOptions dataset;
  TrainConfig train;
  BenchConfig bench;
};

namespace config_detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <std::size_t N>
void read_named(const nlohmann::json& j, const char* key, std::array<double, N>& out,
                const std::array<std::string_view, N>& names, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& obj = j.at(key);
  const std::string sub = where + "." + key;
  if (!obj.is_object()) throw ConfigError(sub + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::size_t k = 0;
    while (k < N && names[k] != it.key()) ++k;
    if (k == N) throw ConfigError("unknown key '" + sub + "." + it.key() + "'");
    if (!it.value().is_number()) throw ConfigError(sub + "." + it.key() + " must be a number");
    out[k] = it.value().get<double>();
  }
}

template <std::size_t N>
nlohmann::json named(const std::array<double, N>& vals, const std::array<std::string_view, N>& names) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < N; ++k) j[std::string(names[k])] = vals[k];
  return j;
}

}  // namespace config_detail

inline nlohmann::json to_json(const RunConfig& c) {
  using config_detail::named;
  nlohmann::json j;
  j["gen"] = {{"n_runs", c.gen.n_runs},
              {"master_seed", c.gen.master_seed},
              {"workers", c.gen.workers},
              {"param_max", named(c.gen.param_max, ParameterSet::names)},
              {"init_max", named(c.gen.init_max, kSpeciesNames)}};
  j["solver"] = {{"dt", c.gen.solver.dt}, {"n_steps", c.gen.solver.n_steps}};
  j["circuit"] = {{"eq3_decay_on_crna", c.gen.circuit.eq3_decay_on_crna}};
  j["dataset"] = {{"runs", c.dataset.runs}, {"stride", c.dataset.stride}, {"select_seed", c.dataset.select_seed}};
  const TrainConfig& t = c.train;
  j["train"] = {{"lookahead_n", t.lookahead_n},
                {"target_rel_error", t.target_rel_error},
                {"max_epochs", t.max_epochs},
                {"eval_every", t.eval_every},
                {"steps_per_epoch", t.steps_per_epoch},
                {"seed", t.seed},
                {"batch_size", t.sampler.batch_size},
                {"test_batch_size", t.sampler.test_batch_size},
                {"clip_max_norm", t.clip.max_norm},
                {"lr", t.lr},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"eps", t.eps},
                {"hidden_dim", t.dims.hidden}};
  j["bench"] = {{"lookaheads", c.bench.lookaheads},
                {"repeats", c.bench.repeats},
                {"inner_iters", c.bench.inner_iters}};
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  RunConfig c;
  reject_unknown(j, {"gen", "solver", "circuit", "dataset", "train", "bench"}, "config");
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    reject_unknown(g, {"n_runs", "master_seed", "workers", "param_max", "init_max"}, "gen");
    read(g, "n_runs", c.gen.n_runs, "gen");
    read(g, "master_seed", c.gen.master_seed, "gen");
    read(g, "workers", c.gen.workers, "gen");
    read_named(g, "param_max", c.gen.param_max, ParameterSet::names, "gen");
    read_named(g, "init_max", c.gen.init_max, kSpeciesNames, "gen");
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown(s, {"dt", "n_steps"}, "solver");
    read(s, "dt", c.gen.solver.dt, "solver");
    read(s, "n_steps", c.gen.solver.n_steps, "solver");
  }
  if (j.contains("circuit")) {
    const auto& s = j.at("circuit");
    reject_unknown(s, {"eq3_decay_on_crna"}, "circuit");
    read(s, "eq3_decay_on_crna", c.gen.circuit.eq3_decay_on_crna, "circuit");
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, {"runs", "stride", "select_seed"}, "dataset");
    read(d, "runs", c.dataset.runs, "dataset");
    read(d, "stride", c.dataset.stride, "dataset");
    read(d, "select_seed", c.dataset.select_seed, "dataset");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t,
                   {"lookahead_n", "target_rel_error", "max_epochs", "eval_every", "steps_per_epoch",
                    "seed", "batch_size", "test_batch_size", "clip_max_norm", "lr", "beta1", "beta2",
                    "eps", "hidden_dim"},
                   "train");
    TrainConfig& tc = c.train;
    read(t, "lookahead_n", tc.lookahead_n, "train");
    read(t, "target_rel_error", tc.target_rel_error, "train");
    read(t, "max_epochs", tc.max_epochs, "train");
    read(t, "eval_every", tc.eval_every, "train");
    read(t, "steps_per_epoch", tc.steps_per_epoch, "train");
    read(t, "seed", tc.seed, "train");
    read(t, "batch_size", tc.sampler.batch_size, "train");
    read(t, "test_batch_size", tc.sampler.test_batch_size, "train");
    read(t, "clip_max_norm", tc.clip.max_norm, "train");
    read(t, "lr", tc.lr, "train");
    read(t, "beta1", tc.beta1, "train");
    read(t, "beta2", tc.beta2, "train");
    read(t, "eps", tc.eps, "train");
    read(t, "hidden_dim", tc.dims.hidden, "train");
  }
  if (j.contains("bench")) {
    const auto& b = j.at("bench");
    reject_unknown(b, {"lookaheads", "repeats", "inner_iters"}, "bench");
    read(b, "lookaheads", c.bench.lookaheads, "bench");
    read(b, "repeats", c.bench.repeats, "bench");
    read(b, "inner_iters", c.bench.inner_iters, "bench");
  }
  return c;
}

// ODESURRO_SEED, when set, replaces every seed in the config.
inline void apply_seed_override(RunConfig& c, const char* env_value) {
  if (!env_value || !*env_value) return;
  std::uint64_t seed = 0;
  const std::string_view s(env_value);
  auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("ODESURRO_SEED must be an unsigned integer, got '" + std::string(s) + "'");
  }
  c.gen.master_seed = seed;
  c.dataset.select_seed = seed;
  c.train.seed = seed;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace odesurro
