#pragma once

// Randomized corpus generation: per-run parameters and initial conditions
// drawn uniformly from [0, bound], integrated with forward Euler and written
// as one CSV per run plus a JSON manifest.

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "odesurro/circuit.hpp"
#include "odesurro/error.hpp"
#include "odesurro/euler.hpp"
#include "odesurro/random.hpp"

namespace odesurro {

inline constexpr std::uint32_t kMaxRetries = 100;

struct GenConfig {
  std::uint64_t n_runs = 1;
  std::uint64_t master_seed = 0;
  std::array<double, kNumParams> param_max = filled(1.0);
  std::array<double, kNumSpecies> init_max = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  SolverConfig solver;
  CircuitOptions circuit;
  unsigned workers = 0;  // 0 = hardware concurrency; output does not depend on it

  static constexpr std::array<double, kNumParams> filled(double v) {
    std::array<double, kNumParams> a{};
    a.fill(v);
    return a;
  }

  void validate() const {
    if (!solver.valid()) throw ConfigError("solver requires dt > 0 and n_steps >= 1");
    for (std::size_t k = 0; k < kNumParams; ++k) {
      if (!(param_max[k] >= 0.0) || !std::isfinite(param_max[k])) {
        throw ConfigError("bound for " + std::string(ParameterSet::names[k]) + " must be >= 0");
      }
    }
    for (std::size_t k = 0; k < kNumSpecies; ++k) {
      if (!(init_max[k] >= 0.0) || !std::isfinite(init_max[k])) {
        throw ConfigError("bound for initial " + std::string(kSpeciesNames[k]) + " must be >= 0");
      }
    }
  }
};

struct RunSpec {
  std::uint64_t run_id = 0;
  std::uint64_t seed = 0;
  ParameterSet params;
  StateVector init{};

  bool operator==(const RunSpec&) const = default;
};

inline std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t run_id, std::uint32_t retry) {
  return derive_key({master_seed, run_id, retry});
}

inline RunSpec sample_run_spec(const GenConfig& cfg, std::uint64_t run_id, std::uint32_t retry = 0) {
  if (run_id >= cfg.n_runs) {
    throw ConfigError("run_id " + std::to_string(run_id) + " out of range for " +
                      std::to_string(cfg.n_runs) + " runs");
  }
  RunSpec spec;
  spec.run_id = run_id;
  spec.seed = run_seed(cfg.master_seed, run_id, retry);
  CounterRng rng(spec.seed);
  std::array<double, kNumParams> p{};
  for (std::size_t k = 0; k < kNumParams; ++k) p[k] = rng.uniform(cfg.param_max[k]);
  spec.params = ParameterSet::from_array(p);
  for (std::size_t k = 0; k < kNumSpecies; ++k) spec.init[k] = rng.uniform(cfg.init_max[k]);
  return spec;
}

struct GeneratedRun {
  RunSpec spec;
  Trajectory trajectory;
  std::uint32_t retries = 0;  // blown-up draws discarded before this one
};

// Integrates run_id, resampling from (master_seed, run_id, retry) whenever the
// trajectory blows up. Throws TooManyRetries after kMaxRetries failures.
inline GeneratedRun generate_run(const GenConfig& cfg, std::uint64_t run_id) {
  for (std::uint32_t retry = 0; retry < kMaxRetries; ++retry) {
    RunSpec spec = sample_run_spec(cfg, run_id, retry);
    try {
      Trajectory t = integrate(spec.init, spec.params, cfg.solver, cfg.circuit);
      return {std::move(spec), std::move(t), retry};
    } catch (const NonFiniteState&) {
    } catch (const DegenerateDenominator&) {
    }
  }
  throw TooManyRetries(run_id);
}

// ---------------------------------------------------------------------------
// Trajectory CSV

inline constexpr std::string_view kTrajectoryHeader = "t,A,B,C_RNA,C_p,Z_RNA,Z_p";

namespace detail {

// Exact "%.17g" for normal doubles with 1e-6 <= |v| < 1e17, where the value
// scaled to 17 integer digits fits 128-bit arithmetic. Returns nullptr for
// anything else. Output is byte-identical to std::to_chars(general, 17),
// which is several times slower and dominates corpus writing.
inline char* format17_fast(char* out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  const int biased = static_cast<int>((bits >> 52) & 0x7FF);
  if (biased == 0 || biased == 0x7FF) return nullptr;
  const double mag = v < 0 ? -v : v;
  if (mag < 1e-6 || mag >= 1e17) return nullptr;

  using u128 = unsigned __int128;
  static constexpr std::array<std::uint64_t, 20> kPow10 = [] {
    std::array<std::uint64_t, 20> p{};
    p[0] = 1;
    for (std::size_t i = 1; i < p.size(); ++i) p[i] = p[i - 1] * 10;
    return p;
  }();
  const std::uint64_t m = (bits & ((1ull << 52) - 1)) | (1ull << 52);
  const int e = biased - 1075;

  // Decimal exponent estimate; corrected below if off by one.
  // floor(log10(2^(e+52))) via 78913 / 2^18 ~ log10(2) is x or x - 1; a
  // double comparison picks between them (the loop below corrects misses).
  static constexpr std::array<double, 25> kPow10d = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1,
                                                     1e2,  1e3,  1e4,  1e5,  1e6,  1e7,  1e8,  1e9, 1e10,
                                                     1e11, 1e12, 1e13, 1e14, 1e15, 1e16, 1e17};
  int x = ((e + 52) * 78913) >> 18;
  if (x >= -7 && x <= 16 && mag >= kPow10d[static_cast<std::size_t>(x + 8)]) ++x;
  std::uint64_t q = 0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const int k = 16 - x;  // 0 <= k <= 22 in the accepted range
    if (k < 0 || k > 22) return nullptr;
    const u128 p10 = k <= 19 ? u128(kPow10[static_cast<std::size_t>(k)])
                             : u128(kPow10[19]) * kPow10[static_cast<std::size_t>(k - 19)];
    const u128 scaled = u128(m) * p10;
    // The exponent is fixed by the truncated value; rounding comes after.
    u128 whole;
    bool round_up = false;
    if (e >= 0) {
      whole = scaled << e;
    } else {
      const int s = -e;
      if (s >= 127) return nullptr;
      whole = scaled >> s;
      const u128 rem = scaled & ((u128(1) << s) - 1);
      const u128 half = u128(1) << (s - 1);
      round_up = rem > half || (rem == half && (whole & 1));
    }
    if (whole < u128(kPow10[16])) {
      --x;
      continue;
    }
    if (whole >= u128(kPow10[17])) {
      ++x;
      continue;
    }
    q = static_cast<std::uint64_t>(whole) + (round_up ? 1 : 0);
    break;
  }
  if (q == 0) return nullptr;
  if (q == kPow10[17]) {
    q = kPow10[16];
    ++x;
  }

  // Two independent 8-digit halves, two digits per step.
  static constexpr std::array<char, 200> kDigitPairs = [] {
    std::array<char, 200> t{};
    for (int i = 0; i < 100; ++i) {
      t[static_cast<std::size_t>(2 * i)] = static_cast<char>('0' + i / 10);
      t[static_cast<std::size_t>(2 * i + 1)] = static_cast<char>('0' + i % 10);
    }
    return t;
  }();
  char d[17];
  auto hi = static_cast<std::uint32_t>(q / 100000000);
  auto lo = static_cast<std::uint32_t>(q % 100000000);
  for (int i = 15; i >= 9; i -= 2) {
    std::memcpy(d + i, kDigitPairs.data() + 2 * (lo % 100), 2);
    std::memcpy(d + i - 8, kDigitPairs.data() + 2 * (hi % 100), 2);
    lo /= 100;
    hi /= 100;
  }
  d[0] = static_cast<char>('0' + hi);
  int last = 16;  // last significant digit after trimming zeros
  while (last > 0 && d[last] == '0') --last;

  if (v < 0) *out++ = '-';
  if (x < -4 || x >= 17) {
    *out++ = d[0];
    if (last > 0) {
      *out++ = '.';
      for (int i = 1; i <= last; ++i) *out++ = d[i];
    }
    *out++ = 'e';
    *out++ = x < 0 ? '-' : '+';
    const int ax = x < 0 ? -x : x;
    if (ax >= 100) *out++ = static_cast<char>('0' + ax / 100);
    *out++ = static_cast<char>('0' + ax / 10 % 10);
    *out++ = static_cast<char>('0' + ax % 10);
  } else if (x >= 0) {
    for (int i = 0; i <= x; ++i) *out++ = d[i];
    if (last > x) {
      *out++ = '.';
      for (int i = x + 1; i <= last; ++i) *out++ = d[i];
    }
  } else {
    *out++ = '0';
    *out++ = '.';
    for (int i = 0; i < -x - 1; ++i) *out++ = '0';
    for (int i = 0; i <= last; ++i) *out++ = d[i];
  }
  return out;
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  char* end = format17_fast(buf, v);
  if (!end) end = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17).ptr;
  out.append(buf, end);
}

inline double parse_double(std::string_view field, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw SchemaMismatch("cannot parse '" + std::string(field) + "' in " + context);
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::string trajectory_to_csv(const Trajectory& t) {
  std::string out;
  out.reserve(t.rows() * 7 * 24 + 64);
  out.append(kTrajectoryHeader);
  out.push_back('\n');
  for (std::size_t k = 0; k < t.rows(); ++k) {
    detail::append_double(out, t.time(k));
    for (double v : t.states[k]) {
      out.push_back(',');
      detail::append_double(out, v);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t) {
  detail::write_file(path, trajectory_to_csv(t));
}

// dt is taken from the time column of row 1 (0 for a single-row file).
inline Trajectory parse_trajectory_csv(std::string_view text, const std::string& context) {
  Trajectory t;
  std::size_t pos = text.find('\n');
  if (pos == std::string_view::npos) throw SchemaMismatch(context + ": missing header");
  std::string_view header = text.substr(0, pos);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  if (header != kTrajectoryHeader) throw SchemaMismatch(context + ": unexpected header");
  ++pos;
  std::vector<double> times;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::array<double, kNumSpecies + 1> row{};
    std::size_t col = 0, start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field = line.substr(start, comma == std::string_view::npos
                                                            ? std::string_view::npos
                                                            : comma - start);
      if (col >= row.size()) throw SchemaMismatch(context + ": too many columns");
      row[col++] = detail::parse_double(field, context);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (col != row.size()) throw SchemaMismatch(context + ": too few columns");
    times.push_back(row[0]);
    StateVector s;
    std::copy(row.begin() + 1, row.end(), s.begin());
    t.states.push_back(s);
  }
  if (t.states.empty()) throw SchemaMismatch(context + ": no data rows");
  t.dt = times.size() > 1 ? times[1] : 0.0;
  return t;
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  return parse_trajectory_csv(detail::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Manifest

struct RunRecord {
  std::uint64_t run_id = 0;
  std::uint64_t seed = 0;
  std::string file;
  ParameterSet params;
  StateVector init{};
  std::uint32_t retries = 0;

  bool operator==(const RunRecord&) const = default;
};

struct CorpusManifest {
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  CircuitOptions circuit;
  std::array<double, kNumParams> param_max{};
  std::array<double, kNumSpecies> init_max{};
  std::vector<RunRecord> runs;
  std::filesystem::path directory;  // where run files live; not serialized

  const RunRecord& run(std::uint64_t run_id) const {
    auto it = std::lower_bound(runs.begin(), runs.end(), run_id,
                               [](const RunRecord& r, std::uint64_t id) { return r.run_id < id; });
    if (it == runs.end() || it->run_id != run_id) {
      throw SchemaMismatch("manifest has no run " + std::to_string(run_id));
    }
    return *it;
  }

  Trajectory load_trajectory(std::uint64_t run_id) const {
    return read_trajectory_csv(directory / run(run_id).file);
  }
};

inline std::string run_file_name(std::uint64_t run_id) {
  return "run_" + std::to_string(run_id) + ".csv";
}

inline nlohmann::json params_to_json(const ParameterSet& p) {
  nlohmann::json j = nlohmann::json::object();
  const auto a = p.to_array();
  for (std::size_t k = 0; k < kNumParams; ++k) j[std::string(ParameterSet::names[k])] = a[k];
  return j;
}

inline nlohmann::json state_to_json(const StateVector& s) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumSpecies; ++k) j[std::string(kSpeciesNames[k])] = s[k];
  return j;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaMismatch(std::string("manifest field '") + key + "' missing");
  }
  return j.at(key);
}

template <class T>
T get(const nlohmann::json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline ParameterSet params_from_json(const nlohmann::json& j) {
  std::array<double, kNumParams> a{};
  for (std::size_t k = 0; k < kNumParams; ++k) {
    a[k] = detail::get<double>(j, std::string(ParameterSet::names[k]).c_str());
  }
  return ParameterSet::from_array(a);
}

inline StateVector state_from_json(const nlohmann::json& j) {
  StateVector s{};
  for (std::size_t k = 0; k < kNumSpecies; ++k) {
    s[k] = detail::get<double>(j, std::string(kSpeciesNames[k]).c_str());
  }
  return s;
}

inline nlohmann::json manifest_to_json(const CorpusManifest& m) {
  nlohmann::json j;
  j["master_seed"] = m.master_seed;
  j["solver"] = {{"dt", m.solver.dt}, {"n_steps", m.solver.n_steps}};
  j["circuit"] = {{"eq3_decay_on_crna", m.circuit.eq3_decay_on_crna}};
  nlohmann::json pb = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumParams; ++k) pb[std::string(ParameterSet::names[k])] = m.param_max[k];
  nlohmann::json ib = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumSpecies; ++k) ib[std::string(kSpeciesNames[k])] = m.init_max[k];
  j["bounds"] = {{"params", pb}, {"init", ib}};
  nlohmann::json runs = nlohmann::json::array();
  for (const RunRecord& r : m.runs) {
    runs.push_back({{"run_id", r.run_id},
                    {"seed", r.seed},
                    {"file", r.file},
                    {"params", params_to_json(r.params)},
                    {"init", state_to_json(r.init)},
                    {"retries", r.retries}});
  }
  j["runs"] = std::move(runs);
  return j;
}

inline CorpusManifest manifest_from_json(const nlohmann::json& j) {
  CorpusManifest m;
  m.master_seed = detail::get<std::uint64_t>(j, "master_seed");
  const auto& solver = detail::field(j, "solver");
  m.solver.dt = detail::get<double>(solver, "dt");
  m.solver.n_steps = detail::get<std::size_t>(solver, "n_steps");
  if (j.contains("circuit")) {
    m.circuit.eq3_decay_on_crna = detail::get<bool>(j.at("circuit"), "eq3_decay_on_crna");
  }
  const auto& bounds = detail::field(j, "bounds");
  m.param_max = params_from_json(detail::field(bounds, "params")).to_array();
  m.init_max = state_from_json(detail::field(bounds, "init"));
  const auto& runs = detail::field(j, "runs");
  if (!runs.is_array()) throw SchemaMismatch("manifest field 'runs' is not an array");
  for (const auto& r : runs) {
    RunRecord rec;
    rec.run_id = detail::get<std::uint64_t>(r, "run_id");
    rec.seed = detail::get<std::uint64_t>(r, "seed");
    rec.file = detail::get<std::string>(r, "file");
    rec.params = params_from_json(detail::field(r, "params"));
    rec.init = state_from_json(detail::field(r, "init"));
    rec.retries = detail::get<std::uint32_t>(r, "retries");
    m.runs.push_back(std::move(rec));
  }
  std::sort(m.runs.begin(), m.runs.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
  return m;
}

inline void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaMismatch(path.string() + ": " + e.what());
  }
  CorpusManifest m = manifest_from_json(j);
  m.directory = path.parent_path();
  return m;
}

namespace detail {

// Number of generate_corpus calls in flight; the timing harness refuses to
// run while this is nonzero.
inline std::atomic<int> active_generations{0};

struct GenerationGuard {
  GenerationGuard() { ++active_generations; }
  ~GenerationGuard() { --active_generations; }
  GenerationGuard(const GenerationGuard&) = delete;
  GenerationGuard& operator=(const GenerationGuard&) = delete;
};

}  // namespace detail

inline bool generation_active() { return detail::active_generations.load() > 0; }

inline RunRecord make_record(const GeneratedRun& g) {
  return {g.spec.run_id, g.spec.seed, run_file_name(g.spec.run_id), g.spec.params, g.spec.init,
          g.retries};
}

// Writes run_<id>.csv for every run and manifest.json into out_dir. Runs are
// distributed over worker threads; files and manifest are identical for any
// worker count.
inline CorpusManifest generate_corpus(const GenConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const detail::GenerationGuard guard;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::optional<RunRecord>> records(cfg.n_runs);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const std::uint64_t id = next.fetch_add(1);
      if (id >= cfg.n_runs) return;
      try {
        GeneratedRun g = generate_run(cfg, id);
        write_trajectory_csv(out_dir / run_file_name(id), g.trajectory);
        records[id] = make_record(g);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };

  unsigned n_workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(std::min<std::uint64_t>(n_workers, std::max<std::uint64_t>(cfg.n_runs, 1)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  CorpusManifest m;
  m.master_seed = cfg.master_seed;
  m.solver = cfg.solver;
  m.circuit = cfg.circuit;
  m.param_max = cfg.param_max;
  m.init_max = cfg.init_max;
  m.directory = out_dir;
  m.runs.reserve(cfg.n_runs);
  for (auto& r : records) m.runs.push_back(std::move(*r));
  write_manifest(m, out_dir / "manifest.json");
  return m;
}

}  // namespace odesurro
