#include <catch_amalgamated.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "odesurro/datagen.hpp"
#include "odesurro/random.hpp"
#include "test_support.hpp"

using namespace odesurro;

TEST_CASE("counter streams are reproducible and distinct", "[random]") {
  CounterRng a(derive_key({1, 2, 3})), b(derive_key({1, 2, 3})), c(derive_key({1, 2, 4}));
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  CHECK(derive_key({1, 2}) != derive_key({2, 1}));
  CHECK(derive_key({0}) != derive_key({0, 0}));
}

TEST_CASE("uniform draws stay in range", "[random]") {
  CounterRng r(42);
  for (int k = 0; k < 10000; ++k) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.index(7) < 7);
  }
}

TEST_CASE("run specs are a pure function of seed and run id", "[datagen]") {
  GenConfig cfg;
  cfg.n_runs = 10;
  cfg.master_seed = 99;
  CHECK(sample_run_spec(cfg, 4) == sample_run_spec(cfg, 4));
  CHECK(!(sample_run_spec(cfg, 4) == sample_run_spec(cfg, 5)));
  CHECK(!(sample_run_spec(cfg, 4, 0) == sample_run_spec(cfg, 4, 1)));
  GenConfig other = cfg;
  other.master_seed = 100;
  CHECK(!(sample_run_spec(cfg, 4) == sample_run_spec(other, 4)));
  CHECK_THROWS_AS(sample_run_spec(cfg, 10), ConfigError);
}

TEST_CASE("zero bounds give all-zero parameters", "[datagen]") {
  GenConfig cfg;
  cfg.param_max = GenConfig::filled(0.0);
  const RunSpec s = sample_run_spec(cfg, 0);
  CHECK(s.params == ParameterSet{});
  for (double v : s.init) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("per-parameter bounds are honoured", "[datagen]") {
  GenConfig cfg;
  cfg.n_runs = 200;
  cfg.param_max[0] = 0.1;
  cfg.init_max[kZp] = 5.0;
  double max_zp = 0.0;
  for (std::uint64_t id = 0; id < cfg.n_runs; ++id) {
    const RunSpec s = sample_run_spec(cfg, id);
    REQUIRE(s.params.gamma_A <= 0.1);
    max_zp = std::max(max_zp, s.init[kZp]);
  }
  CHECK(max_zp > 1.0);
}

TEST_CASE("gamma_A draws are uniform on [0, 1]", "[datagen]") {
  GenConfig cfg;
  cfg.n_runs = 10000;
  cfg.master_seed = 2024;
  double sum = 0.0, lo = 1.0, hi = 0.0;
  for (std::uint64_t id = 0; id < cfg.n_runs; ++id) {
    const double g = sample_run_spec(cfg, id).params.gamma_A;
    sum += g;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  const double mean = sum / static_cast<double>(cfg.n_runs);
  CHECK(mean >= 0.49);
  CHECK(mean <= 0.51);
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0);
}

TEST_CASE("trajectory CSV round trip is bit-exact", "[datagen]") {
  test::TempDir dir("traj");
  const Trajectory t = integrate(test::kOracleState, test::oracle_params(), {0.01, 300});
  write_trajectory_csv(dir / "t.csv", t);
  const Trajectory back = read_trajectory_csv(dir / "t.csv");
  CHECK(back.states == t.states);
  CHECK(back.dt == t.dt);
  const std::string text = detail::read_file(dir / "t.csv");
  CHECK(text.rfind("t,A,B,C_RNA,C_p,Z_RNA,Z_p\n", 0) == 0);
}

TEST_CASE("17-digit formatting matches std::to_chars", "[datagen]") {
  auto reference = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
  };
  auto ours = [](double v) {
    std::string s;
    detail::append_double(s, v);
    return s;
  };
  std::vector<double> values = {0.0, -0.0, 1.0, -1.0, 0.1, 0.025, 1e-6, 1e-5, 9.9999999999999995e-7, 1e16,
                                1e17, 99999999999999984.0, 123456.789, 5e-324, 1e300,
                                std::numeric_limits<double>::infinity(), std::numeric_limits<double>::max()};
  for (int p = -8; p <= 18; ++p) {
    const double t = std::pow(10.0, p);
    values.insert(values.end(), {t, std::nextafter(t, 0.0), std::nextafter(t, 1e308)});
  }
  CounterRng rng(42);
  for (int k = 0; k < 1000000; ++k) {
    // Log-uniform magnitudes spanning the fast path and both fallbacks.
    const double mag = std::pow(10.0, rng.uniform(26.0) - 8.0);
    values.push_back(k % 2 ? mag : -mag);
    // Dyadic values whose exact expansions end in a 5 exercise the tie rule.
    const auto m = static_cast<std::int64_t>(rng.next_u64() >> (11 + k % 40));
    values.push_back(std::ldexp(static_cast<double>(m), -static_cast<int>(k % 70)));
  }
  std::size_t mismatches = 0;
  for (double v : values) {
    if (ours(v) != reference(v)) {
      if (++mismatches <= 5) FAIL_CHECK(ours(v) << " vs " << reference(v));
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("malformed trajectory CSV is rejected", "[datagen]") {
  CHECK_THROWS_AS(parse_trajectory_csv("t,A\n0,1\n", "x"), SchemaMismatch);
  CHECK_THROWS_AS(parse_trajectory_csv("t,A,B,C_RNA,C_p,Z_RNA,Z_p\n0,1,2,3,4,5\n", "x"), SchemaMismatch);
  CHECK_THROWS_AS(parse_trajectory_csv("t,A,B,C_RNA,C_p,Z_RNA,Z_p\n0,1,2,3,4,5,zz\n", "x"), SchemaMismatch);
}

TEST_CASE("small corpus: manifest, files and determinism", "[datagen]") {
  test::TempDir dir("corpus");
  GenConfig cfg;
  cfg.n_runs = 3;
  cfg.master_seed = 5;
  cfg.solver.n_steps = 2000;
  const CorpusManifest m = generate_corpus(cfg, dir / "a");
  REQUIRE(m.runs.size() == 3);
  std::set<std::uint64_t> seeds;
  for (const RunRecord& r : m.runs) {
    seeds.insert(r.seed);
    const Trajectory t = m.load_trajectory(r.run_id);
    CHECK(t.rows() == cfg.solver.n_steps + 1);
    CHECK(t.states[0] == r.init);
  }
  CHECK(seeds.size() == 3);

  const CorpusManifest back = read_manifest(dir / "a" / "manifest.json");
  CHECK(back.runs == m.runs);
  CHECK(back.solver == m.solver);
  CHECK(back.master_seed == 5);
  CHECK(back.param_max == m.param_max);

  GenConfig serial = cfg;
  serial.workers = 1;
  GenConfig parallel = cfg;
  parallel.workers = 3;
  generate_corpus(serial, dir / "b");
  generate_corpus(parallel, dir / "c");
  for (const char* f : {"manifest.json", "run_0.csv", "run_1.csv", "run_2.csv"}) {
    const std::string a = detail::read_file(dir / "a" / f);
    CHECK(a == detail::read_file(dir / "b" / f));
    CHECK(a == detail::read_file(dir / "c" / f));
  }
}

TEST_CASE("blown-up draws are resampled and counted", "[datagen]") {
  // kappa_A and C_p both zero make the Z_RNA denominator vanish on every draw.
  GenConfig cfg;
  cfg.solver.n_steps = 10;
  cfg.param_max = GenConfig::filled(0.0);
  cfg.init_max[kCp] = 0.0;
  CHECK_THROWS_AS(generate_run(cfg, 0), TooManyRetries);

  // Huge decay rates with a coarse step diverge for some draws but not all.
  GenConfig wild;
  wild.n_runs = 40;
  wild.solver = {0.5, 4000};
  wild.param_max = GenConfig::filled(5.0);
  std::uint32_t total = 0;
  for (std::uint64_t id = 0; id < wild.n_runs; ++id) {
    const GeneratedRun g = generate_run(wild, id);
    total += g.retries;
    CHECK(g.spec.seed == run_seed(wild.master_seed, id, g.retries));
    CHECK(all_finite(g.trajectory.states.back()));
  }
  CHECK(total > 0);
}

TEST_CASE("invalid generator bounds are rejected", "[datagen]") {
  GenConfig cfg;
  cfg.param_max[3] = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.param_max[3] = std::nan("");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("generation throughput beats 48 ms per 50000-step run", "[datagen][perf]") {
  test::TempDir dir("throughput");
  GenConfig cfg;
  cfg.n_runs = 20;
  cfg.master_seed = 11;
  const auto t0 = std::chrono::steady_clock::now();
  generate_corpus(cfg, dir.path());
  const double per_run =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / cfg.n_runs;
  INFO("seconds per run: " << per_run);
  CHECK(per_run < 0.048);
}
