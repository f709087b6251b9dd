#include <catch_amalgamated.hpp>

#include "odesurro/config.hpp"
#include "odesurro/plot_data.hpp"
#include "test_support.hpp"

using namespace odesurro;

TEST_CASE("default config serializes and parses back", "[config]") {
  const RunConfig def;
  const nlohmann::json j = to_json(def);
  CHECK(j["solver"]["dt"] == 0.01);
  CHECK(j["solver"]["n_steps"] == 50000);
  CHECK(j["train"]["lr"] == 1e-4);
  CHECK(j["train"]["batch_size"] == 30);
  CHECK(j["train"]["hidden_dim"] == 50);
  CHECK(j["train"]["clip_max_norm"] == 1.0);
  CHECK(j["train"]["target_rel_error"] == 0.03);
  CHECK(j["dataset"]["stride"] == 25);
  CHECK(j["bench"]["lookaheads"] == std::vector<int>{1, 5, 10, 15, 25, 50});
  CHECK(to_json(run_config_from_json(j)) == j);
}

TEST_CASE("partial configs override only what they name", "[config]") {
  const auto j = nlohmann::json::parse(R"({
    "gen": {"n_runs": 7, "param_max": {"tau_prc": 0.0}, "init_max": {"Z_p": 2.5}},
    "solver": {"n_steps": 1000},
    "circuit": {"eq3_decay_on_crna": true},
    "train": {"seed": 4, "lr": 0.001},
    "bench": {"lookaheads": [1, 25]}
  })");
  const RunConfig c = run_config_from_json(j);
  CHECK(c.gen.n_runs == 7);
  CHECK(c.gen.param_max[6] == 0.0);
  CHECK(c.gen.param_max[0] == 1.0);
  CHECK(c.gen.init_max[kZp] == 2.5);
  CHECK(c.gen.solver.n_steps == 1000);
  CHECK(c.gen.solver.dt == 0.01);
  CHECK(c.gen.circuit.eq3_decay_on_crna);
  CHECK(c.train.seed == 4);
  CHECK(c.train.lr == 0.001);
  CHECK(c.train.sampler.batch_size == 30);
  CHECK(c.bench.lookaheads == std::vector<std::uint32_t>{1, 25});
}

TEST_CASE("unknown or mistyped keys are rejected", "[config]") {
  for (const char* text : {R"({"trian": {}})", R"({"train": {"learning_rate": 1}})",
                           R"({"gen": {"param_max": {"gamma_Q": 1}}})", R"({"solver": {"dt": "fast"}})",
                           R"({"gen": {"init_max": {"A": "x"}}})", R"([1, 2])"}) {
    INFO(text);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(text)), ConfigError);
  }
}

TEST_CASE("seed override replaces every seed", "[config]") {
  RunConfig c;
  apply_seed_override(c, "1234");
  CHECK(c.gen.master_seed == 1234);
  CHECK(c.dataset.select_seed == 1234);
  CHECK(c.train.seed == 1234);
  RunConfig d;
  apply_seed_override(d, nullptr);
  apply_seed_override(d, "");
  CHECK(d.train.seed == 0);
  CHECK_THROWS_AS(apply_seed_override(d, "12x"), ConfigError);
}

TEST_CASE("config files load, bad JSON is a config error", "[config][io]") {
  test::TempDir dir("cfg");
  detail::write_file(dir / "ok.json", R"({"dataset": {"runs": 10}})");
  CHECK(load_run_config(dir / "ok.json").dataset.runs == 10);
  detail::write_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), ConfigError);
}

TEST_CASE("curves merge into one long table", "[plot]") {
  test::TempDir dir("plot");
  TrainingCurve a, b;
  a.points = {{100, 0.5, 1}, {200, 0.02, 0.5}};
  b.points = {{100, 0.9, 3}, {200, 0.4, 2}, {300, 0.025, 1}};
  write_curve_csv(a, dir / "a.csv");
  write_curve_csv(b, dir / "b.csv");
  const std::string merged = merge_curves({{1, dir / "a.csv"}, {25, dir / "b.csv"}});
  std::size_t lines = 0;
  for (char ch : merged) lines += ch == '\n';
  CHECK(lines == 1 + a.points.size() + b.points.size());
  CHECK(merged.rfind("n,epoch,rel_error\n1,100,0.5\n", 0) == 0);
  CHECK(merged.find("\n25,300,0.025") != std::string::npos);
  CHECK_THROWS_AS(merge_curves({}), ConfigError);
  CHECK_THROWS_AS(merge_curves({{1, dir / "missing.csv"}}), IoError);
}

TEST_CASE("bench plot data recomputes speedup", "[plot]") {
  test::TempDir dir("plotb");
  write_bench_csv({{1, 2e-5, 0, 1e-6, 0, 999.0, 10, 1}}, dir / "b.csv");
  const std::string out = bench_plot_data(dir / "b.csv");
  detail::write_file(dir / "plot.csv", out);
  CHECK(read_bench_csv(dir / "plot.csv").at(0).speedup == 2e-5 / 1e-6);
  detail::write_file(dir / "empty.csv", std::string(kBenchHeader) + "\n");
  CHECK_THROWS_AS(bench_plot_data(dir / "empty.csv"), SchemaMismatch);
}

TEST_CASE("curve arguments parse as N=path", "[plot]") {
  const CurveInput in = parse_curve_arg("25=out/curve.csv");
  CHECK(in.lookahead_n == 25);
  CHECK(in.path == "out/curve.csv");
  CHECK_THROWS_AS(parse_curve_arg("curve.csv"), ConfigError);
  CHECK_THROWS_AS(parse_curve_arg("2x=curve.csv"), ConfigError);
  CHECK_THROWS_AS(parse_curve_arg("=curve.csv"), ConfigError);
}
