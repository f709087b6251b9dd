#include <catch_amalgamated.hpp>

#include "odesurro/bench.hpp"
#include "test_support.hpp"

using namespace odesurro;

namespace {

RunSpec oracle_run() { return {0, 0, test::oracle_params(), test::kOracleState}; }

BenchOptions quick() {
  BenchOptions o;
  o.repeats = 5;
  o.min_block_s = 1e-3;
  return o;
}

}  // namespace

TEST_CASE("lookahead 0 is rejected", "[bench]") {
  const LstmModel m = LstmModel::init_uniform({}, 1);
  CHECK_THROWS_AS(bench_pair(m, oracle_run(), 0), ConfigError);
  BenchOptions o;
  o.repeats = 0;
  CHECK_THROWS_AS(bench_pair(m, oracle_run(), 1, o), ConfigError);
}

TEST_CASE("Euler cost grows linearly with the lookahead", "[bench][perf]") {
  const LstmModel m = LstmModel::init_uniform({}, 1);
  const BenchResult r5 = bench_pair(m, oracle_run(), 5, quick());
  const BenchResult r50 = bench_pair(m, oracle_run(), 50, quick());
  const double ratio = r50.euler_mean_s / r5.euler_mean_s;
  INFO("time(50) / time(5) = " << ratio);
  CHECK(ratio >= 5.0);
  CHECK(ratio <= 15.0);
  CHECK(r5.euler_mean_s > 0.0);
  CHECK(r5.lstm_mean_s > 0.0);
  CHECK(r5.speedup == r5.euler_mean_s / r5.lstm_mean_s);
  CHECK(r5.repeats == 5);
}

TEST_CASE("blocks shorter than 100 clock ticks are refused", "[bench]") {
  const double res = bench_detail::clock_resolution_s();
  INFO("clock resolution " << res << " s");
  CHECK(res > 0.0);
  const LstmModel m = LstmModel::init_uniform({}, 1);
  BenchOptions o = quick();
  o.inner_iters = 1;
  // One LSTM call takes microseconds at most; a 1 ms clock cannot time it.
  const auto t0 = bench_detail::Clock::now();
  bench_detail::do_not_optimize(predict(m, test::kOracleState));
  const double one_call = bench_detail::seconds_since(t0);
  if (one_call < 100.0 * res) {
    CHECK_THROWS_AS(bench_pair(m, oracle_run(), 1, o), ClockResolutionTooCoarse);
  } else {
    SUCCEED("clock is fine-grained enough to time single calls");
  }
}

TEST_CASE("bench table needs a checkpoint per lookahead", "[bench]") {
  test::TempDir dir("benchtab");
  CorpusManifest m;
  m.runs.push_back({0, 0, "run_0.csv", test::oracle_params(), test::kOracleState, 0});
  save(LstmModel::init_uniform({}, 1), checkpoint_path(dir.path(), 1));
  try {
    bench_table(dir.path(), m, {1, 5});
    FAIL("expected MissingCheckpoint");
  } catch (const MissingCheckpoint& e) {
    CHECK(std::string(e.what()).find('5') != std::string::npos);
  }
  const auto rows = bench_table(dir.path(), m, {1}, quick());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].lookahead_n == 1);
  CHECK(default_lookaheads() == std::vector<std::uint32_t>{1, 5, 10, 15, 25, 50});
}

TEST_CASE("bench CSV round trip", "[bench][io]") {
  test::TempDir dir("benchcsv");
  std::vector<BenchResult> rows = {{1, 1.625e-05, 1e-7, 1.66e-06, 2e-8, 1.625e-05 / 1.66e-06, 10, 1000},
                                   {25, 3.27e-04, 0.1 + 0.2, 1.66e-06, 0.0, 3.27e-04 / 1.66e-06, 10, 1000}};
  write_bench_csv(rows, dir / "b.csv");
  const std::string text = detail::read_file(dir / "b.csv");
  CHECK(text.rfind("lookahead,euler_mean_s,euler_std_s,lstm_mean_s,lstm_std_s,speedup\n", 0) == 0);
  const auto back = read_bench_csv(dir / "b.csv");
  REQUIRE(back.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back[k].lookahead_n == rows[k].lookahead_n);
    CHECK(back[k].euler_mean_s == rows[k].euler_mean_s);
    CHECK(back[k].euler_std_s == rows[k].euler_std_s);
    CHECK(back[k].lstm_mean_s == rows[k].lstm_mean_s);
    CHECK(back[k].lstm_std_s == rows[k].lstm_std_s);
    CHECK(back[k].speedup == rows[k].speedup);
  }
  CHECK(!bench_to_text(rows).empty());
  detail::write_file(dir / "bad.csv", "lookahead,speed\n1,2\n");
  CHECK_THROWS_AS(read_bench_csv(dir / "bad.csv"), SchemaMismatch);
}
