#include <catch_amalgamated.hpp>

#include <fstream>

#include "odesurro/dataset.hpp"
#include "test_support.hpp"

using namespace odesurro;

namespace {

Trajectory ramp(std::size_t n_steps) {
  Trajectory t;
  t.dt = 0.01;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double v = static_cast<double>(k);
    t.states.push_back({v, -v, 2 * v, 0.5 * v, v + 1, v * v});
  }
  return t;
}

}  // namespace

TEST_CASE("pair count for a full-length run", "[dataset]") {
  // Explicit enumeration of the downsample indices with a target in range.
  std::size_t enumerated = 0;
  for (std::size_t i = 0; (i + 25) * 25 <= 50000; ++i) ++enumerated;
  CHECK(enumerated == 1976);
  CHECK(pairs_per_run(50000, 25, 25) == 1976);

  const Trajectory t = ramp(50000);
  const std::vector<std::uint64_t> ids = {0};
  const PairDataset ds = build_pairs(ids, std::span(&t, 1), 25, 25);
  CHECK(ds.size() == 1976);
  CHECK(ds.dt_sample() == 0.25);
  // The first pair targets row 625 (t = 6.25 min).
  CHECK(ds.pairs[0].input == t.states[0]);
  CHECK(ds.pairs[0].target == t.states[625]);
  CHECK(t.time(625) == 6.25);
  CHECK(ds.pairs.back().target == t.states[50000]);
}

TEST_CASE("adjacent-row pairing with N = 1, stride = 1", "[dataset]") {
  const Trajectory t = ramp(10);
  const std::vector<std::uint64_t> ids = {3};
  const PairDataset ds = build_pairs(ids, std::span(&t, 1), 1, 1);
  REQUIRE(ds.size() == 10);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(ds.pairs[k].input == t.states[k]);
    CHECK(ds.pairs[k].target == t.states[k + 1]);
    CHECK(ds.origins[k].run_id == 3);
  }
}

TEST_CASE("every pair is an input/target N strides apart in one run", "[dataset]") {
  const std::vector<Trajectory> ts = {ramp(400), ramp(260)};
  const std::vector<std::uint64_t> ids = {7, 9};
  const PairDataset ds = build_pairs(ids, ts, 3, 20);
  CHECK(ds.size() == pairs_per_run(400, 3, 20) + pairs_per_run(260, 3, 20));
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const PairOrigin o = ds.origins[k];
    const Trajectory& t = ts[o.run_id == 7 ? 0 : 1];
    REQUIRE(ds.pairs[k].input == t.states[o.index * 20]);
    REQUIRE(ds.pairs[k].target == t.states[(o.index + 3) * 20]);
  }
}

TEST_CASE("short runs and bad pairing arguments are rejected", "[dataset]") {
  const Trajectory t = ramp(50);
  const std::vector<std::uint64_t> ids = {4};
  CHECK_THROWS_AS(build_pairs(ids, std::span(&t, 1), 2, 25), RunTooShort);
  CHECK_NOTHROW(build_pairs(ids, std::span(&t, 1), 1, 25));
  CHECK_THROWS_AS(build_pairs(ids, std::span(&t, 1), 0, 25), ConfigError);
  CHECK_THROWS_AS(build_pairs(ids, std::span(&t, 1), 1, 0), ConfigError);
}

TEST_CASE("pairs built from a corpus reproduce Euler advances", "[dataset]") {
  test::TempDir dir("pairs");
  GenConfig cfg;
  cfg.n_runs = 4;
  cfg.master_seed = 17;
  cfg.solver.n_steps = 1500;
  const CorpusManifest m = generate_corpus(cfg, dir.path());
  const PairDataset ds = build_pairs(m, {2, 0, 2}, 5, 25);
  CHECK(ds.run_ids == std::vector<std::uint64_t>{0, 2});
  CHECK(ds.size() == 2 * pairs_per_run(1500, 5, 25));
  CHECK(ds.origins.front().run_id == 0);
  CHECK(ds.origins.back().run_id == 2);
  for (std::size_t k = 0; k < ds.size(); k += 7) {
    const RunRecord& r = m.run(ds.origins[k].run_id);
    CHECK(advance(ds.pairs[k].input, r.params, m.solver.dt, 125) == ds.pairs[k].target);
  }
  CHECK(build_pairs(m, {0, 2}, 5, 25).pairs == ds.pairs);
}

TEST_CASE("run selection is seeded and without replacement", "[dataset]") {
  CorpusManifest m;
  for (std::uint64_t id = 0; id < 50; ++id) m.runs.push_back({id, id, run_file_name(id), {}, {}, 0});
  const auto a = select_runs(m, 10, 1);
  CHECK(a.size() == 10);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(a == select_runs(m, 10, 1));
  CHECK(a != select_runs(m, 10, 2));
  CHECK(select_runs(m, 500, 1).size() == 50);
}

TEST_CASE("batch sampling is reproducible with disjoint train and test streams", "[dataset]") {
  const Trajectory t = ramp(2000);
  const std::vector<std::uint64_t> ids = {0};
  const PairDataset ds = build_pairs(ids, std::span(&t, 1), 1, 1);
  SamplerConfig cfg{123, 30, 30};
  const Batch a = sample_batch(ds, cfg, 5, Purpose::train);
  CHECK(a.size() == 30);
  CHECK(a.indices == sample_batch(ds, cfg, 5, Purpose::train).indices);
  CHECK(a.indices != sample_batch(ds, cfg, 5, Purpose::test).indices);
  CHECK(a.indices != sample_batch(ds, cfg, 6, Purpose::train).indices);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Pair& p = ds.pairs[a.indices[k]];
    CHECK(std::equal(p.input.begin(), p.input.end(), a.input(k).begin()));
    CHECK(std::equal(p.target.begin(), p.target.end(), a.target(k).begin()));
  }
}

TEST_CASE("singleton dataset yields a batch of copies", "[dataset]") {
  PairDataset ds;
  ds.pairs.push_back({{1, 2, 3, 4, 5, 6}, {6, 5, 4, 3, 2, 1}});
  const Batch b = sample_batch(ds, {}, 1, Purpose::train);
  REQUIRE(b.size() == 30);
  for (std::size_t k = 0; k < 30; ++k) {
    CHECK(b.indices[k] == 0);
    CHECK(b.target(k)[0] == 6.0);
  }
  CHECK_THROWS_AS(sample_batch(PairDataset{}, {}, 1, Purpose::train), ConfigError);
}

TEST_CASE("index frequencies are uniform", "[dataset]") {
  PairDataset ds;
  ds.pairs.resize(100);
  std::vector<int> freq(100, 0);
  // 10^5 draws as 1000 epochs of 100.
  for (std::uint64_t e = 0; e < 1000; ++e) {
    for (std::size_t i : draw_batch(ds, 77, e, Purpose::train, 100).indices) ++freq[i];
  }
  for (int f : freq) {
    CHECK(f >= 800);
    CHECK(f <= 1200);
  }
}

TEST_CASE("pair file round trip and corruption", "[dataset]") {
  test::TempDir dir("pairfile");
  const std::vector<Trajectory> ts = {ramp(300), ramp(300)};
  const std::vector<std::uint64_t> ids = {0, 1};
  const PairDataset ds = build_pairs(ids, ts, 2, 25);
  write_pairs(ds, dir / "p.bin");
  const PairDataset back = read_pairs(dir / "p.bin");
  CHECK(back.pairs == ds.pairs);
  CHECK(back.lookahead_n == 2);
  CHECK(back.stride == 25);
  CHECK(back.dt == 0.01);
  CHECK(std::filesystem::file_size(dir / "p.bin") == 36 + ds.size() * 96);

  const std::string bytes = detail::read_file(dir / "p.bin");
  detail::write_file(dir / "trunc.bin", std::string_view(bytes).substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_pairs(dir / "trunc.bin"), IoError);
  detail::write_file(dir / "short.bin", std::string_view(bytes).substr(0, 20));
  CHECK_THROWS_AS(read_pairs(dir / "short.bin"), IoError);
  std::string bad = bytes;
  bad[0] = 'X';
  detail::write_file(dir / "magic.bin", bad);
  CHECK_THROWS_AS(read_pairs(dir / "magic.bin"), BadMagic);
  detail::write_file(dir / "extra.bin", bytes + "x");
  CHECK_THROWS_AS(read_pairs(dir / "extra.bin"), IoError);
}
