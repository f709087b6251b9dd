#pragma once

// End-to-end driver: corpus -> pair datasets -> one model per lookahead ->
// benchmark table, laid out under a single output directory:
//
//   corpus/manifest.json, corpus/run_<id>.csv
//   datasets/pairs_n<N>.bin
//   models/model_n<N>.bin
//   curves/curve_n<N>.csv
//   bench.csv

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "odesurro/bench.hpp"
#include "odesurro/config.hpp"
#include "odesurro/dataset.hpp"
#include "odesurro/datagen.hpp"
#include "odesurro/trainer.hpp"

namespace odesurro {

struct PipelineResult {
  CorpusManifest manifest;
  std::vector<TrainResult> models;  // parallel to cfg.bench.lookaheads
  std::vector<BenchResult> bench;
};

struct PipelineOptions {
  bool run_bench = true;
  std::function<void(const std::string&)> log;
};

inline std::filesystem::path dataset_path(const std::filesystem::path& out, std::uint32_t n) {
  return out / "datasets" / ("pairs_n" + std::to_string(n) + ".bin");
}

inline std::filesystem::path curve_path(const std::filesystem::path& out, std::uint32_t n) {
  return out / "curves" / ("curve_n" + std::to_string(n) + ".csv");
}

inline PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out,
                                   const PipelineOptions& opt = {}) {
  auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  for (const char* sub : {"datasets", "models", "curves"}) std::filesystem::create_directories(out / sub);

  PipelineResult r;
  log("generating " + std::to_string(cfg.gen.n_runs) + " runs");
  r.manifest = generate_corpus(cfg.gen, out / "corpus");
  const auto run_ids = select_runs(r.manifest, cfg.dataset.runs, cfg.dataset.select_seed);

  for (std::uint32_t n : cfg.bench.lookaheads) {
    PairDataset ds = build_pairs(r.manifest, run_ids, n, cfg.dataset.stride);
    write_pairs(ds, dataset_path(out, n));
    TrainConfig tc = cfg.train;
    tc.lookahead_n = n;
    log("training lookahead " + std::to_string(n) + " on " + std::to_string(ds.size()) + " pairs");
    TrainResult tr = train(ds, tc);
    save(tr.model, checkpoint_path(out / "models", n));
    write_curve_csv(tr.curve, curve_path(out, n));
    log("  " + std::string(tr.converged ? "converged" : "did not converge") + " after " +
        std::to_string(tr.epochs) + " epochs");
    r.models.push_back(std::move(tr));
  }

  if (opt.run_bench) {
    BenchOptions bo;
    bo.repeats = cfg.bench.repeats;
    bo.inner_iters = cfg.bench.inner_iters;
    bo.stride = cfg.dataset.stride;
    r.bench = bench_table(out / "models", r.manifest, cfg.bench.lookaheads, bo);
    write_bench_csv(r.bench, out / "bench.csv");
  }
  return r;
}

}  // namespace odesurro
