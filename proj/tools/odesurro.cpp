// odesurro: command-line front end for corpus generation, dataset building,
// training, evaluation, prediction and benchmarking.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error,
// 4 training did not converge.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odesurro/bench.hpp"
#include "odesurro/config.hpp"
#include "odesurro/dataset.hpp"
#include "odesurro/datagen.hpp"
#include "odesurro/lstm.hpp"
#include "odesurro/pipeline.hpp"
#include "odesurro/plot_data.hpp"
#include "odesurro/trainer.hpp"

namespace fs = std::filesystem;
using namespace odesurro;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNoConvergence = 4;

template <std::size_t N>
void apply_bounds(std::array<double, N>& bounds, const std::array<std::string_view, N>& names,
                  const std::vector<std::string>& args) {
  for (const std::string& a : args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("expected name=value, got '" + a + "'");
    const std::string key = a.substr(0, eq);
    std::size_t k = 0;
    while (k < N && names[k] != key) ++k;
    if (k == N) throw ConfigError("unknown name '" + key + "'");
    try {
      bounds[k] = std::stod(a.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad value in '" + a + "'");
    }
  }
}

std::string format_vector(std::span<const double> v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out.push_back(',');
    detail::append_double(out, v[k]);
  }
  return out;
}

StateVector parse_state(const std::string& s) {
  StateVector st{};
  std::stringstream ss(s);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k >= kNumSpecies) throw ConfigError("state needs exactly 6 comma-separated values");
    st[k++] = detail::parse_double(item, "--state");
  }
  if (k != kNumSpecies) throw ConfigError("state needs exactly 6 comma-separated values");
  return st;
}

std::vector<std::uint32_t> parse_lookaheads(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = detail::parse_double(item, "--lookaheads");
    if (v < 1 || v != static_cast<std::uint32_t>(v)) throw ConfigError("lookaheads must be positive integers");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.empty()) throw ConfigError("empty lookahead list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ODE surrogate toolkit: Euler ground truth, LSTM surrogate, timing comparison"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "RunConfig JSON supplying defaults")->check(CLI::ExistingFile);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a randomized trajectory corpus");
  std::uint64_t gen_runs = 0, gen_seed = 0;
  std::string gen_out;
  std::vector<std::string> param_max, init_max;
  std::size_t gen_steps = 0;
  double gen_dt = 0.0;
  unsigned gen_workers = 0;
  bool eq3_crna = false;
  gen->add_option("--runs", gen_runs, "Number of runs");
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--param-max", param_max, "Upper bound override, e.g. gamma_A=0.5");
  gen->add_option("--init-max", init_max, "Initial-value bound override, e.g. A=0.5");
  gen->add_option("--steps", gen_steps, "Euler steps per run");
  gen->add_option("--dt", gen_dt, "Euler time step (min)");
  gen->add_option("--workers", gen_workers, "Worker threads (0 = all cores)");
  gen->add_flag("--eq3-decay-on-crna", eq3_crna, "Use -gamma_CRNA*C_RNA as the C_RNA decay term");

  // make-dataset
  auto* mk = app.add_subcommand("make-dataset", "Build lookahead pairs from a corpus");
  std::string mk_manifest, mk_out;
  std::uint64_t mk_runs = 0, mk_seed = 0;
  std::uint32_t mk_lookahead = 0, mk_stride = 0;
  mk->add_option("--manifest", mk_manifest, "Corpus manifest.json")->required()->check(CLI::ExistingFile);
  mk->add_option("--runs", mk_runs, "Runs to select at random");
  mk->add_option("--lookahead", mk_lookahead, "Lookahead N (downsampled steps)")->required();
  mk->add_option("--stride", mk_stride, "Downsampling stride (Euler steps)");
  mk->add_option("--seed", mk_seed, "Run selection seed");
  mk->add_option("--out", mk_out, "Output pair file")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train an LSTM surrogate on a pair file");
  std::string tr_dataset, tr_out, tr_curve;
  std::uint32_t tr_lookahead = 0;
  double tr_target = 0.0;
  std::uint64_t tr_seed = 0, tr_max_epochs = 0, tr_eval_every = 0;
  tr->add_option("--dataset", tr_dataset, "Pair file")->required()->check(CLI::ExistingFile);
  tr->add_option("--lookahead", tr_lookahead, "Expected lookahead of the pair file");
  tr->add_option("--target", tr_target, "Stopping relative normed error");
  tr->add_option("--seed", tr_seed, "Training seed");
  tr->add_option("--max-epochs", tr_max_epochs, "Epoch cap");
  tr->add_option("--eval-every", tr_eval_every, "Evaluation cadence (epochs)");
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--curve", tr_curve, "Training curve CSV");
  bool tr_quiet = false;
  tr->add_flag("--quiet", tr_quiet, "No progress output");

  // eval
  auto* ev = app.add_subcommand("eval", "Relative normed error of a model on a fresh draw");
  std::string ev_model, ev_dataset;
  std::uint64_t ev_pairs = 1000, ev_seed = 0;
  ev->add_option("--model", ev_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", ev_dataset, "Pair file")->required()->check(CLI::ExistingFile);
  ev->add_option("--pairs", ev_pairs, "Evaluation draw size");
  ev->add_option("--seed", ev_seed, "Draw seed");

  // predict
  auto* pr = app.add_subcommand("predict", "Predict the state one lookahead ahead");
  std::string pr_model, pr_state;
  pr->add_option("--model", pr_model, "Checkpoint")->required();
  pr->add_option("--state", pr_state, "A,B,C_RNA,C_p,Z_RNA,Z_p")->required();

  // bench
  auto* be = app.add_subcommand("bench", "Time surrogate prediction against Euler advance");
  std::string be_models, be_manifest, be_out, be_lookaheads;
  std::uint32_t be_repeats = 0;
  std::uint64_t be_inner = 0;
  be->add_option("--models", be_models, "Directory with model_n<N>.bin")->required();
  be->add_option("--manifest", be_manifest, "Corpus manifest.json")->required()->check(CLI::ExistingFile);
  be->add_option("--lookaheads", be_lookaheads, "Comma-separated lookaheads");
  be->add_option("--repeats", be_repeats, "Timed repeats");
  be->add_option("--inner-iters", be_inner, "Calls per timed block (0 = calibrate)");
  be->add_option("--out", be_out, "CSV output");

  // plot-data
  auto* pd = app.add_subcommand("plot-data", "Emit the data behind the convergence and timing figures");
  std::vector<std::string> pd_curves;
  std::string pd_bench, pd_out;
  pd->add_option("--curve", pd_curves, "N=curve.csv (repeatable)");
  pd->add_option("--bench", pd_bench, "bench.csv");
  pd->add_option("--out-dir", pd_out, "Output directory")->required();

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run generate, make-dataset, train and bench from a RunConfig");
  std::string pl_out;
  bool pl_no_bench = false;
  pl->add_option("--out", pl_out, "Output directory")->required();
  pl->add_flag("--no-bench", pl_no_bench, "Skip the timing stage");

  // config
  auto* cf = app.add_subcommand("config", "Print configuration");
  bool cf_defaults = false;
  cf->add_flag("--defaults", cf_defaults, "Print the built-in defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    apply_seed_override(cfg, std::getenv("ODESURRO_SEED"));
    const bool env_seed = std::getenv("ODESURRO_SEED") && *std::getenv("ODESURRO_SEED");

    if (*cf) {
      std::cout << to_json(cf_defaults ? RunConfig{} : cfg).dump(2) << "\n";
      return kExitOk;
    }

    if (*gen) {
      GenConfig g = cfg.gen;
      if (gen->count("--runs")) g.n_runs = gen_runs;
      if (gen->count("--seed") && !env_seed) g.master_seed = gen_seed;
      if (gen->count("--steps")) g.solver.n_steps = gen_steps;
      if (gen->count("--dt")) g.solver.dt = gen_dt;
      if (gen->count("--workers")) g.workers = gen_workers;
      if (eq3_crna) g.circuit.eq3_decay_on_crna = true;
      apply_bounds(g.param_max, ParameterSet::names, param_max);
      apply_bounds(g.init_max, kSpeciesNames, init_max);
      const CorpusManifest m = generate_corpus(g, gen_out);
      std::uint64_t retries = 0;
      for (const auto& r : m.runs) retries += r.retries;
      std::cout << "wrote " << m.runs.size() << " runs to " << gen_out << " (" << retries
                << " blown-up draws resampled)\n";
      return kExitOk;
    }

    if (*mk) {
      const CorpusManifest m = read_manifest(mk_manifest);
      const std::uint64_t runs = mk->count("--runs") ? mk_runs : cfg.dataset.runs;
      const std::uint64_t seed = mk->count("--seed") && !env_seed ? mk_seed : cfg.dataset.select_seed;
      const std::uint32_t stride = mk->count("--stride") ? mk_stride : cfg.dataset.stride;
      const PairDataset ds = build_pairs(m, select_runs(m, runs, seed), mk_lookahead, stride);
      write_pairs(ds, mk_out);
      std::cout << "wrote " << ds.size() << " pairs from " << ds.run_ids.size() << " runs to " << mk_out
                << "\n";
      return kExitOk;
    }

    if (*tr) {
      const PairDataset ds = read_pairs(tr_dataset);
      TrainConfig tc = cfg.train;
      tc.lookahead_n = ds.lookahead_n;
      if (tr->count("--lookahead") && tr_lookahead != ds.lookahead_n) {
        throw ConfigError("--lookahead " + std::to_string(tr_lookahead) + " but dataset was built with " +
                          std::to_string(ds.lookahead_n));
      }
      if (tr->count("--target")) tc.target_rel_error = tr_target;
      if (tr->count("--seed") && !env_seed) tc.seed = tr_seed;
      if (tr->count("--max-epochs")) tc.max_epochs = tr_max_epochs;
      if (tr->count("--eval-every")) tc.eval_every = tr_eval_every;
      TrainObserver obs;
      if (!tr_quiet) {
        obs = [](const CurvePoint& p) {
          if (p.epoch % 10000 == 0) {
            std::fprintf(stderr, "epoch %llu  rel_error %.5f  loss %.4g\n",
                         static_cast<unsigned long long>(p.epoch), p.rel_error, p.loss);
          }
        };
      }
      const TrainResult r = train(ds, tc, obs);
      save(r.model, tr_out);
      if (!tr_curve.empty()) write_curve_csv(r.curve, tr_curve);
      const double last = r.curve.points.empty() ? std::nan("") : r.curve.points.back().rel_error;
      std::cout << (r.converged ? "converged" : "did not converge") << " after " << r.epochs
                << " epochs; last rel_error " << last << "\n";
      return r.converged ? kExitOk : kExitNoConvergence;
    }

    if (*ev) {
      const LstmModel m = load(ev_model);
      const PairDataset ds = read_pairs(ev_dataset);
      std::cout << evaluate(m, ds, ev_pairs, ev_seed, 0) << "\n";
      return kExitOk;
    }

    if (*pr) {
      const LstmModel m = load(pr_model);
      const StateVector s = parse_state(pr_state);
      std::cout << format_vector(predict(m, s)) << "\n";
      return kExitOk;
    }

    if (*be) {
      const CorpusManifest m = read_manifest(be_manifest);
      const auto lookaheads = be_lookaheads.empty() ? cfg.bench.lookaheads : parse_lookaheads(be_lookaheads);
      BenchOptions bo;
      bo.repeats = be->count("--repeats") ? be_repeats : cfg.bench.repeats;
      bo.inner_iters = be->count("--inner-iters") ? be_inner : cfg.bench.inner_iters;
      bo.stride = cfg.dataset.stride;
      const auto rows = bench_table(be_models, m, lookaheads, bo);
      std::cout << bench_to_text(rows);
      if (!be_out.empty()) write_bench_csv(rows, be_out);
      return kExitOk;
    }

    if (*pd) {
      if (pd_curves.empty() && pd_bench.empty()) throw ConfigError("plot-data needs --curve and/or --bench");
      fs::create_directories(pd_out);
      if (!pd_curves.empty()) {
        std::vector<CurveInput> inputs;
        for (const auto& c : pd_curves) inputs.push_back(parse_curve_arg(c));
        detail::write_file(fs::path(pd_out) / "convergence.csv", merge_curves(inputs));
      }
      if (!pd_bench.empty()) detail::write_file(fs::path(pd_out) / "compute_time.csv", bench_plot_data(pd_bench));
      return kExitOk;
    }

    if (*pl) {
      PipelineOptions po;
      po.run_bench = !pl_no_bench;
      po.log = [](const std::string& s) { std::cerr << s << "\n"; };
      const PipelineResult r = run_pipeline(cfg, pl_out, po);
      if (!r.bench.empty()) std::cout << bench_to_text(r.bench);
      for (const auto& m : r.models) {
        if (!m.converged) return kExitNoConvergence;
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::usage: return kExitUsage;
      case ErrorKind::convergence: return kExitNoConvergence;
      case ErrorKind::data: return kExitData;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
