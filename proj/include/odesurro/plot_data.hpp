#pragma once

// Flattens training curves and benchmark tables into the CSVs behind the
// convergence and compute-time figures. No rendering happens here.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "odesurro/bench.hpp"
#include "odesurro/error.hpp"
#include "odesurro/trainer.hpp"

namespace odesurro {

struct CurveInput {
  std::uint32_t lookahead_n = 0;
  std::filesystem::path path;
};

// Long format: n,epoch,rel_error
inline std::string merge_curves(const std::vector<CurveInput>& inputs) {
  if (inputs.empty()) throw ConfigError("plot-data needs at least one curve");
  std::string out = "n,epoch,rel_error\n";
  for (const CurveInput& in : inputs) {
    const TrainingCurve c = read_curve_csv(in.path);
    for (const CurvePoint& p : c.points) {
      out += std::to_string(in.lookahead_n);
      out.push_back(',');
      out += std::to_string(p.epoch);
      out.push_back(',');
      detail::append_double(out, p.rel_error);
      out.push_back('\n');
    }
  }
  return out;
}

// Re-emits a bench table with the speedup column recomputed from the means.
inline std::string bench_plot_data(const std::filesystem::path& bench_csv) {
  std::vector<BenchResult> rows = read_bench_csv(bench_csv);
  if (rows.empty()) throw SchemaMismatch(bench_csv.string() + ": no rows");
  for (BenchResult& r : rows) r.speedup = r.euler_mean_s / r.lstm_mean_s;
  return bench_to_csv(rows);
}

// Parses "N=path" as used on the command line.
inline CurveInput parse_curve_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("curve argument must look like N=path, got '" + arg + "'");
  }
  CurveInput in;
  try {
    std::size_t used = 0;
    const unsigned long n = std::stoul(arg.substr(0, eq), &used);
    if (used != eq) throw std::invalid_argument("trailing");
    in.lookahead_n = static_cast<std::uint32_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("bad lookahead in '" + arg + "'");
  }
  in.path = arg.substr(eq + 1);
  return in;
}

}  // namespace odesurro
