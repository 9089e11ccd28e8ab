#pragma once

#include "dcbo/metrics.hpp"
#include "dcbo/optimizer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dcbo {

struct RunConfig {
  std::string experiment;
  std::vector<Method> methods = {Method::Dcbo, Method::Cbo, Method::Abo, Method::Bo};
  int replicates = 10;
  seed_t master_seed = 0;

  int trials = 20;  // H
  std::optional<int> obs_samples;  // overrides every slice's N when set
  int n_mc = 200;
  int n_draws = 20;
  int query_samples = 100;
  scalar surrogate_noise = 1e-3;
  scalar node_noise = kAutoNoise;
  GridSizes grids;
  int initial_points = 1;
  int oracle_mc = 10000;

  std::filesystem::path output_dir = ".";
  int jobs = 0;  // 0 = available parallelism
};

struct ReplicateResult {
  int replicate = 0;
  Trace trace;
  std::vector<SliceOracle> oracles;
  std::vector<GapResult> gaps;
};

struct MethodSummary {
  scalar gap_mean = 0.0;
  scalar gap_stderr = 0.0;
  scalar optimal_set_pct = 0.0;
  std::vector<scalar> per_slice_gap;      // mean across replicates
  std::vector<scalar> per_slice_set_pct;  // match rate per slice
};

struct RunResult {
  std::map<std::string, MethodSummary> summaries;           // by method name
  std::map<std::string, std::vector<ReplicateResult>> runs; // by method name
  std::vector<std::filesystem::path> files;
};

/// Runs the full benchmark and writes one trace CSV per (method, replicate)
/// plus summary.json into the output directory. Throws on invalid
/// configuration (message names the offending field).
RunResult execute(const RunConfig& config);

/// CLI entry: executes, prints the summary table, returns the exit status.
int run(const RunConfig& config);

struct ExperimentRow {
  std::string name;
  int horizon = 0;
  std::vector<int> obs_samples;
  std::map<std::string, std::pair<scalar, scalar>> domains;
  std::string description;
};

std::vector<ExperimentRow> list_experiments();
std::string format_experiment_table();

std::string trace_csv_header();
std::string trace_to_csv(const Trace& trace, int replicate);

}  // namespace dcbo
