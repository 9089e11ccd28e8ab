#include "dcbo/graph.hpp"
#include "dcbo/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  CLI::App app{"dcbo: sequential causal intervention optimization benchmark"};
  app.require_subcommand(1);

  dcbo::RunConfig config;
  if (const char* env = std::getenv("DCBO_OUTPUT_DIR")) config.output_dir = env;

  std::string methods_text = "dcbo,cbo,abo,bo";
  unsigned long long seed = 0;
  int obs_override = -1;
  int grid_1d = 100, grid_2d = 31, grid_3d = 11;

  auto* run = app.add_subcommand("run", "run a benchmark experiment");
  run->add_option("--experiment", config.experiment, "builtin experiment name")->required();
  run->add_option("--methods", methods_text, "comma-separated subset of dcbo,cbo,abo,bo");
  run->add_option("--replicates", config.replicates, "independent replicates");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--trials", config.trials, "explorative interventions per slice (H)");
  run->add_option("--obs-samples", obs_override, "override observational N for every slice");
  run->add_option("--mc-samples", config.n_mc, "exogenous samples per grid point");
  run->add_option("--query-samples", config.query_samples,
                  "simulator draws averaged per explorative query");
  run->add_option("--function-draws", config.n_draws, "function draws for the causal prior");
  run->add_option("--surrogate-noise", config.surrogate_noise, "objective observation noise");
  run->add_option("--node-noise", config.node_noise,
                  "GP noise for structural fits (<= 0 selects by likelihood)");
  run->add_option("--oracle-mc", config.oracle_mc, "Monte Carlo samples for the gap oracle");
  run->add_option("--grid-1d", grid_1d, "grid points for 1-D sets");
  run->add_option("--grid-2d", grid_2d, "grid points per dim for 2-D sets");
  run->add_option("--grid-3d", grid_3d, "grid points per dim for 3-D sets");
  run->add_option("--initial-points", config.initial_points, "seed points per set and slice");
  run->add_option("--out", config.output_dir, "output directory");
  run->add_option("--jobs", config.jobs, "worker threads (0 = all cores)");

  auto* list = app.add_subcommand("list", "list builtin experiments");

  std::string graph_file;
  int mis_slice = 0;
  auto* mis = app.add_subcommand("mis", "print the exploration sets of a graph description");
  mis->add_option("--graph", graph_file, "graph description file (JSON)")->required();
  mis->add_option("--slice", mis_slice, "time slice");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    std::cout << dcbo::format_experiment_table();
    return 0;
  }

  if (mis->parsed()) {
    std::ifstream f(graph_file);
    if (!f) {
      std::cerr << "error: cannot read " << graph_file << "\n";
      return 1;
    }
    std::stringstream buffer;
    buffer << f.rdbuf();
    try {
      const dcbo::TimeDag g = dcbo::load_time_dag(buffer.str());
      for (const auto& s : dcbo::compute_mis(g, mis_slice))
        std::cout << dcbo::set_label(s) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  config.master_seed = seed;
  if (obs_override >= 0) config.obs_samples = obs_override;
  config.grids = dcbo::GridSizes{grid_1d, grid_2d, grid_3d};
  config.methods.clear();
  std::stringstream ms(methods_text);
  std::string token;
  try {
    while (std::getline(ms, token, ',')) {
      if (!token.empty()) config.methods.push_back(dcbo::parse_method(token));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: methods: " << e.what() << "\n";
    return 1;
  }
  return dcbo::run(config);
}
