#include "dcbo/runner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dcbo {

namespace {

std::string fmt10(scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string joined_levels(const Vector& x) {
  std::string out;
  for (Index i = 0; i < x.size(); ++i) {
    if (i > 0) out += ";";
    out += fmt10(x[i]);
  }
  return out;
}

void validate(const RunConfig& c) {
  builtin(c.experiment);  // throws with the valid names on a bad value
  if (c.methods.empty()) throw std::invalid_argument("methods: at least one required");
  if (c.replicates < 1) throw std::invalid_argument("replicates: must be >= 1");
  if (c.trials < 1) throw std::invalid_argument("trials: must be >= 1");
  if (c.n_mc < 1) throw std::invalid_argument("n_mc: must be >= 1");
  if (c.query_samples < 1) throw std::invalid_argument("query_samples: must be >= 1");
  if (c.n_draws < 1) throw std::invalid_argument("n_draws: must be >= 1");
  if (c.oracle_mc < 1) throw std::invalid_argument("oracle_mc: must be >= 1");
  if (c.surrogate_noise < 0) throw std::invalid_argument("surrogate_noise: must be >= 0");
  if (c.initial_points < 1) throw std::invalid_argument("initial_points: must be >= 1");
  if (c.obs_samples && *c.obs_samples < 0)
    throw std::invalid_argument("obs_samples: must be >= 0");
}

ExperimentSpec configured_spec(const RunConfig& c) {
  ExperimentSpec spec = builtin(c.experiment);
  if (c.obs_samples)
    spec.obs_samples.assign(spec.obs_samples.size(), *c.obs_samples);
  return spec;
}

ReplicateResult run_one(const ExperimentSpec& spec, const RunConfig& c, Method method,
                        int replicate) {
  MethodConfig mc;
  mc.method = method;
  mc.trials = c.trials;
  mc.seed = stable_hash(c.master_seed, replicate);
  mc.n_mc = c.n_mc;
  mc.n_draws = c.n_draws;
  mc.query_samples = c.query_samples;
  mc.surrogate_noise = c.surrogate_noise;
  mc.node_noise = c.node_noise;
  mc.grids = c.grids;
  mc.initial_points = c.initial_points;

  ReplicateResult out;
  out.replicate = replicate;
  out.trace = run_method(spec, mc);

  const TimeDag& g = spec.scm.graph();
  for (int t = 0; t <= g.horizon(); ++t) {
    // The exploration sets plus whatever sets the trace actually queried
    // (the baselines use the full manipulative set); splitting on a superset
    // keeps the same minimum since superfluous variables cannot move it.
    auto sets = compute_mis(g, t);
    std::vector<std::pair<InterventionSet, Vector>> extra;
    for (const auto& rec : out.trace.slices[t].records) {
      if (std::find(sets.begin(), sets.end(), rec.set) == sets.end()) sets.push_back(rec.set);
      if (rec.h == 0) extra.push_back({rec.set, rec.levels});
    }
    out.oracles.push_back(oracle_slice_optimum(
        spec.scm, sets, out.trace.decisions_before(t), t, c.grids, c.oracle_mc,
        stable_hash(std::string("oracle"), c.experiment, t), out.trace.targets_before(g, t),
        extra));
  }
  out.gaps = trace_gaps(out.trace, out.oracles);
  return out;
}

}  // namespace

std::string trace_csv_header() { return "replicate,method,t,h,set,x,y,incumbent"; }

std::string trace_to_csv(const Trace& trace, int replicate) {
  std::string out = trace_csv_header() + "\n";
  const std::string name = method_name(trace.method);
  for (const auto& slice : trace.slices) {
    for (const auto& r : slice.records) {
      out += std::to_string(replicate) + "," + name + "," + std::to_string(slice.t) + "," +
             std::to_string(r.h) + "," + set_label(r.set) + "," + joined_levels(r.levels) + "," +
             fmt10(r.y) + "," + fmt10(r.incumbent) + "\n";
    }
  }
  return out;
}

RunResult execute(const RunConfig& config) {
  validate(config);
  const ExperimentSpec spec = configured_spec(config);
  std::filesystem::create_directories(config.output_dir);

  struct Task {
    Method method;
    int replicate;
  };
  std::vector<Task> tasks;
  for (Method m : config.methods)
    for (int r = 0; r < config.replicates; ++r) tasks.push_back({m, r});

  std::vector<ReplicateResult> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};

  int jobs = config.jobs > 0 ? config.jobs
                             : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = run_one(spec, config, tasks[i].method, tasks[i].replicate);
      } catch (const std::exception& e) {
        errors[i] = std::string(method_name(tasks[i].method)) + " replicate " +
                    std::to_string(tasks[i].replicate) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  RunResult out;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    out.runs[method_name(tasks[i].method)].push_back(std::move(results[i]));
  for (auto& [name, runs] : out.runs)
    std::sort(runs.begin(), runs.end(),
              [](const ReplicateResult& a, const ReplicateResult& b) {
                return a.replicate < b.replicate;
              });

  const int slices = spec.scm.graph().horizon() + 1;
  nlohmann::json summary_json;
  summary_json["experiment"] = config.experiment;
  summary_json["replicates"] = config.replicates;
  summary_json["seed"] = config.master_seed;
  summary_json["trials"] = config.trials;
  nlohmann::json methods_json = nlohmann::json::object();

  for (Method m : config.methods) {
    const std::string name = method_name(m);
    const auto& runs = out.runs[name];

    MethodSummary s;
    std::vector<scalar> replicate_means;
    std::vector<Trace> traces;
    std::vector<std::vector<SliceOracle>> oracles;
    for (const auto& rr : runs) {
      scalar mean = 0.0;
      for (const auto& gp : rr.gaps) mean += gp.value;
      replicate_means.push_back(mean / static_cast<scalar>(rr.gaps.size()));
      traces.push_back(rr.trace);
      oracles.push_back(rr.oracles);
    }
    std::tie(s.gap_mean, s.gap_stderr) = aggregate(replicate_means);
    s.optimal_set_pct = optimal_set_rate(traces, oracles);
    for (int t = 0; t < slices; ++t) {
      scalar g = 0.0;
      int match = 0;
      for (const auto& rr : runs) {
        g += rr.gaps[t].value;
        if (rr.trace.slices[t].best_set == rr.oracles[t].best_set) ++match;
      }
      s.per_slice_gap.push_back(g / static_cast<scalar>(runs.size()));
      s.per_slice_set_pct.push_back(100.0 * match / static_cast<scalar>(runs.size()));
    }
    out.summaries[name] = s;

    nlohmann::json mj;
    mj["gap_mean"] = s.gap_mean;
    mj["gap_stderr"] = s.gap_stderr;
    mj["optimal_set_pct"] = s.optimal_set_pct;
    mj["per_slice"] = {{"gap_mean", s.per_slice_gap}, {"optimal_set_pct", s.per_slice_set_pct}};
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& rr : runs) {
      nlohmann::json rj;
      rj["replicate"] = rr.replicate;
      std::vector<scalar> gaps, y_star;
      std::vector<std::string> oracle_sets;
      std::vector<bool> degenerate;
      for (int t = 0; t < slices; ++t) {
        gaps.push_back(rr.gaps[t].value);
        y_star.push_back(rr.oracles[t].y_star);
        oracle_sets.push_back(set_label(rr.oracles[t].best_set));
        degenerate.push_back(rr.gaps[t].degenerate);
      }
      rj["gaps"] = gaps;
      rj["y_star"] = y_star;
      rj["oracle_set"] = oracle_sets;
      rj["degenerate"] = degenerate;
      reps.push_back(rj);
    }
    mj["per_replicate"] = reps;
    methods_json[name] = mj;

    for (const auto& rr : runs) {
      const auto path = config.output_dir /
                        ("trace_" + name + "_r" + std::to_string(rr.replicate) + ".csv");
      std::ofstream f(path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + path.string());
      f << trace_to_csv(rr.trace, rr.replicate);
      out.files.push_back(path);
    }
  }
  summary_json["methods"] = methods_json;

  const auto summary_path = config.output_dir / "summary.json";
  std::ofstream f(summary_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + summary_path.string());
  f << summary_json.dump(2) << "\n";
  out.files.push_back(summary_path);
  return out;
}

int run(const RunConfig& config) {
  RunResult result;
  try {
    result = execute(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::cout << "experiment: " << config.experiment << "  replicates: " << config.replicates
            << "  H: " << config.trials << "  seed: " << config.master_seed << "\n";
  std::printf("%-8s %10s %10s %16s\n", "method", "gap", "stderr", "optimal_set_pct");
  for (Method m : config.methods) {
    const auto& s = result.summaries.at(method_name(m));
    std::printf("%-8s %10.4f %10.4f %16.2f\n", method_name(m).c_str(), s.gap_mean, s.gap_stderr,
                s.optimal_set_pct);
  }
  std::cout << "wrote " << result.files.size() << " files to "
            << config.output_dir.string() << "\n";
  return 0;
}

std::vector<ExperimentRow> list_experiments() {
  std::vector<ExperimentRow> rows;
  for (const auto& name : builtin_names()) {
    const ExperimentSpec spec = builtin(name);
    ExperimentRow row;
    row.name = name;
    row.horizon = spec.scm.graph().horizon();
    row.obs_samples = spec.obs_samples;
    for (const auto& [var, iv] : spec.scm.domain().intervals()) row.domains[var] = iv;
    row.description = spec.description;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_experiment_table() {
  std::ostringstream os;
  os << "name      T  N per slice          domains\n";
  for (const auto& row : list_experiments()) {
    std::string n_text;
    for (std::size_t i = 0; i < row.obs_samples.size(); ++i)
      n_text += (i ? "," : "") + std::to_string(row.obs_samples[i]);
    std::string dom_text;
    for (const auto& [var, iv] : row.domains)
      dom_text += var + "=[" + fmt10(iv.first) + "," + fmt10(iv.second) + "] ";
    os << row.name;
    for (std::size_t i = row.name.size(); i < 10; ++i) os << ' ';
    os << row.horizon << "  ";
    os << n_text;
    for (std::size_t i = n_text.size(); i < 20; ++i) os << ' ';
    os << dom_text << "\n";
  }
  return os.str();
}

}  // namespace dcbo
