#pragma once

#include "dcbo/acquisition.hpp"
#include "dcbo/builtins.hpp"
#include "dcbo/prior.hpp"

#include <string>
#include <vector>

namespace dcbo {

enum class Method { Dcbo, Cbo, Bo, Abo };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct MethodConfig {
  Method method = Method::Dcbo;
  int trials = 20;  // explorative interventions per slice (H)
  seed_t seed = 0;
  int n_mc = 200;    // exogenous samples per grid point
  int n_draws = 20;  // function draws for the causal prior
  /// Simulator draws averaged per explorative query: each intervention is
  /// tried repeatedly within the slice and the mean outcome recorded.
  int query_samples = 100;
  scalar surrogate_noise = 1e-3;  // objective observation noise (twin estimates)
  scalar node_noise = kAutoNoise;  // SCM-fit noise; <= 0 selects by likelihood
  GridSizes grids;
  int initial_points = 1;  // seed interventional points per set and slice
  Index fit_max_rows = 250;
};

/// One evaluated intervention; seed points carry h = 0.
struct TrialRecord {
  int h = 0;
  InterventionSet set;
  Vector levels;
  scalar y = 0.0;
  scalar incumbent = 0.0;
};

struct SliceTrace {
  int t = 0;
  std::vector<TrialRecord> records;
  InterventionSet best_set;
  Vector best_levels;
  scalar y_best = 0.0;
  bool prior_fallback = false;  // a set used the flat fallback prior
};

struct Trace {
  Method method = Method::Dcbo;
  seed_t seed = 0;
  int trials = 0;
  std::vector<SliceTrace> slices;

  /// Decisions of slices 0..t-1 as a conditioning plan.
  InterventionPlan decisions_before(int t) const;
  OptimalHistory history_before(int t) const;
  /// Realized optimal targets of slices 0..t-1, to condition sampling on.
  ConditionedValues targets_before(const TimeDag& g, int t) const;
};

/// Runs the configured method over every slice of the experiment, sampling
/// its own observational data from the replicate seed. The optional fitted
/// override replaces the observational fits (oracle-prior runs).
Trace run_method(const ExperimentSpec& spec, const MethodConfig& cfg,
                 const FittedScm* fitted_override = nullptr);

Trace run_dcbo(const ExperimentSpec& spec, const MethodConfig& cfg,
               const FittedScm* fitted_override = nullptr);
Trace run_cbo(const ExperimentSpec& spec, const MethodConfig& cfg);
Trace run_bo(const ExperimentSpec& spec, const MethodConfig& cfg);
Trace run_abo(const ExperimentSpec& spec, const MethodConfig& cfg);

}  // namespace dcbo
