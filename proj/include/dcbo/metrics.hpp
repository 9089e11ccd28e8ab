#pragma once

#include "dcbo/optimizer.hpp"

#include <vector>

namespace dcbo {

struct GapInputs {
  scalar y_init = 0.0;  // first evaluated target at the slice
  scalar y_best = 0.0;  // best evaluated target
  scalar y_star = 0.0;  // true optimum from the brute-force oracle
  int trials = 1;       // budget H
  int trials_to_best = 1;
};

struct GapResult {
  scalar value = 0.0;
  bool degenerate = false;  // start-at-optimum case (y_star == y_init)
};

/// Eq-style combination of solution quality and speed, in [0, 1]:
/// [clamp01((y_best - y_init)/(y_star - y_init)) + (H - H_best)/H] / (1 + (H-1)/H).
GapResult gap(const GapInputs& in);

/// Mean and standard error (sample std / sqrt(n); 0 for n = 1).
std::pair<scalar, scalar> aggregate(const std::vector<scalar>& values);

/// Ground-truth view of one slice given the implemented decisions: the
/// objective evaluated on every candidate of every exploration set, and the
/// overall minimum.
struct SliceOracle {
  scalar y_star = 0.0;
  InterventionSet best_set;
  Vector best_levels;

  std::vector<InterventionSet> sets;
  std::vector<Matrix> grids;
  std::vector<Vector> values;  // objective per grid row, aligned with sets

  // Off-grid points evaluated on request (seed points of the optimizer).
  std::vector<std::pair<InterventionSet, Vector>> extra_points;
  std::vector<scalar> extra_values;

  /// Objective value of an evaluated candidate (grid or extra point).
  scalar value_at(const InterventionSet& s, ConstVectorRef x) const;
};

/// Grid evaluation of every set with a shared-noise Monte Carlo estimate of
/// the objective (slice prefixes reused across grid points).
SliceOracle oracle_slice_optimum(const Scm& scm, const std::vector<InterventionSet>& sets,
                                 const InterventionPlan& past, int t, const GridSizes& sizes,
                                 int n_mc, seed_t seed,
                                 const ConditionedValues& conditioned = {},
                                 const std::vector<std::pair<InterventionSet, Vector>>&
                                     extra_points = {});

/// Trials needed to reach the slice's final best value (first trial within
/// eps_opt of it); the budget when that never happens or when the best value
/// misses the oracle optimum by more than rel_tol * |y_star|.
int trials_to_optimum(const SliceTrace& slice, scalar y_star, int trials,
                      scalar eps_opt = 1e-6, scalar rel_tol = 0.05);

/// Per-slice gaps of one trace. Quality and speed are judged on the true
/// objective values of the queried candidates (looked up in the oracle), so
/// re-visiting a point reproduces its value exactly.
std::vector<GapResult> trace_gaps(const Trace& trace, const std::vector<SliceOracle>& oracles);

/// Percentage of (trace, slice) pairs whose final set matches the oracle set.
scalar optimal_set_rate(const std::vector<Trace>& traces,
                        const std::vector<std::vector<SliceOracle>>& oracles);

}  // namespace dcbo
