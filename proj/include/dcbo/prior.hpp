#pragma once

#include "dcbo/builtins.hpp"
#include "dcbo/gp.hpp"
#include "dcbo/scm.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace dcbo {

/// Fitted stand-in for one structural equation: a deterministic map over the
/// node's canonical parent order plus the spread to re-inject as exogenous
/// noise when the node is sampled.
struct FittedNode {
  std::function<scalar(ConstVectorRef)> mean;
  scalar residual_variance = 0.0;
};

/// Every structural function of the model estimated from observational data
/// (or wrapped from the true system for oracle checks), together with the
/// additive target components per slice.
class FittedScm {
 public:
  /// Observational fits. Under stationarity slice 0 is fitted separately and
  /// slices >= 1 share pooled fits per variable; otherwise every slice is
  /// fitted on its own rows. Nodes with no usable rows stay unfitted.
  static FittedScm from_data(const Scm& scm, const ObservationalDataset& data, bool stationary,
                             scalar node_noise_variance = kAutoNoise, Index max_rows = 250);

  /// True functions as deterministic maps, true noise as residual spread.
  /// Requires the additive target split on every slice.
  static FittedScm from_true(const Scm& scm);

  const TimeDag& graph() const { return *graph_; }
  const Domain& domain() const { return domain_; }

  bool has_node(const NodeId& n) const { return nodes_.count(n) > 0; }
  const FittedNode& node(const NodeId& n) const;
  bool has_target(int t) const { return targets_.count(t) > 0; }
  const TargetComponents& target(int t) const;

  /// True when every function needed to propagate into Y_t exists.
  bool usable_for_slice(int t) const;
  /// Observational rows existed for slice t (drives the static fallback).
  bool slice_has_data(int t) const;

  const std::vector<NodeId>& parent_order(const NodeId& n) const;

 private:
  FittedScm() = default;
  std::shared_ptr<const TimeDag> graph_;
  Domain domain_;
  std::map<NodeId, FittedNode> nodes_;
  std::map<int, std::shared_ptr<const TargetComponents>> targets_;
  std::map<NodeId, std::vector<NodeId>> parent_order_;
  std::vector<bool> slice_data_;
};

/// Implemented decision intervention of one completed slice.
struct SliceDecision {
  InterventionSet set;
  Vector levels;
  scalar y_star = 0.0;
};

/// One entry per completed slice, index = slice.
using OptimalHistory = std::vector<SliceDecision>;

/// Conditioning map carrying every decision intervention in the history.
InterventionPlan history_plan(const OptimalHistory& h);

struct PriorConfig {
  int n_mc = 200;    // exogenous samples per query point
  int n_draws = 20;  // function draws
  seed_t seed = 0;
  /// When false the construction ignores the history entirely: no shift term
  /// and no conditioning on past interventions (the static prior).
  bool use_history = true;
};

/// Grid-evaluated prior mean and deviation for one intervention set.
struct CausalPrior {
  Matrix grid;
  Vector mean;
  Vector deviation;
  bool fallback = false;

  Index nearest_row(ConstVectorRef x) const;
  MeanFn mean_fn() const;
  DeviationFn deviation_fn() const;
  bool zero_deviation() const { return fallback || deviation.isZero(0.0); }
};

/// Source of exogenous draws for free nodes during propagation.
using ExogenousDraw = std::function<scalar(const NodeId&)>;

/// One propagation through the fitted system: resolves every non-target
/// parent of Y_t by the pinned / recursively-expanded / noise-injected case
/// analysis and returns the fitted pnt component at the assembled inputs.
scalar propagate(const FittedScm& fitted, const InterventionSet& s, ConstVectorRef x,
                 const OptimalHistory& history, int t, const ExogenousDraw& draw);

/// Dynamic causal prior on the candidate grid: for each grid point, the mean
/// over function draws of [shift + Monte Carlo mean of the propagated pnt
/// component] and the spread of the same quantity across draws. Falls back
/// to a flat zero prior when the fitted set cannot cover slice t.
CausalPrior build_prior(const FittedScm& fitted, const InterventionSet& s, int t,
                        const OptimalHistory& history, const Matrix& grid,
                        const PriorConfig& cfg);

/// Monte Carlo do-effect estimate through the fitted functions (posterior
/// means, exogenous spread re-injected). Past targets are sampled, never
/// substituted. Returns (mean, standard error of the mean).
std::pair<scalar, scalar> estimate_do_effect(const FittedScm& fitted, const InterventionSet& s,
                                             ConstVectorRef x, const InterventionPlan& conditioning,
                                             int t, int n_mc, seed_t seed);

}  // namespace dcbo
