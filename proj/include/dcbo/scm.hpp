#pragma once

#include "dcbo/graph.hpp"
#include "dcbo/rng.hpp"
#include "dcbo/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dcbo {

struct Gaussian {
  scalar mean = 0.0;
  scalar variance = 1.0;
};

/// Closed interval per manipulative variable.
class Domain {
 public:
  Domain() = default;

  void set(const std::string& variable, scalar lo, scalar hi);
  bool has(const std::string& variable) const;
  std::pair<scalar, scalar> bounds(const std::string& variable) const;
  scalar midpoint(const std::string& variable) const;
  bool contains(const std::string& variable, scalar value) const;
  const std::map<std::string, std::pair<scalar, scalar>>& intervals() const { return intervals_; }

 private:
  std::map<std::string, std::pair<scalar, scalar>> intervals_;
};

/// Ordered assignment of intervention levels to nodes.
using InterventionPlan = std::map<NodeId, scalar>;

/// Per-slice observational samples; a slice with zero rows is unavailable.
/// Row i of every available slice belongs to the same sampled trajectory.
struct ObservationalDataset {
  std::vector<std::string> variables;
  std::vector<Matrix> slices;  // slice t: n_t x |variables|

  Index column(const std::string& variable) const;
  bool available(int t) const { return t >= 0 && t < static_cast<int>(slices.size()) && slices[t].rows() > 0; }
  Index rows(int t) const { return slices[t].rows(); }
  scalar value(int t, Index row, const std::string& variable) const {
    return slices[t](row, column(variable));
  }
};

/// Structural equation for one node. `fn` consumes parent values in the
/// node's canonical parent order and one exogenous draw. Target nodes with an
/// additive structure additionally expose the two components; their inputs
/// follow the same canonical order restricted to each parent group.
struct NodeEquation {
  std::function<scalar(ConstVectorRef parents, scalar eps)> fn;
  std::function<scalar(ConstVectorRef pt_values)> target_pt;    // null when absent
  std::function<scalar(ConstVectorRef pnt_values)> target_pnt;  // null when absent
};

/// Structural causal model over a TimeDag. Immutable after build; sampling
/// is pure given a seed.
class Scm {
 public:
  class Builder;

  const TimeDag& graph() const { return graph_; }
  const Domain& domain() const { return domain_; }
  const NodeEquation& equation(const NodeId& n) const;
  Gaussian noise(const NodeId& n) const;

  /// Parents of `n` sorted by (lag ascending, name ascending); this is the
  /// input order every structural function and every fit uses.
  const std::vector<NodeId>& parent_order(const NodeId& n) const;

 private:
  friend class Builder;
  friend Scm with_zero_noise(const Scm& m);
  TimeDag graph_;
  Domain domain_;
  std::map<NodeId, NodeEquation> equations_;
  std::map<NodeId, Gaussian> noise_;
  std::map<NodeId, std::vector<NodeId>> parent_order_;
};

class Scm::Builder {
 public:
  explicit Builder(TimeDag graph);

  Builder& equation(const NodeId& n, std::function<scalar(ConstVectorRef, scalar)> fn);
  /// Additive target at slice t: fn becomes pt(.) + pnt(.) + eps.
  /// `pt` may be null at t = 0 (no earlier target).
  Builder& target_split(int t, std::function<scalar(ConstVectorRef)> pt,
                        std::function<scalar(ConstVectorRef)> pnt);
  Builder& noise(const std::string& variable, Gaussian g);      // every slice
  Builder& noise_at(const NodeId& n, Gaussian g);               // single node
  Builder& domain(const std::string& variable, scalar lo, scalar hi);

  Scm build();

 private:
  Scm m_;
  bool built_ = false;
};

/// Canonical order of a node's parents (lag ascending, then name).
std::vector<NodeId> parent_signature(const TimeDag& g, const NodeId& n);

/// n independent trajectories over every slice; deterministic given seed.
ObservationalDataset sample_observational(const Scm& m, int n, seed_t seed);
/// Per-slice sample counts (rows beyond a slice's count are discarded).
ObservationalDataset sample_observational(const Scm& m, const std::vector<int>& n_per_slice,
                                          seed_t seed);

/// Observed values of already-realized nodes (typically the earlier optimal
/// targets) that a sample conditions on instead of re-drawing their noise.
using ConditionedValues = std::map<NodeId, scalar>;

/// All node values of the mutilated system up to slice t_max, with fresh
/// noise for non-pinned nodes. Pinned nodes take their plan value and their
/// exogenous draw is dropped; conditioned nodes are held at their observed
/// values the same way but skip the manipulability check.
std::map<NodeId, scalar> interventional_trajectory(const Scm& m, const InterventionPlan& plan,
                                                   int t_max, seed_t seed,
                                                   const ConditionedValues& conditioned = {});

/// Observed target at slice t under `plan` (which must carry all earlier
/// decision interventions). Errors on out-of-domain values and on
/// interventions on non-manipulative nodes.
scalar sample_interventional(const Scm& m, const InterventionPlan& plan, int t, seed_t seed,
                             const ConditionedValues& conditioned = {});

/// Monte Carlo estimate of E[Y_t | do(s = x), past]; the ground-truth oracle.
scalar true_objective(const Scm& m, const InterventionSet& s, ConstVectorRef x,
                      const InterventionPlan& past, int t, int n_mc, seed_t seed,
                      const ConditionedValues& conditioned = {});

/// Copy with every exogenous distribution forced to the constant 0.
Scm with_zero_noise(const Scm& m);

}  // namespace dcbo
