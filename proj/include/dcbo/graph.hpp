#pragma once

#include "dcbo/types.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dcbo {

/// One node of the time-rolled graph: a variable copy at a time slice.
struct NodeId {
  std::string variable;
  int time = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId& a, const NodeId& b) {
    if (auto c = a.time <=> b.time; c != 0) return c;
    return a.variable <=> b.variable;
  }
};

std::string to_string(const NodeId& n);

enum class Role { Manipulative, NonManipulative, Target };

/// Intervention set: variable names within one time slice, kept sorted.
using InterventionSet = std::vector<std::string>;

InterventionSet canonical_set(InterventionSet s);
std::string set_label(const InterventionSet& s);

/// Time-rolled causal graph over variable copies at slices 0..T.
///
/// Edges may only point forward in time (cross-slice offset is one slice by
/// construction of the builders below, though arbitrary forward edges are
/// accepted). Immutable once built; all mutating queries return copies.
class TimeDag {
 public:
  class Builder;

  TimeDag() = default;  // empty graph; populate through a Builder

  int horizon() const { return horizon_; }
  const std::set<NodeId>& nodes() const { return nodes_; }
  const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::string& target_variable() const { return target_; }

  bool has_node(const NodeId& n) const { return nodes_.count(n) > 0; }
  Role role(const std::string& variable) const;
  NodeId target_node(int t) const;
  std::vector<std::string> manipulative_variables() const;

  /// Nodes in a valid evaluation order (parents before children).
  const std::vector<NodeId>& topological_order() const { return topo_; }

  friend std::set<NodeId> parents(const TimeDag& g, const NodeId& n);
  friend TimeDag mutilate(const TimeDag& g, const std::set<NodeId>& intervened);

 private:
  void finalize();  // validates and computes the topological order

  int horizon_ = 0;
  std::vector<std::string> variables_;
  std::map<std::string, Role> roles_;
  std::string target_;
  std::set<NodeId> nodes_;
  std::set<std::pair<NodeId, NodeId>> edges_;
  std::map<NodeId, std::set<NodeId>> parents_;
  std::vector<NodeId> topo_;
};

/// Incremental construction; `build()` validates acyclicity, time direction
/// and the single-target-per-slice rule.
class TimeDag::Builder {
 public:
  explicit Builder(int horizon);

  Builder& variable(const std::string& name, Role role);
  /// Edge from `src` to `dst` inside every slice.
  Builder& within(const std::string& src, const std::string& dst);
  /// Edge from `src` to `dst` inside slice `t` only.
  Builder& within_at(const std::string& src, const std::string& dst, int t);
  /// Edge from `src` at slice t-1 to `dst` at slice t, for every t > 0.
  Builder& across(const std::string& src, const std::string& dst);
  /// Single cross-slice edge into slice `t` (offset one).
  Builder& across_at(const std::string& src, const std::string& dst, int t);
  /// Arbitrary forward edge between explicit nodes.
  Builder& edge(const NodeId& src, const NodeId& dst);

  TimeDag build();

 private:
  TimeDag g_;
  bool built_ = false;
};

std::set<NodeId> parents(const TimeDag& g, const NodeId& n);
std::set<NodeId> ancestors(const TimeDag& g, const NodeId& n);

/// Graph with all edges into `intervened` removed; nodes unchanged.
TimeDag mutilate(const TimeDag& g, const std::set<NodeId>& intervened);

/// True when every slice t > 0 repeats the within-slice edge set of slice 0.
bool is_stationary(const TimeDag& g);

/// Parents of Y_t split into earlier targets (first) and the rest (second).
std::pair<std::set<NodeId>, std::set<NodeId>> classify_parents(const TimeDag& g, int t);

/// Exploration set at slice t: every non-empty subset S of the slice's
/// manipulative variables whose members are all ancestors of Y_t once the
/// graph is mutilated at S. Canonically ordered, deterministic.
std::vector<InterventionSet> compute_mis(const TimeDag& g, int t);

/// Loads a stationary rolled graph from its JSON description (variables with
/// roles, within-slice edges, cross-slice edges at offset one, horizon).
TimeDag load_time_dag(const std::string& json_text);
std::string time_dag_to_json(const TimeDag& g);

}  // namespace dcbo
