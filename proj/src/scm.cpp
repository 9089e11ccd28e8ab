#include "dcbo/scm.hpp"

#include <algorithm>
#include <stdexcept>

namespace dcbo {

void Domain::set(const std::string& variable, scalar lo, scalar hi) {
  if (!(lo < hi))
    throw std::invalid_argument("domain for " + variable + " needs lo < hi");
  intervals_[variable] = {lo, hi};
}

bool Domain::has(const std::string& variable) const { return intervals_.count(variable) > 0; }

std::pair<scalar, scalar> Domain::bounds(const std::string& variable) const {
  auto it = intervals_.find(variable);
  if (it == intervals_.end())
    throw std::invalid_argument("no declared domain for " + variable);
  return it->second;
}

scalar Domain::midpoint(const std::string& variable) const {
  auto [lo, hi] = bounds(variable);
  return 0.5 * (lo + hi);
}

bool Domain::contains(const std::string& variable, scalar value) const {
  if (!has(variable)) return true;
  auto [lo, hi] = intervals_.at(variable);
  return value >= lo && value <= hi;
}

Index ObservationalDataset::column(const std::string& variable) const {
  auto it = std::find(variables.begin(), variables.end(), variable);
  if (it == variables.end())
    throw std::invalid_argument("dataset has no variable " + variable);
  return static_cast<Index>(it - variables.begin());
}

std::vector<NodeId> parent_signature(const TimeDag& g, const NodeId& n) {
  auto pa = parents(g, n);
  std::vector<NodeId> out(pa.begin(), pa.end());
  std::sort(out.begin(), out.end(), [&](const NodeId& a, const NodeId& b) {
    const int lag_a = n.time - a.time;
    const int lag_b = n.time - b.time;
    if (lag_a != lag_b) return lag_a < lag_b;
    return a.variable < b.variable;
  });
  return out;
}

const NodeEquation& Scm::equation(const NodeId& n) const {
  auto it = equations_.find(n);
  if (it == equations_.end())
    throw std::invalid_argument("no structural equation for " + to_string(n));
  return it->second;
}

Gaussian Scm::noise(const NodeId& n) const {
  auto it = noise_.find(n);
  if (it == noise_.end())
    throw std::invalid_argument("no noise specification for " + to_string(n));
  return it->second;
}

const std::vector<NodeId>& Scm::parent_order(const NodeId& n) const {
  auto it = parent_order_.find(n);
  if (it == parent_order_.end())
    throw std::invalid_argument("unknown node: " + to_string(n));
  return it->second;
}

Scm::Builder::Builder(TimeDag graph) {
  m_.graph_ = std::move(graph);
  for (const auto& n : m_.graph_.nodes())
    m_.parent_order_[n] = parent_signature(m_.graph_, n);
}

Scm::Builder& Scm::Builder::equation(const NodeId& n,
                                     std::function<scalar(ConstVectorRef, scalar)> fn) {
  if (!m_.graph_.has_node(n))
    throw std::invalid_argument("unknown node: " + to_string(n));
  m_.equations_[n].fn = std::move(fn);
  return *this;
}

Scm::Builder& Scm::Builder::target_split(int t, std::function<scalar(ConstVectorRef)> pt,
                                         std::function<scalar(ConstVectorRef)> pnt) {
  const NodeId yt = m_.graph_.target_node(t);
  auto [pt_nodes, pnt_nodes] = classify_parents(m_.graph_, t);
  if (!pt_nodes.empty() && !pt)
    throw std::invalid_argument(to_string(yt) + " has earlier-target parents; pt required");
  if (!pnt) throw std::invalid_argument("pnt component required for " + to_string(yt));

  // Index maps from the canonical parent order into each component's inputs.
  const auto& order = m_.parent_order_.at(yt);
  std::vector<Index> pt_idx;
  std::vector<Index> pnt_idx;
  for (Index i = 0; i < static_cast<Index>(order.size()); ++i) {
    if (pt_nodes.count(order[i]))
      pt_idx.push_back(i);
    else
      pnt_idx.push_back(i);
  }

  NodeEquation& eq = m_.equations_[yt];
  eq.target_pt = pt;
  eq.target_pnt = pnt;
  eq.fn = [pt = std::move(pt), pnt = eq.target_pnt, pt_idx, pnt_idx](ConstVectorRef pa,
                                                                     scalar eps) {
    Vector pt_in(pt_idx.size());
    for (std::size_t i = 0; i < pt_idx.size(); ++i) pt_in[static_cast<Index>(i)] = pa[pt_idx[i]];
    Vector pnt_in(pnt_idx.size());
    for (std::size_t i = 0; i < pnt_idx.size(); ++i) pnt_in[static_cast<Index>(i)] = pa[pnt_idx[i]];
    scalar v = pnt(pnt_in);
    if (pt) v += pt(pt_in);
    return v + eps;
  };
  return *this;
}

Scm::Builder& Scm::Builder::noise(const std::string& variable, Gaussian g) {
  for (int t = 0; t <= m_.graph_.horizon(); ++t) m_.noise_[NodeId{variable, t}] = g;
  return *this;
}

Scm::Builder& Scm::Builder::noise_at(const NodeId& n, Gaussian g) {
  m_.noise_[n] = g;
  return *this;
}

Scm::Builder& Scm::Builder::domain(const std::string& variable, scalar lo, scalar hi) {
  m_.domain_.set(variable, lo, hi);
  return *this;
}

Scm Scm::Builder::build() {
  if (built_) throw std::logic_error("builder already consumed");
  built_ = true;
  for (const auto& n : m_.graph_.nodes()) {
    if (!m_.equations_.count(n) || !m_.equations_.at(n).fn)
      throw std::invalid_argument("missing structural equation for " + to_string(n));
    if (!m_.noise_.count(n))
      throw std::invalid_argument("missing noise specification for " + to_string(n));
  }
  return std::move(m_);
}

namespace {

// Evaluates nodes with time <= t_max in topological order.
std::map<NodeId, scalar> evaluate(const Scm& m, int t_max, const InterventionPlan& pinned,
                                  const std::function<scalar(const NodeId&)>& draw) {
  std::map<NodeId, scalar> values;
  Vector pa_buf;
  for (const NodeId& n : m.graph().topological_order()) {
    if (n.time > t_max) continue;
    if (auto it = pinned.find(n); it != pinned.end()) {
      values[n] = it->second;
      continue;
    }
    const auto& order = m.parent_order(n);
    pa_buf.resize(static_cast<Index>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i)
      pa_buf[static_cast<Index>(i)] = values.at(order[i]);
    values[n] = m.equation(n).fn(pa_buf, draw(n));
  }
  return values;
}

void check_plan(const Scm& m, const InterventionPlan& plan) {
  for (const auto& [node, value] : plan) {
    if (!m.graph().has_node(node))
      throw std::invalid_argument("unknown node: " + to_string(node));
    if (m.graph().role(node.variable) != Role::Manipulative)
      throw std::invalid_argument("cannot intervene on non-manipulative node " + to_string(node));
    if (!m.domain().contains(node.variable, value))
      throw std::invalid_argument("intervention " + to_string(node) + " = " +
                                  std::to_string(value) + " outside declared domain");
  }
}

}  // namespace

ObservationalDataset sample_observational(const Scm& m, int n, seed_t seed) {
  if (n < 0) throw std::invalid_argument("sample count must be >= 0");
  return sample_observational(m, std::vector<int>(m.graph().horizon() + 1, n), seed);
}

ObservationalDataset sample_observational(const Scm& m, const std::vector<int>& n_per_slice,
                                          seed_t seed) {
  const int T = m.graph().horizon();
  if (static_cast<int>(n_per_slice.size()) != T + 1)
    throw std::invalid_argument("need one sample count per slice");

  ObservationalDataset data;
  data.variables = m.graph().variables();
  const Index v = static_cast<Index>(data.variables.size());
  int n_max = 0;
  for (int c : n_per_slice) n_max = std::max(n_max, c);

  data.slices.resize(T + 1);
  for (int t = 0; t <= T; ++t) data.slices[t].resize(n_per_slice[t], v);

  for (int i = 0; i < n_max; ++i) {
    auto values = evaluate(m, T, {}, [&](const NodeId& n) {
      const Gaussian g = m.noise(n);
      return normal_draw(g.mean, g.variance, seed, "obs", i, n.variable, n.time);
    });
    for (int t = 0; t <= T; ++t) {
      if (i >= n_per_slice[t]) continue;
      for (Index j = 0; j < v; ++j)
        data.slices[t](i, j) = values.at(NodeId{data.variables[j], t});
    }
  }
  return data;
}

std::map<NodeId, scalar> interventional_trajectory(const Scm& m, const InterventionPlan& plan,
                                                   int t_max, seed_t seed,
                                                   const ConditionedValues& conditioned) {
  check_plan(m, plan);
  InterventionPlan pinned = plan;
  for (const auto& [node, value] : conditioned) {
    if (!m.graph().has_node(node))
      throw std::invalid_argument("unknown node: " + to_string(node));
    pinned[node] = value;
  }
  return evaluate(m, t_max, pinned, [&](const NodeId& n) {
    const Gaussian g = m.noise(n);
    return normal_draw(g.mean, g.variance, seed, "int", n.variable, n.time);
  });
}

scalar sample_interventional(const Scm& m, const InterventionPlan& plan, int t, seed_t seed,
                             const ConditionedValues& conditioned) {
  const auto values = interventional_trajectory(m, plan, t, seed, conditioned);
  return values.at(m.graph().target_node(t));
}

scalar true_objective(const Scm& m, const InterventionSet& s, ConstVectorRef x,
                      const InterventionPlan& past, int t, int n_mc, seed_t seed,
                      const ConditionedValues& conditioned) {
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  if (static_cast<Index>(s.size()) != x.size())
    throw std::invalid_argument("intervention set and value count differ");
  InterventionPlan plan = past;
  for (std::size_t i = 0; i < s.size(); ++i) plan[NodeId{s[i], t}] = x[static_cast<Index>(i)];

  scalar sum = 0.0;
  for (int i = 0; i < n_mc; ++i)
    sum += sample_interventional(m, plan, t, stable_hash(seed, "mc", i), conditioned);
  return sum / static_cast<scalar>(n_mc);
}

Scm with_zero_noise(const Scm& m) {
  Scm out = m;
  for (auto& [node, g] : out.noise_) g = Gaussian{0.0, 0.0};
  return out;
}

}  // namespace dcbo
