#include "dcbo/graph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace dcbo {

std::string to_string(const NodeId& n) {
  return n.variable + "_" + std::to_string(n.time);
}

InterventionSet canonical_set(InterventionSet s) {
  std::sort(s.begin(), s.end());
  return s;
}

std::string set_label(const InterventionSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += "+";
    out += s[i];
  }
  return out;
}

Role TimeDag::role(const std::string& variable) const {
  auto it = roles_.find(variable);
  if (it == roles_.end())
    throw std::invalid_argument("unknown variable: " + variable);
  return it->second;
}

NodeId TimeDag::target_node(int t) const {
  if (t < 0 || t > horizon_)
    throw std::out_of_range("slice " + std::to_string(t) + " outside horizon " +
                            std::to_string(horizon_));
  return NodeId{target_, t};
}

std::vector<std::string> TimeDag::manipulative_variables() const {
  std::vector<std::string> out;
  for (const auto& [name, role] : roles_)
    if (role == Role::Manipulative) out.push_back(name);
  return out;
}

void TimeDag::finalize() {
  if (target_.empty())
    throw std::invalid_argument("graph has no target variable");
  for (const auto& [src, dst] : edges_) {
    if (src.time > dst.time)
      throw std::invalid_argument("backward-in-time edge " + to_string(src) +
                                  " -> " + to_string(dst));
  }

  // Kahn's algorithm; detects cycles and fixes the evaluation order.
  std::map<NodeId, int> indegree;
  for (const auto& n : nodes_) indegree[n] = 0;
  for (const auto& [src, dst] : edges_) ++indegree[dst];

  std::set<NodeId> ready;
  for (const auto& [n, d] : indegree)
    if (d == 0) ready.insert(n);

  topo_.clear();
  while (!ready.empty()) {
    NodeId n = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(n);
    for (const auto& [src, dst] : edges_) {
      if (src == n && --indegree[dst] == 0) ready.insert(dst);
    }
  }
  if (topo_.size() != nodes_.size())
    throw std::invalid_argument("graph contains a cycle");
}

TimeDag::Builder::Builder(int horizon) {
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  g_.horizon_ = horizon;
}

TimeDag::Builder& TimeDag::Builder::variable(const std::string& name, Role role) {
  if (g_.roles_.count(name))
    throw std::invalid_argument("duplicate variable: " + name);
  if (role == Role::Target) {
    if (!g_.target_.empty())
      throw std::invalid_argument("more than one target variable per slice");
    g_.target_ = name;
  }
  g_.variables_.push_back(name);
  g_.roles_[name] = role;
  for (int t = 0; t <= g_.horizon_; ++t) g_.nodes_.insert(NodeId{name, t});
  return *this;
}

TimeDag::Builder& TimeDag::Builder::edge(const NodeId& src, const NodeId& dst) {
  if (!g_.nodes_.count(src))
    throw std::invalid_argument("unknown node: " + to_string(src));
  if (!g_.nodes_.count(dst))
    throw std::invalid_argument("unknown node: " + to_string(dst));
  g_.edges_.insert({src, dst});
  g_.parents_[dst].insert(src);
  return *this;
}

TimeDag::Builder& TimeDag::Builder::within(const std::string& src, const std::string& dst) {
  for (int t = 0; t <= g_.horizon_; ++t) edge({src, t}, {dst, t});
  return *this;
}

TimeDag::Builder& TimeDag::Builder::within_at(const std::string& src, const std::string& dst, int t) {
  return edge({src, t}, {dst, t});
}

TimeDag::Builder& TimeDag::Builder::across(const std::string& src, const std::string& dst) {
  for (int t = 1; t <= g_.horizon_; ++t) edge({src, t - 1}, {dst, t});
  return *this;
}

TimeDag::Builder& TimeDag::Builder::across_at(const std::string& src, const std::string& dst, int t) {
  if (t < 1) throw std::invalid_argument("cross-slice edge needs t >= 1");
  return edge({src, t - 1}, {dst, t});
}

TimeDag TimeDag::Builder::build() {
  if (built_) throw std::logic_error("builder already consumed");
  built_ = true;
  g_.finalize();
  return std::move(g_);
}

std::set<NodeId> parents(const TimeDag& g, const NodeId& n) {
  if (!g.has_node(n)) throw std::invalid_argument("unknown node: " + to_string(n));
  auto it = g.parents_.find(n);
  return it == g.parents_.end() ? std::set<NodeId>{} : it->second;
}

std::set<NodeId> ancestors(const TimeDag& g, const NodeId& n) {
  if (!g.has_node(n)) throw std::invalid_argument("unknown node: " + to_string(n));
  std::set<NodeId> seen;
  std::queue<NodeId> frontier;
  frontier.push(n);
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop();
    for (const auto& p : parents(g, cur)) {
      if (seen.insert(p).second) frontier.push(p);
    }
  }
  return seen;
}

TimeDag mutilate(const TimeDag& g, const std::set<NodeId>& intervened) {
  for (const auto& n : intervened)
    if (!g.has_node(n)) throw std::invalid_argument("unknown node: " + to_string(n));

  TimeDag out;
  out.horizon_ = g.horizon_;
  out.variables_ = g.variables_;
  out.roles_ = g.roles_;
  out.target_ = g.target_;
  out.nodes_ = g.nodes_;
  for (const auto& e : g.edges_) {
    if (intervened.count(e.second)) continue;
    out.edges_.insert(e);
    out.parents_[e.second].insert(e.first);
  }
  out.finalize();
  return out;
}

bool is_stationary(const TimeDag& g) {
  auto within_slice = [&](int t) {
    std::set<std::pair<std::string, std::string>> s;
    for (const auto& [src, dst] : g.edges())
      if (src.time == t && dst.time == t) s.insert({src.variable, dst.variable});
    return s;
  };
  const auto base = within_slice(0);
  for (int t = 1; t <= g.horizon(); ++t)
    if (within_slice(t) != base) return false;
  return true;
}

std::pair<std::set<NodeId>, std::set<NodeId>> classify_parents(const TimeDag& g, int t) {
  const NodeId yt = g.target_node(t);
  std::set<NodeId> pt;
  std::set<NodeId> pnt;
  for (const auto& p : parents(g, yt)) {
    if (p.variable == g.target_variable() && p.time < t)
      pt.insert(p);
    else
      pnt.insert(p);
  }
  return {pt, pnt};
}

std::vector<InterventionSet> compute_mis(const TimeDag& g, int t) {
  if (t < 0 || t > g.horizon())
    throw std::out_of_range("slice " + std::to_string(t) + " outside horizon " +
                            std::to_string(g.horizon()));
  const auto vars = g.manipulative_variables();  // sorted (map order)
  const NodeId yt = g.target_node(t);

  std::vector<InterventionSet> result;
  const std::size_t n = vars.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    InterventionSet s;
    std::set<NodeId> pinned;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) {
        s.push_back(vars[i]);
        pinned.insert(NodeId{vars[i], t});
      }
    }
    const TimeDag cut = mutilate(g, pinned);
    const auto anc = ancestors(cut, yt);
    const bool all_contribute = std::all_of(
        pinned.begin(), pinned.end(), [&](const NodeId& v) { return anc.count(v) > 0; });
    if (all_contribute) result.push_back(canonical_set(std::move(s)));
  }
  std::sort(result.begin(), result.end());
  return result;
}

TimeDag load_time_dag(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("graph description is not valid JSON: ") + e.what());
  }

  if (!j.contains("horizon")) throw std::invalid_argument("graph description missing 'horizon'");
  TimeDag::Builder b(j.at("horizon").get<int>());

  if (!j.contains("variables")) throw std::invalid_argument("graph description missing 'variables'");
  for (const auto& [name, role_text] : j.at("variables").items()) {
    const std::string r = role_text.get<std::string>();
    Role role;
    if (r == "manipulative")
      role = Role::Manipulative;
    else if (r == "nonmanipulative")
      role = Role::NonManipulative;
    else if (r == "target")
      role = Role::Target;
    else
      throw std::invalid_argument("unknown role '" + r + "' for variable " + name);
    b.variable(name, role);
  }
  for (const auto& e : j.value("within_slice_edges", nlohmann::json::array()))
    b.within(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  for (const auto& e : j.value("cross_slice_edges", nlohmann::json::array()))
    b.across(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  return b.build();
}

std::string time_dag_to_json(const TimeDag& g) {
  nlohmann::json j;
  j["horizon"] = g.horizon();
  nlohmann::json vars = nlohmann::json::object();
  for (const auto& v : g.variables()) {
    switch (g.role(v)) {
      case Role::Manipulative: vars[v] = "manipulative"; break;
      case Role::NonManipulative: vars[v] = "nonmanipulative"; break;
      case Role::Target: vars[v] = "target"; break;
    }
  }
  j["variables"] = vars;
  nlohmann::json within = nlohmann::json::array();
  nlohmann::json across = nlohmann::json::array();
  for (const auto& [src, dst] : g.edges()) {
    if (src.time == dst.time && src.time == 0)
      within.push_back({src.variable, dst.variable});
    else if (dst.time == src.time + 1 && dst.time == 1)
      across.push_back({src.variable, dst.variable});
  }
  j["within_slice_edges"] = within;
  j["cross_slice_edges"] = across;
  return j.dump(2);
}

}  // namespace dcbo
