#include "dcbo/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcbo {

namespace {

ParentPattern pattern_of(const TimeDag& g, const NodeId& n) {
  ParentPattern p;
  for (const NodeId& pa : parent_signature(g, n)) p.push_back({pa.variable, n.time - pa.time});
  return p;
}

}  // namespace

const FittedNode& FittedScm::node(const NodeId& n) const {
  auto it = nodes_.find(n);
  if (it == nodes_.end())
    throw std::runtime_error("no fitted function for " + to_string(n));
  return it->second;
}

const TargetComponents& FittedScm::target(int t) const {
  auto it = targets_.find(t);
  if (it == targets_.end())
    throw std::runtime_error("no fitted target components for slice " + std::to_string(t));
  return *it->second;
}

const std::vector<NodeId>& FittedScm::parent_order(const NodeId& n) const {
  auto it = parent_order_.find(n);
  if (it == parent_order_.end()) throw std::invalid_argument("unknown node: " + to_string(n));
  return it->second;
}

bool FittedScm::usable_for_slice(int t) const {
  if (!has_target(t)) return false;
  // Every ancestor of Y_t that might need sampling must have a fit.
  for (const NodeId& a : ancestors(*graph_, graph_->target_node(t))) {
    if (a.variable == graph_->target_variable()) {
      if (!has_target(a.time)) return false;
    } else if (!has_node(a)) {
      return false;
    }
  }
  return true;
}

bool FittedScm::slice_has_data(int t) const {
  return t >= 0 && t < static_cast<int>(slice_data_.size()) && slice_data_[t];
}

FittedScm FittedScm::from_data(const Scm& scm, const ObservationalDataset& data, bool stationary,
                               scalar node_noise_variance, Index max_rows) {
  FittedScm f;
  f.graph_ = std::make_shared<TimeDag>(scm.graph());
  f.domain_ = scm.domain();
  const TimeDag& g = *f.graph_;
  const int T = g.horizon();
  for (const NodeId& n : g.nodes()) f.parent_order_[n] = parent_signature(g, n);
  f.slice_data_.resize(T + 1);
  for (int t = 0; t <= T; ++t) f.slice_data_[t] = data.available(t);

  const std::string target = g.target_variable();

  // Slice groups sharing one fit: {0} and {1..T} under stationarity,
  // singletons otherwise.
  std::vector<std::vector<int>> groups;
  if (stationary && T >= 1) {
    groups.push_back({0});
    std::vector<int> rest;
    for (int t = 1; t <= T; ++t) rest.push_back(t);
    groups.push_back(rest);
  } else {
    for (int t = 0; t <= T; ++t) groups.push_back({t});
  }

  for (const auto& group : groups) {
    for (const std::string& var : g.variables()) {
      if (var == target) continue;
      const ParentPattern pattern = pattern_of(g, NodeId{var, group.front()});
      std::pair<Matrix, Vector> rows = node_training_rows(data, var, pattern, group);
      if (rows.second.size() == 0) continue;

      std::shared_ptr<const GpModel> model;
      FittedNode fn;
      if (pattern.empty()) {
        // Root node: constant mean, spread from the sample variance.
        const scalar mean = rows.second.mean();
        const scalar var =
            rows.second.size() > 1
                ? (rows.second.array() - mean).square().sum() / (rows.second.size() - 1.0)
                : 0.0;
        fn.mean = [mean](ConstVectorRef) { return mean; };
        fn.residual_variance = var;
      } else {
        model = std::make_shared<const GpModel>(
            fit_node_function(data, var, pattern, group, node_noise_variance, max_rows));
        scalar ss = 0.0;
        for (Index i = 0; i < model->size(); ++i) {
          const scalar r = model->targets()[i] - model->predict_mean(model->inputs().row(i));
          ss += r * r;
        }
        fn.residual_variance =
            std::max(ss / static_cast<scalar>(model->size()), model->prior().noise_variance);
        fn.mean = [model](ConstVectorRef pa) { return model->predict_mean(pa); };
      }
      for (int t : group) f.nodes_[NodeId{var, t}] = fn;
    }

    // Target components for the group (skipped when no rows). The pooled
    // stationary group prefers the two-stage estimate: the first slice
    // identifies the pnt component alone, which sidesteps the concurvity of
    // the pooled joint fit.
    try {
      std::shared_ptr<const TargetComponents> comps;
      if (stationary && group.front() >= 1) {
        comps = std::make_shared<const TargetComponents>(
            TargetComponents::two_stage(data, g, group, node_noise_variance, max_rows));
      } else {
        comps = std::make_shared<const TargetComponents>(
            fit_target_additive(data, g, group, node_noise_variance, max_rows));
      }
      for (int t : group) f.targets_[t] = comps;
    } catch (const std::runtime_error&) {
      // no rows; slices stay without target components
    }
  }
  return f;
}

FittedScm FittedScm::from_true(const Scm& scm) {
  FittedScm f;
  f.graph_ = std::make_shared<TimeDag>(scm.graph());
  f.domain_ = scm.domain();
  const TimeDag& g = *f.graph_;
  const int T = g.horizon();
  for (const NodeId& n : g.nodes()) f.parent_order_[n] = parent_signature(g, n);
  f.slice_data_.assign(T + 1, true);

  for (const NodeId& n : g.nodes()) {
    if (n.variable == g.target_variable()) continue;
    const NodeEquation eq = scm.equation(n);
    const Gaussian noise = scm.noise(n);
    FittedNode fn;
    fn.mean = [fn_ = eq.fn, m = noise.mean](ConstVectorRef pa) { return fn_(pa, m); };
    fn.residual_variance = noise.variance;
    f.nodes_[n] = fn;
  }
  for (int t = 0; t <= T; ++t) {
    const NodeEquation& eq = scm.equation(g.target_node(t));
    if (!eq.target_pnt)
      throw std::runtime_error("no additive target split available at slice " +
                               std::to_string(t));
    f.targets_[t] = std::make_shared<const TargetComponents>(TargetComponents::exact(
        eq.target_pt, eq.target_pnt, scm.noise(g.target_node(t)).variance));
  }
  return f;
}

InterventionPlan history_plan(const OptimalHistory& h) {
  InterventionPlan plan;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& d = h[i];
    for (std::size_t j = 0; j < d.set.size(); ++j)
      plan[NodeId{d.set[j], static_cast<int>(i)}] = d.levels[static_cast<Index>(j)];
  }
  return plan;
}

Index CausalPrior::nearest_row(ConstVectorRef x) const {
  Index best = 0;
  scalar best_d = std::numeric_limits<scalar>::infinity();
  for (Index r = 0; r < grid.rows(); ++r) {
    const scalar d = (grid.row(r).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

MeanFn CausalPrior::mean_fn() const {
  return [self = *this](ConstVectorRef x) { return self.mean[self.nearest_row(x)]; };
}

DeviationFn CausalPrior::deviation_fn() const {
  if (zero_deviation()) return {};
  return [self = *this](ConstVectorRef x) { return self.deviation[self.nearest_row(x)]; };
}

namespace {

/// Recursive node resolution shared by propagation and the do-effect
/// estimate. `pinned` carries interventions; `history` (optional) pins past
/// targets at their observed optima.
struct Resolver {
  const FittedScm& fitted;
  const InterventionPlan& pinned;
  const OptimalHistory* history;  // null: sample past targets
  const ExogenousDraw& draw;
  std::map<NodeId, scalar> cache;

  scalar value(const NodeId& n) {
    if (auto it = pinned.find(n); it != pinned.end()) return it->second;
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    scalar v;
    const bool is_target = n.variable == fitted.graph().target_variable();
    if (is_target && history != nullptr) {
      if (static_cast<std::size_t>(n.time) >= history->size())
        throw std::runtime_error("history does not cover slice " + std::to_string(n.time));
      v = (*history)[n.time].y_star;
    } else {
      const auto& order = fitted.parent_order(n);
      Vector pa(static_cast<Index>(order.size()));
      for (std::size_t i = 0; i < order.size(); ++i) pa[static_cast<Index>(i)] = value(order[i]);
      if (is_target) {
        const TargetComponents& c = fitted.target(n.time);
        auto [pt_nodes, pnt_nodes] = classify_parents(fitted.graph(), n.time);
        Vector pt_in(static_cast<Index>(pt_nodes.size()));
        Vector pnt_in(static_cast<Index>(pnt_nodes.size()));
        Index a = 0, b = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
          if (pt_nodes.count(order[i]))
            pt_in[a++] = pa[static_cast<Index>(i)];
          else
            pnt_in[b++] = pa[static_cast<Index>(i)];
        }
        v = c.pt_mean(pt_in) + c.pnt_mean(pnt_in) + draw(n);
      } else {
        const FittedNode& fn = fitted.node(n);
        v = fn.mean(pa) + draw(n);
      }
    }
    cache[n] = v;
    return v;
  }
};

}  // namespace

/// Assembles the pnt-component input at slice t: intervened parents take
/// their plan values, free parents are resolved recursively.
static Vector pnt_inputs(const FittedScm& fitted, const InterventionSet& s, ConstVectorRef x,
                         const OptimalHistory* history, const InterventionPlan& conditioning,
                         int t, const ExogenousDraw& draw) {
  const TimeDag& g = fitted.graph();
  InterventionPlan pinned = conditioning;
  for (std::size_t i = 0; i < s.size(); ++i) pinned[NodeId{s[i], t}] = x[static_cast<Index>(i)];

  auto [pt_nodes, pnt_nodes] = classify_parents(g, t);
  Resolver resolver{fitted, pinned, history, draw, {}};

  const auto& order = fitted.parent_order(g.target_node(t));
  Vector out(static_cast<Index>(pnt_nodes.size()));
  Index j = 0;
  for (const NodeId& p : order) {
    if (pt_nodes.count(p)) continue;
    out[j++] = resolver.value(p);
  }
  return out;
}

scalar propagate(const FittedScm& fitted, const InterventionSet& s, ConstVectorRef x,
                 const OptimalHistory& history, int t, const ExogenousDraw& draw) {
  const Vector in = pnt_inputs(fitted, s, x, &history, history_plan(history), t, draw);
  return fitted.target(t).pnt_mean(in);
}

namespace {

/// Joint draws of the pnt component on an axis-product grid, evaluated by
/// multilinear interpolation (edge-clamped). Exact components bypass the
/// grid entirely.
class PntFunctionDraws {
 public:
  PntFunctionDraws(const TargetComponents& c, std::vector<Vector> axes, int n_draws, seed_t seed)
      : comps_(c), axes_(std::move(axes)) {
    if (comps_.is_exact()) return;

    Index total = 1;
    for (const auto& a : axes_) total *= a.size();
    Matrix G(total, static_cast<Index>(axes_.size()));
    for (Index p = 0; p < total; ++p) {
      Index rem = p;
      for (std::size_t dim = 0; dim < axes_.size(); ++dim) {
        const Index n = axes_[dim].size();
        G(p, static_cast<Index>(dim)) = axes_[dim][rem % n];
        rem /= n;
      }
    }
    Vector mu(total);
    for (Index p = 0; p < total; ++p) mu[p] = comps_.pnt_mean(G.row(p));

    Matrix cov = comps_.pnt_cov(G);
    cov.diagonal().array() += 1e-10 * std::max(cov.trace() / total, scalar{1e-12});
    auto [llt, jitter] = robust_llt(cov, "pnt function draws");
    (void)jitter;
    const Matrix L = llt.matrixL();

    samples_.resize(total, n_draws);
    for (int d = 0; d < n_draws; ++d) {
      Vector eta(total);
      for (Index p = 0; p < total; ++p)
        eta[p] = standard_normal(stable_hash(seed, "fdraw", d, p));
      samples_.col(d) = mu + L * eta;
    }
  }

  scalar operator()(int d, ConstVectorRef x) const {
    if (comps_.is_exact()) return comps_.pnt_mean(x);
    return interpolate(samples_.col(d), x);
  }

 private:
  scalar interpolate(ConstVectorRef values, ConstVectorRef x) const {
    const std::size_t D = axes_.size();
    // Per-dim bracketing index and weight, clamped at the edges.
    std::vector<Index> i0(D);
    std::vector<scalar> w(D);
    for (std::size_t dim = 0; dim < D; ++dim) {
      const Vector& a = axes_[dim];
      const scalar v = x[static_cast<Index>(dim)];
      if (v <= a[0]) {
        i0[dim] = 0;
        w[dim] = 0.0;
      } else if (v >= a[a.size() - 1]) {
        i0[dim] = a.size() - 2;
        w[dim] = 1.0;
      } else {
        Index hi = 1;
        while (a[hi] < v) ++hi;
        i0[dim] = hi - 1;
        w[dim] = (v - a[hi - 1]) / (a[hi] - a[hi - 1]);
      }
    }
    scalar out = 0.0;
    const std::size_t corners = std::size_t{1} << D;
    for (std::size_t c = 0; c < corners; ++c) {
      scalar weight = 1.0;
      Index flat = 0;
      Index stride = 1;
      for (std::size_t dim = 0; dim < D; ++dim) {
        const bool hi = (c >> dim) & 1;
        weight *= hi ? w[dim] : (1.0 - w[dim]);
        flat += (i0[dim] + (hi ? 1 : 0)) * stride;
        stride *= axes_[dim].size();
      }
      if (weight != 0.0) out += weight * values[flat];
    }
    return out;
  }

  const TargetComponents& comps_;
  std::vector<Vector> axes_;
  Matrix samples_;
};

Index axis_points(std::size_t dims) {
  if (dims <= 1) return 41;
  if (dims == 2) return 21;
  return 9;
}

}  // namespace

CausalPrior build_prior(const FittedScm& fitted, const InterventionSet& s, int t,
                        const OptimalHistory& history, const Matrix& grid,
                        const PriorConfig& cfg) {
  CausalPrior prior;
  prior.grid = grid;
  prior.mean = Vector::Zero(grid.rows());
  prior.deviation = Vector::Zero(grid.rows());

  if (!fitted.usable_for_slice(t)) {
    prior.fallback = true;
    return prior;
  }

  const TimeDag& g = fitted.graph();
  const bool with_history = cfg.use_history && t > 0;
  if (cfg.use_history && static_cast<int>(history.size()) < t)
    throw std::invalid_argument("history must cover slices 0.." + std::to_string(t - 1));

  const TargetComponents& comps = fitted.target(t);
  auto [pt_nodes, pnt_nodes] = classify_parents(g, t);

  // Observed optima feeding the shift term, in canonical pt order.
  Vector f_star(static_cast<Index>(pt_nodes.size()));
  {
    Index i = 0;
    for (const NodeId& p : fitted.parent_order(g.target_node(t)))
      if (pt_nodes.count(p)) f_star[i++] = with_history ? history[p.time].y_star : 0.0;
  }
  const bool shift = with_history && f_star.size() > 0;

  const InterventionPlan conditioning = with_history ? history_plan(history) : InterventionPlan{};
  const OptimalHistory* hist_ptr = with_history ? &history : nullptr;

  // Exogenous samples shared across grid rows (and with the do-effect
  // estimator) so the prior surface is smooth in x.
  const Index rows = grid.rows();
  const Index pnt_dim = static_cast<Index>(pnt_nodes.size());
  Matrix zeta(rows * cfg.n_mc, pnt_dim);
  for (int m = 0; m < cfg.n_mc; ++m) {
    ExogenousDraw draw = [&, m](const NodeId& n) {
      const scalar var = n.variable == g.target_variable()
                             ? fitted.target(n.time).residual_variance()
                             : fitted.node(n).residual_variance;
      return normal_draw(0.0, var, cfg.seed, "exo", m, n.variable, n.time);
    };
    for (Index r = 0; r < rows; ++r)
      zeta.row(r * cfg.n_mc + m) =
          pnt_inputs(fitted, s, grid.row(r), hist_ptr, conditioning, t, draw);
  }

  // Axes for the function draws: declared domains where available, else the
  // fitted training range padded by a quarter span.
  std::vector<Vector> axes;
  if (!comps.is_exact()) {
    const auto ranges = comps.pnt_input_ranges();
    Index j = 0;
    for (const NodeId& p : fitted.parent_order(g.target_node(t))) {
      if (pt_nodes.count(p)) continue;
      scalar lo, hi;
      if (fitted.domain().has(p.variable)) {
        std::tie(lo, hi) = fitted.domain().bounds(p.variable);
      } else if (j < static_cast<Index>(ranges.size())) {
        lo = ranges[j].first;
        hi = ranges[j].second;
      } else {
        lo = -5.0;
        hi = 5.0;
      }
      // Cover realized propagation values as well.
      lo = std::min(lo, zeta.col(j).minCoeff());
      hi = std::max(hi, zeta.col(j).maxCoeff());
      const scalar pad = 0.25 * std::max(hi - lo, scalar{1e-3});
      axes.push_back(linspace(lo - pad, hi + pad, axis_points(pnt_nodes.size())));
      ++j;
    }
  }
  PntFunctionDraws draws(comps, std::move(axes), cfg.n_draws, stable_hash(cfg.seed, "pnt"));

  // One shift value per function draw, shared across grid rows.
  Vector shift_draws = Vector::Zero(cfg.n_draws);
  if (shift) {
    const scalar mu = comps.pt_mean(f_star);
    const scalar sd = std::sqrt(comps.pt_variance(f_star));
    for (int d = 0; d < cfg.n_draws; ++d)
      shift_draws[d] = mu + sd * standard_normal(stable_hash(cfg.seed, "ptdraw", d));
  }

  Vector vals(cfg.n_draws);
  for (Index r = 0; r < rows; ++r) {
    for (int d = 0; d < cfg.n_draws; ++d) {
      scalar inner = 0.0;
      for (int m = 0; m < cfg.n_mc; ++m) inner += draws(d, zeta.row(r * cfg.n_mc + m));
      vals[d] = shift_draws[d] + inner / static_cast<scalar>(cfg.n_mc);
    }
    const scalar mean = vals.mean();
    prior.mean[r] = mean;
    // Spread across function draws; identical draws give exactly zero.
    if (vals.maxCoeff() == vals.minCoeff()) {
      prior.deviation[r] = 0.0;
    } else {
      prior.deviation[r] =
          std::sqrt((vals.array() - mean).square().sum() / static_cast<scalar>(cfg.n_draws));
    }
  }
  return prior;
}

std::pair<scalar, scalar> estimate_do_effect(const FittedScm& fitted, const InterventionSet& s,
                                             ConstVectorRef x, const InterventionPlan& conditioning,
                                             int t, int n_mc, seed_t seed) {
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  const TimeDag& g = fitted.graph();
  if (!fitted.usable_for_slice(t))
    throw std::runtime_error("fitted model set cannot propagate into slice " + std::to_string(t));

  const TargetComponents& comps = fitted.target(t);
  auto [pt_nodes, pnt_nodes] = classify_parents(g, t);

  InterventionPlan pinned = conditioning;
  for (std::size_t i = 0; i < s.size(); ++i) pinned[NodeId{s[i], t}] = x[static_cast<Index>(i)];

  scalar sum = 0.0;
  scalar sum_sq = 0.0;
  for (int m = 0; m < n_mc; ++m) {
    ExogenousDraw draw = [&, m](const NodeId& n) {
      const scalar var = n.variable == g.target_variable()
                             ? fitted.target(n.time).residual_variance()
                             : fitted.node(n).residual_variance;
      return normal_draw(0.0, var, seed, "exo", m, n.variable, n.time);
    };
    Resolver resolver{fitted, pinned, nullptr, draw, {}};
    const auto& order = fitted.parent_order(g.target_node(t));
    Vector pt_in(static_cast<Index>(pt_nodes.size()));
    Vector pnt_in(static_cast<Index>(pnt_nodes.size()));
    Index a = 0, b = 0;
    for (const NodeId& p : order) {
      if (pt_nodes.count(p))
        pt_in[a++] = resolver.value(p);
      else
        pnt_in[b++] = resolver.value(p);
    }
    const scalar y = comps.pt_mean(pt_in) + comps.pnt_mean(pnt_in);
    sum += y;
    sum_sq += y * y;
  }
  const scalar mean = sum / n_mc;
  if (n_mc == 1) return {mean, 0.0};
  const scalar var = std::max(sum_sq / n_mc - mean * mean, scalar{0}) *
                     (static_cast<scalar>(n_mc) / (n_mc - 1.0));
  return {mean, std::sqrt(var / n_mc)};
}

}  // namespace dcbo
