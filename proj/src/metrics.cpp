#include "dcbo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcbo {

GapResult gap(const GapInputs& in) {
  if (in.trials < 1) throw std::invalid_argument("trial budget must be >= 1");
  if (in.trials_to_best < 1 || in.trials_to_best > in.trials)
    throw std::invalid_argument("trials_to_best must lie in [1, H]");

  GapResult out;
  scalar ratio;
  if (in.y_star == in.y_init) {
    out.degenerate = true;
    ratio = in.y_best == in.y_star ? 1.0 : 0.0;
  } else {
    ratio = (in.y_best - in.y_init) / (in.y_star - in.y_init);
    ratio = std::clamp(ratio, scalar{0}, scalar{1});
  }
  const scalar h = static_cast<scalar>(in.trials);
  const scalar speed = (h - static_cast<scalar>(in.trials_to_best)) / h;
  out.value = (ratio + speed) / (1.0 + (h - 1.0) / h);
  return out;
}

std::pair<scalar, scalar> aggregate(const std::vector<scalar>& values) {
  if (values.empty()) throw std::invalid_argument("nothing to aggregate");
  const scalar n = static_cast<scalar>(values.size());
  scalar mean = 0.0;
  for (scalar v : values) mean += v;
  mean /= n;
  if (values.size() == 1) return {mean, 0.0};
  scalar ss = 0.0;
  for (scalar v : values) ss += (v - mean) * (v - mean);
  const scalar sample_std = std::sqrt(ss / (n - 1.0));
  return {mean, sample_std / std::sqrt(n)};
}

SliceOracle oracle_slice_optimum(const Scm& scm, const std::vector<InterventionSet>& sets,
                                 const InterventionPlan& past, int t, const GridSizes& sizes,
                                 int n_mc, seed_t seed, const ConditionedValues& conditioned,
                                 const std::vector<std::pair<InterventionSet, Vector>>&
                                     extra_points) {
  if (sets.empty()) throw std::invalid_argument("oracle needs at least one set");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  const TimeDag& g = scm.graph();

  // Flat node indexing for cheap trajectory copies.
  const auto& topo = g.topological_order();
  std::map<NodeId, Index> index;
  for (std::size_t i = 0; i < topo.size(); ++i) index[topo[i]] = static_cast<Index>(i);
  std::vector<std::vector<Index>> parent_idx(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i)
    for (const NodeId& p : scm.parent_order(topo[i]))
      parent_idx[i].push_back(index.at(p));

  auto eval_range = [&](Vector& values, int t_lo, int t_hi, const InterventionPlan& pinned,
                        int sample) {
    Vector pa;
    for (std::size_t i = 0; i < topo.size(); ++i) {
      const NodeId& n = topo[i];
      if (n.time < t_lo || n.time > t_hi) continue;
      if (auto it = pinned.find(n); it != pinned.end()) {
        values[static_cast<Index>(i)] = it->second;
        continue;
      }
      pa.resize(static_cast<Index>(parent_idx[i].size()));
      for (std::size_t j = 0; j < parent_idx[i].size(); ++j) pa[static_cast<Index>(j)] = values[parent_idx[i][j]];
      const Gaussian noise = scm.noise(n);
      values[static_cast<Index>(i)] =
          scm.equation(n).fn(pa, normal_draw(noise.mean, noise.variance, seed, "oracle", sample,
                                             n.variable, n.time));
    }
  };

  // Slice prefixes under the implemented decisions and realized targets,
  // one per Monte Carlo sample, shared by every set and grid point.
  InterventionPlan prefix_pins = past;
  for (const auto& [node, value] : conditioned) prefix_pins[node] = value;
  std::vector<Vector> prefixes(static_cast<std::size_t>(n_mc), Vector::Zero(topo.size()));
  for (int m = 0; m < n_mc; ++m) eval_range(prefixes[m], 0, t - 1, prefix_pins, m);

  const Index y_idx = index.at(g.target_node(t));
  SliceOracle best;
  best.y_star = std::numeric_limits<scalar>::infinity();

  Vector work(topo.size());
  for (const auto& s : sets) {
    Matrix grid = make_candidate_grid(s, scm.domain(), sizes);
    Vector vals(grid.rows());
    for (Index r = 0; r < grid.rows(); ++r) {
      InterventionPlan pinned = past;
      for (std::size_t j = 0; j < s.size(); ++j)
        pinned[NodeId{s[j], t}] = grid(r, static_cast<Index>(j));
      scalar sum = 0.0;
      for (int m = 0; m < n_mc; ++m) {
        work = prefixes[m];
        eval_range(work, t, t, pinned, m);
        sum += work[y_idx];
      }
      vals[r] = sum / static_cast<scalar>(n_mc);
      if (vals[r] < best.y_star) {
        best.y_star = vals[r];
        best.best_set = s;
        best.best_levels = grid.row(r);
      }
    }
    best.sets.push_back(s);
    best.grids.push_back(std::move(grid));
    best.values.push_back(std::move(vals));
  }

  // Arbitrary requested candidates (they do not enter the minimum).
  for (const auto& [s, x] : extra_points) {
    InterventionPlan pinned = past;
    for (std::size_t j = 0; j < s.size(); ++j)
      pinned[NodeId{s[j], t}] = x[static_cast<Index>(j)];
    scalar sum = 0.0;
    for (int m = 0; m < n_mc; ++m) {
      work = prefixes[m];
      eval_range(work, t, t, pinned, m);
      sum += work[y_idx];
    }
    best.extra_points.push_back({s, x});
    best.extra_values.push_back(sum / static_cast<scalar>(n_mc));
  }
  return best;
}

scalar SliceOracle::value_at(const InterventionSet& s, ConstVectorRef x) const {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i] != s) continue;
    for (Index r = 0; r < grids[i].rows(); ++r) {
      if ((grids[i].row(r).transpose() - x).cwiseAbs().maxCoeff() <= 1e-9) return values[i][r];
    }
    break;
  }
  for (std::size_t i = 0; i < extra_points.size(); ++i) {
    if (extra_points[i].first != s) continue;
    if ((extra_points[i].second - x).cwiseAbs().maxCoeff() <= 1e-9) return extra_values[i];
  }
  throw std::invalid_argument("no oracle value for the queried point of set " + set_label(s));
}

int trials_to_optimum(const SliceTrace& slice, scalar y_star, int trials, scalar eps_opt,
                      scalar rel_tol) {
  scalar y_best = std::numeric_limits<scalar>::infinity();
  for (const auto& r : slice.records) y_best = std::min(y_best, r.y);

  const bool converged = y_best <= y_star + rel_tol * std::abs(y_star);
  if (!converged) return trials;
  for (const auto& r : slice.records)
    if (r.h >= 1 && r.y <= y_best + eps_opt) return r.h;
  return trials;  // the best point was a seed evaluation
}

std::vector<GapResult> trace_gaps(const Trace& trace, const std::vector<SliceOracle>& oracles) {
  if (oracles.size() != trace.slices.size())
    throw std::invalid_argument("one oracle per slice required");
  std::vector<GapResult> out;
  for (std::size_t i = 0; i < trace.slices.size(); ++i) {
    const SliceTrace& slice = trace.slices[i];
    if (slice.records.empty()) throw std::invalid_argument("slice trace has no records");

    // The same trace with every observation replaced by the objective value
    // of the queried candidate.
    SliceTrace judged = slice;
    scalar best = std::numeric_limits<scalar>::infinity();
    for (auto& r : judged.records) {
      r.y = oracles[i].value_at(r.set, r.levels);
      best = std::min(best, r.y);
    }
    judged.y_best = best;

    GapInputs in;
    in.y_init = judged.records.front().y;
    in.y_best = best;
    in.y_star = oracles[i].y_star;
    in.trials = trace.trials;
    in.trials_to_best = trials_to_optimum(judged, oracles[i].y_star, trace.trials);
    out.push_back(gap(in));
  }
  return out;
}

scalar optimal_set_rate(const std::vector<Trace>& traces,
                        const std::vector<std::vector<SliceOracle>>& oracles) {
  if (traces.size() != oracles.size())
    throw std::invalid_argument("one oracle vector per trace required");
  int total = 0;
  int matched = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (oracles[i].size() != traces[i].slices.size())
      throw std::invalid_argument("one oracle per slice required");
    for (std::size_t t = 0; t < traces[i].slices.size(); ++t) {
      ++total;
      if (traces[i].slices[t].best_set == oracles[i][t].best_set) ++matched;
    }
  }
  if (total == 0) throw std::invalid_argument("no slices to rate");
  return 100.0 * static_cast<scalar>(matched) / static_cast<scalar>(total);
}

}  // namespace dcbo
