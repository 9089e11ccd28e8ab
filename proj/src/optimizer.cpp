#include "dcbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcbo {

std::string method_name(Method m) {
  switch (m) {
    case Method::Dcbo: return "dcbo";
    case Method::Cbo: return "cbo";
    case Method::Bo: return "bo";
    case Method::Abo: return "abo";
  }
  throw std::logic_error("unreachable");
}

Method parse_method(const std::string& name) {
  if (name == "dcbo") return Method::Dcbo;
  if (name == "cbo") return Method::Cbo;
  if (name == "bo") return Method::Bo;
  if (name == "abo") return Method::Abo;
  throw std::invalid_argument("unknown method '" + name + "' (valid: dcbo, cbo, bo, abo)");
}

InterventionPlan Trace::decisions_before(int t) const {
  return history_plan(history_before(t));
}

OptimalHistory Trace::history_before(int t) const {
  OptimalHistory h;
  for (const auto& s : slices) {
    if (s.t >= t) break;
    h.push_back({s.best_set, s.best_levels, s.y_best});
  }
  return h;
}

ConditionedValues Trace::targets_before(const TimeDag& g, int t) const {
  ConditionedValues out;
  for (const auto& s : slices) {
    if (s.t >= t) break;
    out[g.target_node(s.t)] = s.y_best;
  }
  return out;
}

namespace {

struct SetState {
  InterventionSet set;
  Matrix grid;
  CausalPrior prior;   // unused by bo/abo
  Matrix inputs;       // queried points (rows)
  Vector outputs;      // observed targets
  bool has_prior = false;
};

void append_row(Matrix& X, Vector& y, ConstVectorRef x, scalar value) {
  X.conservativeResize(X.rows() + 1, x.size());
  X.row(X.rows() - 1) = x;
  y.conservativeResize(y.size() + 1);
  y[y.size() - 1] = value;
}

Vector with_time(ConstVectorRef x, scalar t) {
  Vector out(x.size() + 1);
  out.head(x.size()) = x;
  out[x.size()] = t;
  return out;
}

/// Evenly spaced interior seed levels; a single point sits at the midpoint.
Vector seed_point(const InterventionSet& s, const Domain& domain, int k, int count) {
  Vector x(static_cast<Index>(s.size()));
  const scalar frac = static_cast<scalar>(k + 1) / static_cast<scalar>(count + 1);
  for (std::size_t j = 0; j < s.size(); ++j) {
    auto [lo, hi] = domain.bounds(s[j]);
    x[static_cast<Index>(j)] = lo + frac * (hi - lo);
  }
  return x;
}

}  // namespace

Trace run_method(const ExperimentSpec& spec, const MethodConfig& cfg,
                 const FittedScm* fitted_override) {
  if (cfg.trials < 1) throw std::invalid_argument("trial budget H must be >= 1");
  if (cfg.initial_points < 1) throw std::invalid_argument("initial_points must be >= 1");
  if (cfg.query_samples < 1) throw std::invalid_argument("query_samples must be >= 1");

  const Scm& scm = spec.scm;
  const TimeDag& g = scm.graph();
  const int T = g.horizon();
  const bool causal = cfg.method == Method::Dcbo || cfg.method == Method::Cbo;
  const bool dynamic_prior = cfg.method == Method::Dcbo;
  const CostFunction cost = unit_cost();

  Trace trace;
  trace.method = cfg.method;
  trace.seed = cfg.seed;
  trace.trials = cfg.trials;

  std::optional<FittedScm> fitted_storage;
  const FittedScm* fitted = fitted_override;
  if (causal && fitted == nullptr) {
    const ObservationalDataset data =
        sample_observational(scm, spec.obs_samples, stable_hash(cfg.seed, "obs"));
    fitted_storage =
        FittedScm::from_data(scm, data, spec.stationary, cfg.node_noise, cfg.fit_max_rows);
    fitted = &*fitted_storage;
  }

  // ABO keeps one dataset over (x, t) across the whole run.
  Matrix abo_inputs(0, 0);
  Vector abo_outputs(0);

  for (int t = 0; t <= T; ++t) {
    SliceTrace slice;
    slice.t = t;

    std::vector<InterventionSet> sets;
    if (causal) {
      sets = compute_mis(g, t);
      if (sets.empty())
        throw std::runtime_error("slice " + std::to_string(t) + " has no intervention sets");
    } else {
      sets = {canonical_set(g.manipulative_variables())};
    }

    const InterventionPlan past = trace.decisions_before(t);
    const OptimalHistory history = trace.history_before(t);
    // Queries condition on the realized earlier targets: the system keeps
    // its implemented interventions and observed optimal outcomes, only the
    // current slice (and unobserved side paths) re-randomizes.
    const ConditionedValues realized = trace.targets_before(g, t);

    std::vector<SetState> states;
    for (const auto& s : sets) {
      SetState st;
      st.set = s;
      st.grid = make_candidate_grid(s, scm.domain(), cfg.grids);
      st.inputs.resize(0, st.grid.cols());
      if (causal) {
        PriorConfig pc;
        pc.n_mc = cfg.n_mc;
        pc.n_draws = cfg.n_draws;
        pc.seed = stable_hash(cfg.seed, "prior", t, set_label(s));
        pc.use_history = dynamic_prior;
        // The static construction needs the slice's own observational data;
        // without it the flat fallback applies.
        if (!dynamic_prior && !fitted->slice_has_data(t)) {
          st.prior.grid = st.grid;
          st.prior.mean = Vector::Zero(st.grid.rows());
          st.prior.deviation = Vector::Zero(st.grid.rows());
          st.prior.fallback = true;
        } else {
          st.prior = build_prior(*fitted, s, t, history, st.grid, pc);
        }
        if (st.prior.fallback) slice.prior_fallback = true;
        st.has_prior = true;
      }
      states.push_back(std::move(st));
    }

    scalar incumbent = std::numeric_limits<scalar>::infinity();
    // Explorative queries run against a per-slice twin of the system: a
    // fixed set of exogenous scenarios shared by every query, so trying an
    // intervention twice observes the same outcome and the recorded value is
    // a Monte Carlo estimate of the objective itself.
    auto record_query = [&](int h, std::size_t set_idx, ConstVectorRef x) {
      SetState& st = states[set_idx];
      InterventionPlan plan = past;
      for (std::size_t j = 0; j < st.set.size(); ++j)
        plan[NodeId{st.set[j], t}] = x[static_cast<Index>(j)];
      scalar y = 0.0;
      try {
        for (int q = 0; q < cfg.query_samples; ++q)
          y += sample_interventional(scm, plan, t, stable_hash(cfg.seed, "twin", t, q),
                                     realized);
        y /= static_cast<scalar>(cfg.query_samples);
      } catch (const std::exception& e) {
        throw std::runtime_error("slice " + std::to_string(t) + ", trial " + std::to_string(h) +
                                 ": " + e.what());
      }
      append_row(st.inputs, st.outputs, x, y);
      if (cfg.method == Method::Abo) {
        const Vector xt = with_time(x, static_cast<scalar>(t));
        if (abo_inputs.cols() == 0) abo_inputs.resize(0, xt.size());
        append_row(abo_inputs, abo_outputs, xt, y);
      }
      incumbent = std::min(incumbent, y);
      slice.records.push_back({h, st.set, Vector(x), y, incumbent});
      return y;
    };

    // Seed interventional data: deterministic interior points per set, in
    // reverse canonical order so the first evaluated target of every method
    // is the midpoint of its largest set (a comparable starting reference).
    for (std::size_t i = states.size(); i-- > 0;) {
      for (int k = 0; k < cfg.initial_points; ++k) {
        const Vector x = seed_point(states[i].set, scm.domain(), k, cfg.initial_points);
        record_query(0, i, x);
      }
    }

    for (int h = 1; h <= cfg.trials; ++h) {
      std::vector<scalar> alphas(states.size());
      std::vector<Index> arg_rows(states.size());
      for (std::size_t i = 0; i < states.size(); ++i) {
        SetState& st = states[i];

        // Refit the surrogate on this set's current data.
        std::optional<GpModel> model;
        if (causal) {
          MeanFn mean = st.prior.mean_fn();
          DeviationFn dev = st.prior.deviation_fn();
          model.emplace(fit_rbf_ml(st.inputs, st.outputs, cfg.surrogate_noise, mean, dev));
        } else if (cfg.method == Method::Bo) {
          model.emplace(fit_rbf_ml(st.inputs, st.outputs, cfg.surrogate_noise));
        } else {
          model.emplace(
              fit_product_time_ml(abo_inputs, abo_outputs, cfg.surrogate_noise, 1.0));
        }

        PosteriorOnGrid posterior = [&](Index r) {
          if (cfg.method == Method::Abo)
            return model->predict(with_time(st.grid.row(r), static_cast<scalar>(t)));
          return model->predict(st.grid.row(r));
        };
        auto [row, alpha] = optimize_set(posterior, st.grid, incumbent, st.set, cost);
        alphas[i] = alpha;
        arg_rows[i] = row;
      }
      const std::size_t pick = select_set(alphas);
      record_query(h, pick, states[pick].grid.row(arg_rows[pick]));
    }

    // Decision intervention: the best observed point of the slice.
    const TrialRecord* best = nullptr;
    for (const auto& r : slice.records)
      if (best == nullptr || r.y < best->y) best = &r;
    slice.best_set = best->set;
    slice.best_levels = best->levels;
    slice.y_best = best->y;
    trace.slices.push_back(std::move(slice));
  }
  return trace;
}

Trace run_dcbo(const ExperimentSpec& spec, const MethodConfig& cfg,
               const FittedScm* fitted_override) {
  MethodConfig c = cfg;
  c.method = Method::Dcbo;
  return run_method(spec, c, fitted_override);
}

Trace run_cbo(const ExperimentSpec& spec, const MethodConfig& cfg) {
  MethodConfig c = cfg;
  c.method = Method::Cbo;
  return run_method(spec, c);
}

Trace run_bo(const ExperimentSpec& spec, const MethodConfig& cfg) {
  MethodConfig c = cfg;
  c.method = Method::Bo;
  return run_method(spec, c);
}

Trace run_abo(const ExperimentSpec& spec, const MethodConfig& cfg) {
  MethodConfig c = cfg;
  c.method = Method::Abo;
  return run_method(spec, c);
}

}  // namespace dcbo
