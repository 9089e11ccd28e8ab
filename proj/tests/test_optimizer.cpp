#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcbo/builtins.hpp"
#include "dcbo/metrics.hpp"
#include "dcbo/optimizer.hpp"

#include <cmath>

using namespace dcbo;

namespace {

MethodConfig small_config(Method m, seed_t seed) {
  MethodConfig cfg;
  cfg.method = m;
  cfg.trials = 4;
  cfg.seed = seed;
  cfg.n_mc = 40;
  cfg.n_draws = 4;
  cfg.grids = GridSizes{25, 7, 3};
  return cfg;
}

bool same_records(const Trace& a, const Trace& b, int t_max = -1) {
  if (a.slices.size() != b.slices.size() && t_max < 0) return false;
  const std::size_t slices = t_max < 0 ? a.slices.size() : static_cast<std::size_t>(t_max + 1);
  for (std::size_t i = 0; i < slices; ++i) {
    const auto& ra = a.slices[i].records;
    const auto& rb = b.slices[i].records;
    if (ra.size() != rb.size()) return false;
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (ra[j].h != rb[j].h || ra[j].set != rb[j].set || ra[j].y != rb[j].y ||
          ra[j].levels != rb[j].levels || ra[j].incumbent != rb[j].incumbent)
        return false;
    }
  }
  return true;
}

/// One-slice chain system so the time kernel is constant.
ExperimentSpec single_slice_spec() {
  TimeDag g = TimeDag::Builder(0)
                  .variable("X", Role::Manipulative)
                  .variable("Y", Role::Target)
                  .variable("Z", Role::Manipulative)
                  .within("X", "Z")
                  .within("Z", "Y")
                  .build();
  Scm::Builder b(std::move(g));
  b.equation({"X", 0}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"Z", 0}, [](ConstVectorRef pa, scalar e) { return std::exp(-pa[0]) + e; });
  b.target_split(0, nullptr, [](ConstVectorRef v) {
    return std::cos(v[0]) - std::exp(-v[0] / 20.0);
  });
  b.noise("X", {0, 1}).noise("Z", {0, 1}).noise("Y", {0, 1});
  b.domain("X", -5.0, 5.0).domain("Z", -5.0, 20.0);

  ExperimentSpec spec;
  spec.name = "single";
  spec.scm = b.build();
  spec.obs_samples = {10};
  return spec;
}

}  // namespace

TEST_CASE("traces are reproducible under a fixed seed") {
  const ExperimentSpec spec = builtin("stat");
  for (Method m : {Method::Dcbo, Method::Cbo, Method::Bo, Method::Abo}) {
    const Trace a = run_method(spec, small_config(m, 121));
    const Trace b = run_method(spec, small_config(m, 121));
    CAPTURE(method_name(m));
    CHECK(same_records(a, b));
    const Trace c = run_method(spec, small_config(m, 1337));
    CHECK_FALSE(same_records(a, c));
  }
}

TEST_CASE("first-slice reductions") {
  const ExperimentSpec spec = builtin("stat");
  const seed_t seed = 2027;
  const Trace dcbo = run_method(spec, small_config(Method::Dcbo, seed));
  const Trace cbo = run_method(spec, small_config(Method::Cbo, seed));
  CHECK(same_records(dcbo, cbo, 0));

  const Trace bo = run_method(spec, small_config(Method::Bo, seed));
  const Trace abo = run_method(spec, small_config(Method::Abo, seed));
  CHECK(same_records(bo, abo, 0));
}

TEST_CASE("baselines explore the full manipulative set only") {
  const ExperimentSpec spec = builtin("stat");
  for (Method m : {Method::Bo, Method::Abo}) {
    const Trace tr = run_method(spec, small_config(m, 5));
    for (const auto& slice : tr.slices) {
      for (const auto& r : slice.records) CHECK(r.set == InterventionSet{"X", "Z"});
      CHECK(slice.best_set == InterventionSet{"X", "Z"});
    }
  }
}

TEST_CASE("causal methods stay inside the exploration sets and domains") {
  const ExperimentSpec spec = builtin("stat");
  const auto sets = compute_mis(spec.scm.graph(), 0);
  for (Method m : {Method::Dcbo, Method::Cbo}) {
    const Trace tr = run_method(spec, small_config(m, 31));
    for (const auto& slice : tr.slices) {
      for (const auto& r : slice.records) {
        CHECK(std::find(sets.begin(), sets.end(), r.set) != sets.end());
        for (std::size_t j = 0; j < r.set.size(); ++j) {
          const auto [lo, hi] = spec.scm.domain().bounds(r.set[j]);
          CHECK(r.levels[static_cast<Index>(j)] >= lo);
          CHECK(r.levels[static_cast<Index>(j)] <= hi);
        }
      }
    }
  }
}

TEST_CASE("incumbent is monotone within every slice") {
  for (const char* name : {"stat", "nonstat"}) {
    const ExperimentSpec spec = builtin(name);
    for (Method m : {Method::Dcbo, Method::Cbo, Method::Bo, Method::Abo}) {
      const Trace tr = run_method(spec, small_config(m, 77));
      for (const auto& slice : tr.slices) {
        scalar last = std::numeric_limits<scalar>::infinity();
        for (const auto& r : slice.records) {
          CHECK(r.incumbent <= last + 1e-15);
          CHECK(r.incumbent <= r.y + 1e-15);
          last = r.incumbent;
        }
        CHECK(slice.y_best == last);
      }
    }
  }
}

TEST_CASE("decisions persist one per slice") {
  const ExperimentSpec spec = builtin("stat");
  const Trace tr = run_method(spec, small_config(Method::Dcbo, 8));
  const OptimalHistory h = tr.history_before(3);
  REQUIRE(h.size() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(h[t].set == tr.slices[t].best_set);
    CHECK(h[t].y_star == tr.slices[t].y_best);
  }
  const InterventionPlan plan = tr.decisions_before(2);
  // Exactly the slice-0 and slice-1 decision nodes.
  std::size_t expected = tr.slices[0].best_set.size() + tr.slices[1].best_set.size();
  CHECK(plan.size() == expected);
}

TEST_CASE("abo reduces to bo on a single-slice system") {
  const ExperimentSpec spec = single_slice_spec();
  const Trace bo = run_method(spec, small_config(Method::Bo, 91));
  const Trace abo = run_method(spec, small_config(Method::Abo, 91));
  CHECK(same_records(bo, abo));
}

TEST_CASE("oracle priors drive the search to the true optimum") {
  const ExperimentSpec spec = builtin("stat");
  const FittedScm oracle_fit = FittedScm::from_true(spec.scm);
  MethodConfig cfg = small_config(Method::Dcbo, 4);
  cfg.trials = 12;
  cfg.grids = GridSizes{100, 31, 11};
  const Trace tr = run_dcbo(spec, cfg, &oracle_fit);

  for (int t = 0; t <= spec.scm.graph().horizon(); ++t) {
    const SliceOracle o =
        oracle_slice_optimum(spec.scm, compute_mis(spec.scm.graph(), t),
                             tr.decisions_before(t), t, cfg.grids, 2000, 555);
    CAPTURE(t);
    // Best observation reaches the optimum basin (unit target noise).
    CHECK(tr.slices[t].y_best <= o.y_star + 1.0);
    CHECK(tr.slices[t].y_best >= o.y_star - 5.0);
  }
}

TEST_CASE("invalid configurations are rejected") {
  const ExperimentSpec spec = builtin("stat");
  MethodConfig cfg = small_config(Method::Dcbo, 1);
  cfg.trials = 0;
  CHECK_THROWS_AS(run_method(spec, cfg), std::invalid_argument);
  cfg.trials = 2;
  cfg.initial_points = 0;
  CHECK_THROWS_AS(run_method(spec, cfg), std::invalid_argument);
}
