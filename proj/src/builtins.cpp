#include "dcbo/builtins.hpp"

#include <cmath>
#include <stdexcept>

namespace dcbo {

namespace {

// Shared X -> Z -> Y chain with unit lags on every variable.
TimeDag chain_graph(int horizon) {
  return TimeDag::Builder(horizon)
      .variable("X", Role::Manipulative)
      .variable("Y", Role::Target)
      .variable("Z", Role::Manipulative)
      .within("X", "Z")
      .within("Z", "Y")
      .across("X", "X")
      .across("Z", "Z")
      .across("Y", "Y")
      .build();
}

scalar target_pnt_chain(scalar z) { return std::cos(z) - std::exp(-z / 20.0); }

// X_t = X_{t-1} + e, Z_t = exp(-X_t) + Z_{t-1} + e, Y_t = cos(Z_t) - exp(-Z_t/20) + Y_{t-1} + e.
Scm chain_scm(int horizon, Gaussian noise_x, Gaussian noise_z, Gaussian noise_y) {
  Scm::Builder b(chain_graph(horizon));
  b.equation({"X", 0}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"Z", 0}, [](ConstVectorRef pa, scalar e) { return std::exp(-pa[0]) + e; });
  b.target_split(0, nullptr, [](ConstVectorRef pnt) { return target_pnt_chain(pnt[0]); });
  for (int t = 1; t <= horizon; ++t) {
    b.equation({"X", t}, [](ConstVectorRef pa, scalar e) { return pa[0] + e; });
    // parents of Z_t: [X_t, Z_{t-1}]
    b.equation({"Z", t},
               [](ConstVectorRef pa, scalar e) { return std::exp(-pa[0]) + pa[1] + e; });
    b.target_split(
        t, [](ConstVectorRef pt) { return pt[0]; },
        [](ConstVectorRef pnt) { return target_pnt_chain(pnt[0]); });
  }
  b.noise("X", noise_x).noise("Z", noise_z).noise("Y", noise_y);
  b.domain("X", -5.0, 5.0).domain("Z", -5.0, 20.0);
  return b.build();
}

// Shared Y equation of the multiv/ind systems. The lagged terms only exist
// for t > 0; at t = 0 they are dropped together with the lagged parent.
scalar bimodal_base(scalar x, scalar z) {
  return -2.0 * std::exp(-(x - 1.0) * (x - 1.0)) - std::exp(-(x + 1.0) * (x + 1.0)) -
         (z - 1.0) * (z - 1.0) - z * z;
}

ExperimentSpec make_stat() {
  ExperimentSpec e;
  e.name = "stat";
  e.description = "stationary chain X->Z->Y with unit-variance noise";
  e.scm = chain_scm(3, {0, 1}, {0, 1}, {0, 1});
  e.obs_samples = std::vector<int>(4, 10);
  return e;
}

ExperimentSpec make_noisy() {
  ExperimentSpec e;
  e.name = "noisy";
  e.description = "chain with noisy manipulative variables (mean 2, variance 4)";
  e.scm = chain_scm(3, {2, 4}, {2, 4}, {0, 1});
  e.obs_samples = std::vector<int>(4, 10);
  return e;
}

ExperimentSpec make_miss() {
  ExperimentSpec e;
  e.name = "miss";
  e.description = "chain over seven slices; observational data only for the first three";
  e.scm = chain_scm(6, {0, 1}, {0, 1}, {0, 1});
  e.obs_samples = {10, 10, 10, 0, 0, 0, 0};
  return e;
}

ExperimentSpec make_multiv() {
  const int T = 3;
  TimeDag g = TimeDag::Builder(T)
                  .variable("W", Role::Manipulative)
                  .variable("X", Role::Manipulative)
                  .variable("Y", Role::Target)
                  .variable("Z", Role::Manipulative)
                  .within("W", "Z")
                  .within("X", "Y")
                  .within("Z", "Y")
                  .across("X", "X")
                  .across("Z", "Z")
                  .across("Y", "Y")
                  .build();
  Scm::Builder b(std::move(g));
  for (int t = 0; t <= T; ++t)
    b.equation({"W", t}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"X", 0}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"Z", 0}, [](ConstVectorRef pa, scalar e) { return std::sin(pa[0]) + e; });
  // parents of Y_0: [X_0, Z_0]
  b.equation({"Y", 0},
             [](ConstVectorRef pa, scalar e) { return bimodal_base(pa[0], pa[1]) + e; });
  for (int t = 1; t <= T; ++t) {
    b.equation({"X", t}, [](ConstVectorRef pa, scalar e) { return -pa[0] + e; });
    // parents of Z_t: [W_t, Z_{t-1}]
    b.equation({"Z", t},
               [](ConstVectorRef pa, scalar e) { return std::sin(pa[0]) - pa[1] + e; });
    // parents of Y_t: [X_t, Z_t, Y_{t-1}]
    b.equation({"Y", t}, [](ConstVectorRef pa, scalar e) {
      return bimodal_base(pa[0], pa[1]) + std::cos(pa[1] * pa[2]) - pa[2] + e;
    });
  }
  b.noise("W", {0, 1}).noise("X", {0, 1}).noise("Z", {0, 1}).noise("Y", {0, 1});
  b.domain("X", -5.0, 5.0).domain("Z", -5.0, 20.0).domain("W", -3.0, 3.0);

  ExperimentSpec e;
  e.name = "multiv";
  e.description = "instrument W into Z with a bimodal target over (X, Z)";
  e.scm = b.build();
  e.obs_samples = std::vector<int>(T + 1, 500);
  return e;
}

ExperimentSpec make_ind() {
  const int T = 3;
  TimeDag g = TimeDag::Builder(T)
                  .variable("X", Role::Manipulative)
                  .variable("Y", Role::Target)
                  .variable("Z", Role::Manipulative)
                  .within("X", "Y")
                  .within("Z", "Y")
                  .across("X", "X")
                  .across("Z", "Z")
                  .across("Y", "Y")
                  .build();
  Scm::Builder b(std::move(g));
  b.equation({"X", 0}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"Z", 0}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"Y", 0},
             [](ConstVectorRef pa, scalar e) { return bimodal_base(pa[0], pa[1]) + e; });
  for (int t = 1; t <= T; ++t) {
    b.equation({"X", t}, [](ConstVectorRef pa, scalar e) { return -pa[0] + e; });
    b.equation({"Z", t}, [](ConstVectorRef pa, scalar e) { return -pa[0] + e; });
    // parents of Y_t: [X_t, Z_t, Y_{t-1}]
    b.equation({"Y", t}, [](ConstVectorRef pa, scalar e) {
      return bimodal_base(pa[0], pa[1]) + std::cos(pa[1] * pa[2]) - pa[2] + e;
    });
  }
  b.noise("X", {0, 1}).noise("Z", {0, 1}).noise("Y", {0, 1});
  b.domain("X", -5.0, 5.0).domain("Z", -5.0, 20.0);

  ExperimentSpec e;
  e.name = "ind";
  e.description = "independent manipulative variables, both direct parents of Y";
  e.scm = b.build();
  e.obs_samples = std::vector<int>(T + 1, 10);
  return e;
}

ExperimentSpec make_nonstat() {
  // Three slices with distinct mechanisms; the rolled graph changes across
  // slices through extra cross-slice edges (X_0 -> Z_1, Z_1 -> Y_2).
  const int T = 2;
  TimeDag g = TimeDag::Builder(T)
                  .variable("X", Role::Manipulative)
                  .variable("Y", Role::Target)
                  .variable("Z", Role::Manipulative)
                  .within("X", "Z")
                  .within("Z", "Y")
                  .across("X", "X")
                  .across("Z", "Z")
                  .across("Y", "Y")
                  .across_at("X", "Z", 1)
                  .across_at("Z", "Y", 2)
                  .build();
  Scm::Builder b(std::move(g));
  b.equation({"X", 0}, [](ConstVectorRef, scalar e) { return e; });
  b.equation({"Z", 0}, [](ConstVectorRef pa, scalar e) { return pa[0] + e; });
  b.target_split(0, nullptr, [](ConstVectorRef pnt) {
    const scalar z = pnt[0];
    return std::sqrt(std::abs(36.0 - (z - 1.0) * (z - 1.0))) + 1.0;
  });

  b.equation({"X", 1}, [](ConstVectorRef pa, scalar e) { return pa[0] + e; });
  // parents of Z_1: [X_1, X_0, Z_0]
  b.equation({"Z", 1},
             [](ConstVectorRef pa, scalar e) { return -pa[0] / pa[1] + pa[2] + e; });
  b.target_split(
      1, [](ConstVectorRef pt) { return -pt[0]; },
      [](ConstVectorRef pnt) { return pnt[0] * std::cos(M_PI * pnt[0]); });

  b.equation({"X", 2}, [](ConstVectorRef pa, scalar e) { return pa[0] + e; });
  // parents of Z_2: [X_2, Z_1]
  b.equation({"Z", 2}, [](ConstVectorRef pa, scalar e) { return pa[0] + pa[1] + e; });
  // parents of Y_2: [Z_2, Y_1, Z_1] -> pnt over [Z_2, Z_1]
  b.target_split(
      2, [](ConstVectorRef pt) { return -pt[0]; },
      [](ConstVectorRef pnt) { return pnt[0] - pnt[1]; });

  b.noise("X", {0, 1}).noise("Z", {0, 1}).noise("Y", {0, 1});
  b.domain("X", -5.0, 5.0).domain("Z", -5.0, 20.0);

  ExperimentSpec e;
  e.name = "nonstat";
  e.description = "mechanism and cross-slice structure change at every slice";
  e.scm = b.build();
  e.obs_samples = std::vector<int>(T + 1, 10);
  e.stationary = false;
  return e;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"stat", "noisy", "miss", "multiv", "ind", "nonstat"};
}

ExperimentSpec builtin(const std::string& name) {
  if (name == "stat") return make_stat();
  if (name == "noisy") return make_noisy();
  if (name == "miss") return make_miss();
  if (name == "multiv") return make_multiv();
  if (name == "ind") return make_ind();
  if (name == "nonstat") return make_nonstat();
  std::string valid;
  for (const auto& n : builtin_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown experiment '" + name + "' (valid: " + valid + ")");
}

}  // namespace dcbo
