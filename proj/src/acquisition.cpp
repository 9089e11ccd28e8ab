#include "dcbo/acquisition.hpp"

#include <cmath>
#include <stdexcept>

namespace dcbo {

namespace {

scalar normal_pdf(scalar z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
scalar normal_cdf(scalar z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

scalar expected_improvement(scalar mean, scalar variance, scalar y_best) {
  if (variance < 0.0) throw std::invalid_argument("negative predictive variance");
  const scalar delta = y_best - mean;
  if (variance == 0.0) return std::max(delta, scalar{0});
  const scalar sd = std::sqrt(variance);
  const scalar z = delta / sd;
  return delta * normal_cdf(z) + sd * normal_pdf(z);
}

CostFunction unit_cost() {
  return [](const InterventionSet&, ConstVectorRef) { return 1.0; };
}

CostFunction table_cost(std::map<std::string, scalar> per_variable) {
  for (const auto& [var, c] : per_variable)
    if (c <= 0.0) throw std::invalid_argument("cost for " + var + " must be positive");
  return [table = std::move(per_variable)](const InterventionSet& s, ConstVectorRef) {
    scalar total = 0.0;
    for (const auto& var : s) {
      auto it = table.find(var);
      total += it == table.end() ? 1.0 : it->second;
    }
    return total;
  };
}

Index GridSizes::per_dim(std::size_t dims) const {
  if (dims <= 1) return one_d;
  if (dims == 2) return two_d;
  return three_d;
}

Matrix make_candidate_grid(const InterventionSet& s, const Domain& domain,
                           const GridSizes& sizes) {
  if (s.empty()) throw std::invalid_argument("empty intervention set has no grid");
  const Index per_dim = sizes.per_dim(s.size());
  const Index d = static_cast<Index>(s.size());
  std::vector<Vector> axes;
  for (const auto& var : s) {
    auto [lo, hi] = domain.bounds(var);
    axes.push_back(linspace(lo, hi, per_dim));
  }
  Index total = 1;
  for (Index j = 0; j < d; ++j) total *= per_dim;
  Matrix grid(total, d);
  for (Index p = 0; p < total; ++p) {
    Index rem = p;
    // First column varies fastest.
    for (Index j = 0; j < d; ++j) {
      grid(p, j) = axes[static_cast<std::size_t>(j)][rem % per_dim];
      rem /= per_dim;
    }
  }
  return grid;
}

std::pair<Index, scalar> optimize_set(const PosteriorOnGrid& posterior, const Matrix& grid,
                                      scalar y_best, const InterventionSet& s,
                                      const CostFunction& cost) {
  if (grid.rows() == 0) throw std::invalid_argument("empty candidate grid");
  Index best_row = 0;
  scalar best_val = -std::numeric_limits<scalar>::infinity();
  for (Index r = 0; r < grid.rows(); ++r) {
    const auto [mean, var] = posterior(r);
    const scalar c = cost(s, grid.row(r));
    if (c <= 0.0) throw std::invalid_argument("intervention cost must be positive");
    const scalar val = expected_improvement(mean, var, y_best) / c;
    if (val > best_val) {
      best_val = val;
      best_row = r;
    }
  }
  return {best_row, best_val};
}

std::size_t select_set(const std::vector<scalar>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("no acquisition values to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (alphas[i] > alphas[best]) best = i;
  return best;
}

}  // namespace dcbo
