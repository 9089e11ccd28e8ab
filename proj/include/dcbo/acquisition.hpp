#pragma once

#include "dcbo/scm.hpp"
#include "dcbo/types.hpp"

#include <functional>
#include <vector>

namespace dcbo {

/// Closed-form expected improvement below the incumbent (minimization):
/// E[max(y_best - Y, 0)] for Y ~ N(mean, variance). At zero variance this is
/// max(y_best - mean, 0). Errors on negative variance.
scalar expected_improvement(scalar mean, scalar variance, scalar y_best);

/// Positive evaluation cost of intervening on a set at given levels.
using CostFunction = std::function<scalar(const InterventionSet&, ConstVectorRef)>;
CostFunction unit_cost();
/// Sum of per-variable costs from a table (missing entries cost 1).
CostFunction table_cost(std::map<std::string, scalar> per_variable);

/// Number of grid points along each dimension for a set of given arity:
/// 100 for 1-D, 31^2 for 2-D, 11^3 for 3-D and beyond.
struct GridSizes {
  Index one_d = 100;
  Index two_d = 31;
  Index three_d = 11;
  Index per_dim(std::size_t dims) const;
};

/// Full-factorial candidate grid spanning the domain box of the set, one row
/// per candidate, columns in set order.
Matrix make_candidate_grid(const InterventionSet& s, const Domain& domain, const GridSizes& sizes);

/// Per-point surrogate predictions on the grid.
using PosteriorOnGrid = std::function<std::pair<scalar, scalar>(Index row)>;

/// Maximizes EI(x) / cost(s, x) over the grid; ties keep the lowest row.
/// Returns (best row, best value).
std::pair<Index, scalar> optimize_set(const PosteriorOnGrid& posterior, const Matrix& grid,
                                      scalar y_best, const InterventionSet& s,
                                      const CostFunction& cost);

/// Index of the maximal per-set acquisition value; ties keep the earliest
/// (canonical) set. Errors on empty input.
std::size_t select_set(const std::vector<scalar>& alphas);

}  // namespace dcbo
