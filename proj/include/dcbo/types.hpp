#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cstdint>

namespace dcbo {

using scalar = double;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using MatrixRef = Eigen::Ref<Matrix>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

using Index = Eigen::Index;
using seed_t = std::uint64_t;

/// n evenly spaced points over [lo, hi]; a single point sits at the midpoint.
inline Vector linspace(scalar lo, scalar hi, Index n) {
  if (n == 1) {
    Vector v(1);
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  return Vector::LinSpaced(n, lo, hi);
}

}  // namespace dcbo
