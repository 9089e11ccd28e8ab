#pragma once

#include "dcbo/scm.hpp"
#include "dcbo/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dcbo {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// v * exp(-||a - b||^2 / (2 l^2)).
struct RbfKernel {
  scalar lengthscale = 1.0;
  scalar variance = 1.0;
};

/// k1 on dims [0, split) + k2 on dims [split, d); the additive target kernel.
struct AdditivePairKernel {
  Index split = 1;
  RbfKernel first;
  RbfKernel second;
};

/// RBF over the leading dims times RBF over the trailing time coordinate.
struct ProductTimeKernel {
  RbfKernel space;
  scalar time_lengthscale = 1.0;
};

using Kernel = std::variant<RbfKernel, AdditivePairKernel, ProductTimeKernel>;

scalar kernel_eval(const Kernel& k, ConstVectorRef a, ConstVectorRef b);
/// Gram matrix between row sets A and B.
Matrix kernel_matrix(const Kernel& k, const Matrix& A, const Matrix& B);

using MeanFn = std::function<scalar(ConstVectorRef)>;
using DeviationFn = std::function<scalar(ConstVectorRef)>;

/// Prior of an exact GP: mean function (null = zero), covariance
/// kernel(x, x') + deviation(x) * deviation(x') (deviation null = absent),
/// and the observation noise variance.
struct GpPrior {
  Kernel kernel = RbfKernel{};
  scalar noise_variance = 1.0;
  MeanFn mean;
  DeviationFn deviation;
};

// ---------------------------------------------------------------------------
// Exact GP regression
// ---------------------------------------------------------------------------

/// Immutable exact-GP state. Construction factorizes the Gram matrix with an
/// escalating jitter (1e-8 .. 1e-2 relative to the mean diagonal) and throws
/// when the system stays non-positive-definite.
class GpModel {
 public:
  explicit GpModel(GpPrior prior);
  GpModel(GpPrior prior, Matrix inputs, Vector targets);

  Index size() const { return y_.size(); }
  const GpPrior& prior() const { return prior_; }
  const Matrix& inputs() const { return X_; }
  const Vector& targets() const { return y_; }

  /// Exact posterior mean and variance at x (variance clamped at 0).
  std::pair<scalar, scalar> predict(ConstVectorRef x) const;
  scalar predict_mean(ConstVectorRef x) const;

  /// Posterior covariance matrix on the rows of A.
  Matrix posterior_cov(const Matrix& A) const;

  scalar log_marginal_likelihood() const;

  scalar prior_mean(ConstVectorRef x) const;
  scalar cov(ConstVectorRef a, ConstVectorRef b) const;

 private:
  Vector cross_cov(ConstVectorRef x) const;  // k(x, X) incl. deviation term

  GpPrior prior_;
  Matrix X_;
  Vector y_;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  scalar log_det_half_ = 0.0;
};

std::pair<scalar, scalar> posterior_predict(const GpModel& g, ConstVectorRef x);

/// Cholesky of S + jitter escalation; throws after the ceiling is reached.
/// Returns the factorization and the jitter that succeeded.
std::pair<Eigen::LLT<Matrix>, scalar> robust_llt(const Matrix& S, const std::string& context);

// ---------------------------------------------------------------------------
// Marginal-likelihood grid fits
// ---------------------------------------------------------------------------

/// The fixed hyperparameter grid: 7 log steps of lengthscale in [0.1, 10]
/// and signal variance in {0.1, 1, 10}. Fits with `noise_variance <= 0`
/// additionally select the likelihood noise from its own grid.
const std::vector<scalar>& lengthscale_grid();
const std::vector<scalar>& signal_variance_grid();
const std::vector<scalar>& noise_variance_grid();

/// Sentinel for "select the noise variance by marginal likelihood".
inline constexpr scalar kAutoNoise = 0.0;

/// RBF GP with hyperparameters chosen by exhaustive grid search on the log
/// marginal likelihood (deterministic, ties resolved by grid order).
GpModel fit_rbf_ml(Matrix inputs, Vector targets, scalar noise_variance, MeanFn mean = {},
                   DeviationFn deviation = {});

/// As above for the space factor of a product-with-time kernel.
GpModel fit_product_time_ml(Matrix inputs, Vector targets, scalar noise_variance,
                            scalar time_lengthscale);

// ---------------------------------------------------------------------------
// SCM node fits
// ---------------------------------------------------------------------------

/// Parent of a node as (variable, lag) relative to the node's slice.
using ParentPattern = std::vector<std::pair<std::string, int>>;

/// Training rows for `variable` collected from the listed slices: inputs are
/// the pattern values, the output is the variable at the slice. Slices whose
/// data (or whose lagged slice's data) are unavailable contribute nothing.
std::pair<Matrix, Vector> node_training_rows(const ObservationalDataset& data,
                                             const std::string& variable,
                                             const ParentPattern& pattern,
                                             const std::vector<int>& slices);

/// Zero-mean RBF fit of a node function on pooled rows; deterministic row
/// thinning caps the training size. Errors when no rows are available.
GpModel fit_node_function(const ObservationalDataset& data, const std::string& variable,
                          const ParentPattern& pattern, const std::vector<int>& slices,
                          scalar noise_variance, Index max_rows = 250);

// ---------------------------------------------------------------------------
// Additive target decomposition
// ---------------------------------------------------------------------------

/// The two additive pieces of the target function. Either backed by one GP
/// with an additive-pair kernel (components extracted by the standard
/// decomposition, sharing one solve) or by exact functions with zero spread.
class TargetComponents {
 public:
  /// Joint additive fit; `pt_inputs` may have zero columns (t = 0).
  static TargetComponents fit(Matrix pt_inputs, Matrix pnt_inputs, Vector targets,
                              scalar noise_variance, Index max_rows = 250);
  /// Exact components (draws have zero spread). `pt` may be null;
  /// `residual_variance` is the target's own noise when sampled as an input.
  static TargetComponents exact(std::function<scalar(ConstVectorRef)> pt,
                                std::function<scalar(ConstVectorRef)> pnt,
                                scalar residual_variance = 0.0);

  /// Structure-driven estimate for stationary systems: the first slice has
  /// no earlier-target parents, so its rows identify the pnt component on
  /// its own; the pt component is then fitted on the pooled later-slice
  /// residuals. Avoids the concurvity of the joint fit when the pooled
  /// inputs are strongly correlated. Falls back to `fit` when the slice
  /// patterns do not line up.
  static TargetComponents two_stage(const ObservationalDataset& data, const TimeDag& g,
                                    const std::vector<int>& pooled_slices,
                                    scalar noise_variance, Index max_rows = 250);

  bool has_pt() const { return has_pt_; }
  bool is_exact() const { return exact_; }
  Index pnt_dims() const { return pnt_dims_; }

  scalar pt_mean(ConstVectorRef v) const;
  scalar pnt_mean(ConstVectorRef v) const;
  scalar pt_variance(ConstVectorRef v) const;
  /// Posterior covariance of the pnt component on the rows of G.
  Matrix pnt_cov(const Matrix& G) const;

  /// Residual spread of the joint fit around the training targets.
  scalar residual_variance() const { return residual_variance_; }

  /// Training input ranges of the pnt component (empty for exact backing).
  std::vector<std::pair<scalar, scalar>> pnt_input_ranges() const;

  /// Selected hyperparameters and the constant attributed to pnt (GP backing).
  const RbfKernel& pt_kernel() const { return k_pt_; }
  const RbfKernel& pnt_kernel() const { return k_pnt_; }
  scalar mean_constant() const { return mean_const_; }

 private:
  TargetComponents() = default;

  bool exact_ = false;
  bool has_pt_ = false;
  Index pnt_dims_ = 0;
  std::function<scalar(ConstVectorRef)> exact_pt_;
  std::function<scalar(ConstVectorRef)> exact_pnt_;

  // Joint GP backing: one factorization shared by both components.
  Matrix X_pt_;
  Matrix X_pnt_;
  RbfKernel k_pt_;
  RbfKernel k_pnt_;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  scalar mean_const_ = 0.0;  // attributed to the pnt component
  scalar residual_variance_ = 0.0;

  // Two-stage backing: independent GPs per component.
  std::shared_ptr<const GpModel> pnt_gp_;
  std::shared_ptr<const GpModel> pt_gp_;
  scalar pnt_const_ = 0.0;
  scalar pt_const_ = 0.0;
};

/// Rows for the additive target fit at the listed slices: pt inputs from the
/// earlier-target parents, pnt inputs from the remaining parents.
TargetComponents fit_target_additive(const ObservationalDataset& data, const TimeDag& g,
                                     const std::vector<int>& slices, scalar noise_variance,
                                     Index max_rows = 250);

}  // namespace dcbo
