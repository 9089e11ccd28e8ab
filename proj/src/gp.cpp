#include "dcbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcbo {

namespace {

scalar rbf(const RbfKernel& k, ConstVectorRef a, ConstVectorRef b) {
  const scalar d2 = (a - b).squaredNorm();
  return k.variance * std::exp(-d2 / (2.0 * k.lengthscale * k.lengthscale));
}

}  // namespace

scalar kernel_eval(const Kernel& k, ConstVectorRef a, ConstVectorRef b) {
  return std::visit(
      [&](const auto& kk) -> scalar {
        using T = std::decay_t<decltype(kk)>;
        if constexpr (std::is_same_v<T, RbfKernel>) {
          return rbf(kk, a, b);
        } else if constexpr (std::is_same_v<T, AdditivePairKernel>) {
          return rbf(kk.first, a.head(kk.split), b.head(kk.split)) +
                 rbf(kk.second, a.tail(a.size() - kk.split), b.tail(b.size() - kk.split));
        } else {
          const Index d = a.size() - 1;
          const RbfKernel time{kk.time_lengthscale, 1.0};
          return rbf(kk.space, a.head(d), b.head(d)) * rbf(time, a.tail(1), b.tail(1));
        }
      },
      k);
}

Matrix kernel_matrix(const Kernel& k, const Matrix& A, const Matrix& B) {
  Matrix out(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < B.rows(); ++j) out(i, j) = kernel_eval(k, A.row(i), B.row(j));
  return out;
}

std::pair<Eigen::LLT<Matrix>, scalar> robust_llt(const Matrix& S, const std::string& context) {
  const Index n = S.rows();
  const scalar scale = std::max(S.trace() / static_cast<scalar>(n), scalar{1e-12});
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() == Eigen::Success) return {llt, 0.0};
  for (scalar jitter = 1e-8 * scale; jitter <= 1e-2 * scale; jitter *= 10.0) {
    llt.compute(S + jitter * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) return {llt, jitter};
  }
  throw std::runtime_error(context + ": Gram matrix not positive definite after jitter up to " +
                           std::to_string(1e-2 * scale) + " (n = " + std::to_string(n) + ")");
}

GpModel::GpModel(GpPrior prior) : prior_(std::move(prior)), X_(0, 0), y_(0) {}

GpModel::GpModel(GpPrior prior, Matrix inputs, Vector targets)
    : prior_(std::move(prior)), X_(std::move(inputs)), y_(std::move(targets)) {
  if (X_.rows() != y_.size())
    throw std::invalid_argument("training inputs and outputs differ in count");
  if (y_.size() == 0) return;

  const Index n = y_.size();
  Matrix S(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      S(i, j) = cov(X_.row(i), X_.row(j));
      S(j, i) = S(i, j);
    }
  S.diagonal().array() += prior_.noise_variance;

  auto [llt, jitter] = robust_llt(S, "gp fit");
  chol_ = std::move(llt);

  Vector residual = y_;
  if (prior_.mean)
    for (Index i = 0; i < n; ++i) residual[i] -= prior_.mean(X_.row(i));
  alpha_ = chol_.solve(residual);

  log_det_half_ = 0.0;
  for (Index i = 0; i < n; ++i) log_det_half_ += std::log(chol_.matrixLLT()(i, i));
}

scalar GpModel::prior_mean(ConstVectorRef x) const { return prior_.mean ? prior_.mean(x) : 0.0; }

scalar GpModel::cov(ConstVectorRef a, ConstVectorRef b) const {
  scalar v = kernel_eval(prior_.kernel, a, b);
  if (prior_.deviation) v += prior_.deviation(a) * prior_.deviation(b);
  return v;
}

Vector GpModel::cross_cov(ConstVectorRef x) const {
  Vector kx(X_.rows());
  for (Index i = 0; i < X_.rows(); ++i) kx[i] = cov(x, X_.row(i));
  return kx;
}

std::pair<scalar, scalar> GpModel::predict(ConstVectorRef x) const {
  if (y_.size() == 0) return {prior_mean(x), cov(x, x)};
  const Vector kx = cross_cov(x);
  const scalar mean = prior_mean(x) + kx.dot(alpha_);
  const Vector w = chol_.solve(kx);
  const scalar var = cov(x, x) - kx.dot(w);
  return {mean, std::max(var, scalar{0})};
}

scalar GpModel::predict_mean(ConstVectorRef x) const {
  if (y_.size() == 0) return prior_mean(x);
  return prior_mean(x) + cross_cov(x).dot(alpha_);
}

Matrix GpModel::posterior_cov(const Matrix& A) const {
  Matrix Kaa(A.rows(), A.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = i; j < A.rows(); ++j) {
      Kaa(i, j) = cov(A.row(i), A.row(j));
      Kaa(j, i) = Kaa(i, j);
    }
  if (y_.size() == 0) return Kaa;
  Matrix Kax(A.rows(), X_.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < X_.rows(); ++j) Kax(i, j) = cov(A.row(i), X_.row(j));
  return Kaa - Kax * chol_.solve(Kax.transpose());
}

scalar GpModel::log_marginal_likelihood() const {
  const Index n = y_.size();
  if (n == 0) return 0.0;
  Vector residual = y_;
  if (prior_.mean)
    for (Index i = 0; i < n; ++i) residual[i] -= prior_.mean(X_.row(i));
  return -0.5 * residual.dot(alpha_) - log_det_half_ -
         0.5 * static_cast<scalar>(n) * std::log(2.0 * M_PI);
}

std::pair<scalar, scalar> posterior_predict(const GpModel& g, ConstVectorRef x) {
  return g.predict(x);
}

const std::vector<scalar>& lengthscale_grid() {
  static const std::vector<scalar> grid = [] {
    std::vector<scalar> g(7);
    for (int i = 0; i < 7; ++i)
      g[i] = std::exp(std::log(0.1) + (std::log(10.0) - std::log(0.1)) * i / 6.0);
    return g;
  }();
  return grid;
}

const std::vector<scalar>& signal_variance_grid() {
  static const std::vector<scalar> grid = {0.1, 1.0, 10.0};
  return grid;
}

const std::vector<scalar>& noise_variance_grid() {
  static const std::vector<scalar> grid = {1e-2, 1e-1, 1.0, 10.0};
  return grid;
}

namespace {

std::vector<scalar> noise_candidates(scalar noise_variance) {
  if (noise_variance > 0.0) return {noise_variance};
  return noise_variance_grid();
}

}  // namespace

GpModel fit_rbf_ml(Matrix inputs, Vector targets, scalar noise_variance, MeanFn mean,
                   DeviationFn deviation) {
  scalar best = -std::numeric_limits<scalar>::infinity();
  std::optional<GpModel> best_model;
  for (scalar l : lengthscale_grid()) {
    for (scalar v : signal_variance_grid()) {
      for (scalar nv : noise_candidates(noise_variance)) {
        GpPrior prior{RbfKernel{l, v}, nv, mean, deviation};
        GpModel model(std::move(prior), inputs, targets);
        const scalar ml = model.log_marginal_likelihood();
        if (ml > best) {
          best = ml;
          best_model.emplace(std::move(model));
        }
      }
    }
  }
  return std::move(*best_model);
}

GpModel fit_product_time_ml(Matrix inputs, Vector targets, scalar noise_variance,
                            scalar time_lengthscale) {
  scalar best = -std::numeric_limits<scalar>::infinity();
  std::optional<GpModel> best_model;
  for (scalar l : lengthscale_grid()) {
    for (scalar v : signal_variance_grid()) {
      GpPrior prior{ProductTimeKernel{RbfKernel{l, v}, time_lengthscale}, noise_variance, {}, {}};
      GpModel model(std::move(prior), inputs, targets);
      const scalar ml = model.log_marginal_likelihood();
      if (ml > best) {
        best = ml;
        best_model.emplace(std::move(model));
      }
    }
  }
  return std::move(*best_model);
}

namespace {

/// Deterministic thinning: evenly strided row subset when over the cap.
std::pair<Matrix, Vector> thin_rows(Matrix X, Vector y, Index max_rows) {
  const Index n = y.size();
  if (n <= max_rows) return {std::move(X), std::move(y)};
  Matrix Xs(max_rows, X.cols());
  Vector ys(max_rows);
  for (Index i = 0; i < max_rows; ++i) {
    const Index src = (i * n) / max_rows;
    Xs.row(i) = X.row(src);
    ys[i] = y[src];
  }
  return {Xs, ys};
}

}  // namespace

std::pair<Matrix, Vector> node_training_rows(const ObservationalDataset& data,
                                             const std::string& variable,
                                             const ParentPattern& pattern,
                                             const std::vector<int>& slices) {
  const Index d = static_cast<Index>(pattern.size());
  std::vector<Vector> rows;
  std::vector<scalar> outs;
  for (int t : slices) {
    if (!data.available(t)) continue;
    bool lags_ok = true;
    for (const auto& [var, lag] : pattern)
      if (!data.available(t - lag)) lags_ok = false;
    if (!lags_ok) continue;
    for (Index r = 0; r < data.rows(t); ++r) {
      Vector in(d);
      bool row_ok = true;
      for (Index j = 0; j < d; ++j) {
        const auto& [var, lag] = pattern[static_cast<std::size_t>(j)];
        if (r >= data.rows(t - lag)) {
          row_ok = false;
          break;
        }
        in[j] = data.value(t - lag, r, var);
      }
      if (!row_ok) continue;
      rows.push_back(std::move(in));
      outs.push_back(data.value(t, r, variable));
    }
  }
  Matrix X(static_cast<Index>(rows.size()), d);
  Vector y(static_cast<Index>(outs.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(static_cast<Index>(i)) = rows[i];
    y[static_cast<Index>(i)] = outs[i];
  }
  return {X, y};
}

GpModel fit_node_function(const ObservationalDataset& data, const std::string& variable,
                          const ParentPattern& pattern, const std::vector<int>& slices,
                          scalar noise_variance, Index max_rows) {
  auto [X, y] = node_training_rows(data, variable, pattern, slices);
  if (y.size() == 0)
    throw std::runtime_error("no observational rows to fit " + variable +
                             " on the requested slices");
  std::tie(X, y) = thin_rows(std::move(X), std::move(y), max_rows);
  return fit_rbf_ml(std::move(X), std::move(y), noise_variance);
}

// ---------------------------------------------------------------------------
// TargetComponents
// ---------------------------------------------------------------------------

TargetComponents TargetComponents::exact(std::function<scalar(ConstVectorRef)> pt,
                                         std::function<scalar(ConstVectorRef)> pnt,
                                         scalar residual_variance) {
  if (!pnt) throw std::invalid_argument("exact components need a pnt function");
  TargetComponents c;
  c.exact_ = true;
  c.has_pt_ = static_cast<bool>(pt);
  c.exact_pt_ = std::move(pt);
  c.exact_pnt_ = std::move(pnt);
  c.pnt_dims_ = -1;  // unconstrained
  c.residual_variance_ = residual_variance;
  return c;
}

TargetComponents TargetComponents::fit(Matrix pt_inputs, Matrix pnt_inputs, Vector targets,
                                       scalar noise_variance, Index max_rows) {
  const Index n = targets.size();
  if (pnt_inputs.rows() != n || (pt_inputs.cols() > 0 && pt_inputs.rows() != n))
    throw std::invalid_argument("component inputs and targets differ in count");
  if (n == 0) throw std::runtime_error("no rows for the additive target fit");

  const bool has_pt = pt_inputs.cols() > 0;
  const Index d1 = pt_inputs.cols();
  const Index d2 = pnt_inputs.cols();

  Matrix joint(n, d1 + d2);
  if (has_pt) joint.leftCols(d1) = pt_inputs;
  joint.rightCols(d2) = pnt_inputs;
  Vector y = std::move(targets);
  std::tie(joint, y) = thin_rows(std::move(joint), std::move(y), max_rows);
  const Index m = y.size();

  const scalar mean_const = y.mean();
  const Vector centered = y.array() - mean_const;

  // Exhaustive grid over component lengthscales with one shared signal
  // variance; best log marginal likelihood wins, ties keep grid order.
  scalar best = -std::numeric_limits<scalar>::infinity();
  RbfKernel best1, best2;
  scalar best_noise = noise_variance > 0.0 ? noise_variance : noise_variance_grid().front();
  const auto& ls = lengthscale_grid();
  const auto& vs = signal_variance_grid();
  std::vector<scalar> l1s = has_pt ? ls : std::vector<scalar>{1.0};
  for (scalar l1 : l1s) {
    for (scalar l2 : ls) {
      for (scalar v : vs) {
        for (scalar nv : noise_candidates(noise_variance)) {
          const RbfKernel k1{l1, has_pt ? v : 0.0};
          const RbfKernel k2{l2, v};
          Matrix S(m, m);
          for (Index i = 0; i < m; ++i)
            for (Index j = i; j < m; ++j) {
              scalar val = rbf(k2, joint.row(i).tail(d2), joint.row(j).tail(d2));
              if (has_pt) val += rbf(k1, joint.row(i).head(d1), joint.row(j).head(d1));
              S(i, j) = val;
              S(j, i) = val;
            }
          S.diagonal().array() += nv;
          Eigen::LLT<Matrix> llt(S);
          if (llt.info() != Eigen::Success) continue;
          scalar log_det_half = 0.0;
          for (Index i = 0; i < m; ++i) log_det_half += std::log(llt.matrixLLT()(i, i));
          const Vector a = llt.solve(centered);
          const scalar ml = -0.5 * centered.dot(a) - log_det_half -
                            0.5 * static_cast<scalar>(m) * std::log(2.0 * M_PI);
          if (ml > best) {
            best = ml;
            best1 = k1;
            best2 = k2;
            best_noise = nv;
          }
        }
      }
    }
  }
  if (!std::isfinite(best))
    throw std::runtime_error("additive target fit: no hyperparameter setting factorizes");

  TargetComponents c;
  c.has_pt_ = has_pt;
  c.pnt_dims_ = d2;
  c.k_pt_ = best1;
  c.k_pnt_ = best2;
  c.X_pt_ = joint.leftCols(d1);
  c.X_pnt_ = joint.rightCols(d2);
  c.mean_const_ = mean_const;

  Matrix S(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) {
      scalar val = rbf(best2, c.X_pnt_.row(i), c.X_pnt_.row(j));
      if (has_pt) val += rbf(best1, c.X_pt_.row(i), c.X_pt_.row(j));
      S(i, j) = val;
      S(j, i) = val;
    }
  S.diagonal().array() += best_noise;
  auto [llt, jitter] = robust_llt(S, "additive target fit");
  (void)jitter;
  c.chol_ = std::move(llt);
  c.alpha_ = c.chol_.solve(centered);

  scalar ss = 0.0;
  for (Index i = 0; i < m; ++i) {
    scalar fit_i = mean_const;
    for (Index j = 0; j < m; ++j) {
      scalar val = rbf(best2, c.X_pnt_.row(i), c.X_pnt_.row(j));
      if (has_pt) val += rbf(best1, c.X_pt_.row(i), c.X_pt_.row(j));
      fit_i += val * c.alpha_[j];
    }
    const scalar r = y[i] - fit_i;
    ss += r * r;
  }
  c.residual_variance_ = std::max(ss / static_cast<scalar>(m), best_noise);
  return c;
}

TargetComponents TargetComponents::two_stage(const ObservationalDataset& data, const TimeDag& g,
                                             const std::vector<int>& pooled_slices,
                                             scalar noise_variance, Index max_rows) {
  const std::string target = g.target_variable();
  auto patterns_of = [&](int t) {
    auto [pt_nodes, pnt_nodes] = classify_parents(g, t);
    ParentPattern pt_pat, pnt_pat;
    for (const NodeId& p : parent_signature(g, g.target_node(t))) {
      if (pt_nodes.count(p))
        pt_pat.push_back({p.variable, t - p.time});
      else
        pnt_pat.push_back({p.variable, t - p.time});
    }
    return std::pair{pt_pat, pnt_pat};
  };

  const auto [pt0, pnt0] = patterns_of(0);
  const auto [pt_pat, pnt_pat] = patterns_of(pooled_slices.front());
  const bool aligned = pt0.empty() && !pt_pat.empty() && pnt0 == pnt_pat && data.available(0);
  if (!aligned) return fit_target_additive(data, g, pooled_slices, noise_variance, max_rows);

  // Stage 1: the pnt component from the first slice, where it stands alone.
  auto [X0, y0] = node_training_rows(data, target, pnt0, {0});
  if (y0.size() == 0) return fit_target_additive(data, g, pooled_slices, noise_variance, max_rows);
  const scalar pnt_const = y0.mean();
  auto pnt_gp = std::make_shared<const GpModel>(
      fit_rbf_ml(X0, Vector(y0.array() - pnt_const), noise_variance));

  TargetComponents c;
  c.has_pt_ = true;
  c.pnt_dims_ = static_cast<Index>(pnt0.size());
  c.pnt_gp_ = pnt_gp;
  c.pnt_const_ = pnt_const;

  // Stage 2: the pt component on pooled later-slice residuals.
  ParentPattern full = pt_pat;
  full.insert(full.end(), pnt_pat.begin(), pnt_pat.end());
  auto [X, y] = node_training_rows(data, target, full, pooled_slices);
  if (y.size() == 0) throw std::runtime_error("no pooled rows for the target residual fit");
  std::tie(X, y) = thin_rows(std::move(X), std::move(y), max_rows);
  const Index d1 = static_cast<Index>(pt_pat.size());
  Vector resid(y.size());
  for (Index i = 0; i < y.size(); ++i)
    resid[i] = y[i] - (pnt_const + pnt_gp->predict_mean(X.row(i).tail(X.cols() - d1)));
  const scalar pt_const = resid.mean();
  auto pt_gp = std::make_shared<const GpModel>(
      fit_rbf_ml(X.leftCols(d1), Vector(resid.array() - pt_const), noise_variance));
  c.pt_gp_ = pt_gp;
  c.pt_const_ = pt_const;

  scalar ss = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const scalar fit_i = pt_const + pt_gp->predict_mean(X.row(i).head(d1)) + pnt_const +
                         pnt_gp->predict_mean(X.row(i).tail(X.cols() - d1));
    ss += (y[i] - fit_i) * (y[i] - fit_i);
  }
  c.residual_variance_ =
      std::max(ss / static_cast<scalar>(y.size()), pt_gp->prior().noise_variance);
  return c;
}

scalar TargetComponents::pt_mean(ConstVectorRef v) const {
  if (!has_pt_) return 0.0;
  if (exact_) return exact_pt_(v);
  if (pt_gp_) return pt_const_ + pt_gp_->predict_mean(v);
  scalar out = 0.0;
  for (Index i = 0; i < X_pt_.rows(); ++i) out += rbf(k_pt_, v, X_pt_.row(i)) * alpha_[i];
  return out;
}

scalar TargetComponents::pnt_mean(ConstVectorRef v) const {
  if (exact_) return exact_pnt_(v);
  if (pnt_gp_) return pnt_const_ + pnt_gp_->predict_mean(v);
  scalar out = mean_const_;
  for (Index i = 0; i < X_pnt_.rows(); ++i) out += rbf(k_pnt_, v, X_pnt_.row(i)) * alpha_[i];
  return out;
}

scalar TargetComponents::pt_variance(ConstVectorRef v) const {
  if (exact_ || !has_pt_) return 0.0;
  if (pt_gp_) return pt_gp_->predict(v).second;
  Vector kx(X_pt_.rows());
  for (Index i = 0; i < X_pt_.rows(); ++i) kx[i] = rbf(k_pt_, v, X_pt_.row(i));
  const scalar var = k_pt_.variance - kx.dot(chol_.solve(kx));
  return std::max(var, scalar{0});
}

Matrix TargetComponents::pnt_cov(const Matrix& G) const {
  if (exact_) return Matrix::Zero(G.rows(), G.rows());
  if (pnt_gp_) return pnt_gp_->posterior_cov(G);
  Matrix Kgg(G.rows(), G.rows());
  for (Index i = 0; i < G.rows(); ++i)
    for (Index j = i; j < G.rows(); ++j) {
      Kgg(i, j) = rbf(k_pnt_, G.row(i), G.row(j));
      Kgg(j, i) = Kgg(i, j);
    }
  Matrix Kgx(G.rows(), X_pnt_.rows());
  for (Index i = 0; i < G.rows(); ++i)
    for (Index j = 0; j < X_pnt_.rows(); ++j) Kgx(i, j) = rbf(k_pnt_, G.row(i), X_pnt_.row(j));
  return Kgg - Kgx * chol_.solve(Kgx.transpose());
}

std::vector<std::pair<scalar, scalar>> TargetComponents::pnt_input_ranges() const {
  std::vector<std::pair<scalar, scalar>> out;
  if (exact_) return out;
  const Matrix& X = pnt_gp_ ? pnt_gp_->inputs() : X_pnt_;
  for (Index j = 0; j < X.cols(); ++j)
    out.push_back({X.col(j).minCoeff(), X.col(j).maxCoeff()});
  return out;
}

TargetComponents fit_target_additive(const ObservationalDataset& data, const TimeDag& g,
                                     const std::vector<int>& slices, scalar noise_variance,
                                     Index max_rows) {
  if (slices.empty()) throw std::invalid_argument("no slices for the additive target fit");
  const std::string target = g.target_variable();

  // All listed slices must share the same parent split pattern.
  auto pattern_of = [&](int t) {
    auto [pt_nodes, pnt_nodes] = classify_parents(g, t);
    ParentPattern pt_pat, pnt_pat;
    for (const NodeId& p : parent_signature(g, g.target_node(t))) {
      if (pt_nodes.count(p))
        pt_pat.push_back({p.variable, t - p.time});
      else
        pnt_pat.push_back({p.variable, t - p.time});
    }
    return std::pair{pt_pat, pnt_pat};
  };
  const auto [pt_pat, pnt_pat] = pattern_of(slices.front());
  for (int t : slices)
    if (pattern_of(t) != std::pair{pt_pat, pnt_pat})
      throw std::invalid_argument("target parent pattern differs across pooled slices");

  ParentPattern full = pt_pat;
  full.insert(full.end(), pnt_pat.begin(), pnt_pat.end());
  auto [X, y] = node_training_rows(data, target, full, slices);
  if (y.size() == 0)
    throw std::runtime_error("no observational rows to fit the target on the requested slices");
  const Index d1 = static_cast<Index>(pt_pat.size());
  return TargetComponents::fit(X.leftCols(d1), X.rightCols(X.cols() - d1), std::move(y),
                               noise_variance, max_rows);
}

}  // namespace dcbo
