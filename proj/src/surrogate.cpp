#include "surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace cdmpsl {

namespace {

// Search box for the log-hyperparameters in the normalized/standardized space.
constexpr double kLogSignalMin = -6.0, kLogSignalMax = 4.0;      // sf2 in [2.5e-3, 55]
constexpr double kLogLengthMin = -4.6, kLogLengthMax = 4.6;      // l in [0.01, 100]
constexpr double kLogNoiseMin = -18.4, kLogNoiseMax = 0.0;       // sn2 in [1e-8, 1]

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-2;

Vector clamp_params(Vector p) {
  const auto d = p.size() - 2;
  p[0] = std::clamp(p[0], kLogSignalMin, kLogSignalMax);
  for (Eigen::Index i = 1; i <= d; ++i) p[i] = std::clamp(p[i], kLogLengthMin, kLogLengthMax);
  p[d + 1] = std::clamp(p[d + 1], kLogNoiseMin, kLogNoiseMax);
  return p;
}

KernelHyper to_hyper(const Vector& p) {
  const auto d = p.size() - 2;
  KernelHyper h;
  h.signal_variance = std::exp(p[0]);
  h.lengthscales = p.segment(1, d).array().exp();
  h.noise_variance = std::exp(p[d + 1]);
  return h;
}

Matrix kernel_matrix(const Matrix& X, const KernelHyper& h) {
  const auto n = X.rows();
  const Matrix Z = X.array().rowwise() / h.lengthscales.transpose().array();
  const Vector sq = Z.rowwise().squaredNorm();
  Matrix K = -2.0 * Z * Z.transpose();
  K.colwise() += sq;
  K.rowwise() += sq.transpose();
  K = (h.signal_variance * (-0.5 * K.array().max(0.0)).exp()).matrix();
  for (Eigen::Index i = 0; i < n; ++i) K(i, i) = h.signal_variance;
  return K;
}

struct Factorization {
  Matrix L;
  double jitter = 0.0;
  bool ok = false;
};

// Cholesky of K + (noise + jitter) I, escalating jitter 1e-8 -> 1e-2 on failure.
Factorization factorize(const Matrix& K, double noise) {
  Factorization f;
  for (double jitter = 0.0; jitter <= kJitterMax * 1.0000001; jitter = jitter == 0.0 ? kJitterStart : jitter * 10.0) {
    Matrix A = K;
    A.diagonal().array() += noise + jitter;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) {
      f.L = llt.matrixL();
      if (f.L.diagonal().minCoeff() > 0.0 && f.L.allFinite()) {
        f.jitter = jitter;
        f.ok = true;
        return f;
      }
    }
  }
  return f;
}

// Plain Nelder-Mead minimizer with standard coefficients.
struct SimplexResult {
  Vector x;
  double value;
};

SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start, double step,
                          std::size_t max_iter, double tol) {
  const auto n = start.size();
  std::vector<Vector> pts(static_cast<std::size_t>(n + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += step;
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(pts.size());
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <= tol) break;

    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - pts[worst]);
    const double fr = f(reflected);
    if (fr < vals[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(it - vals.begin());
  return {pts[idx], *it};
}

void check_inputs(const Matrix& X, const Vector& y) {
  if (X.rows() < 2) fail(ErrorCode::InvalidData, "fit_gp needs at least 2 training rows");
  if (X.rows() != y.size()) fail(ErrorCode::InvalidData, "fit_gp: X and y lengths differ");
  if (X.cols() == 0) fail(ErrorCode::InvalidData, "fit_gp: zero input dimensions");
  if (!X.allFinite() || !y.allFinite()) fail(ErrorCode::InvalidData, "fit_gp: non-finite training data");
}

}  // namespace

double log_marginal_likelihood(const Matrix& X_unit, const Vector& y_std, const Vector& log_params) {
  const KernelHyper h = to_hyper(clamp_params(log_params));
  const Matrix K = kernel_matrix(X_unit, h);
  Matrix A = K;
  A.diagonal().array() += h.noise_variance;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Matrix L = llt.matrixL();
  if (!(L.diagonal().minCoeff() > 0.0)) return -std::numeric_limits<double>::infinity();
  const Vector alpha = llt.solve(y_std);
  const auto n = static_cast<double>(X_unit.rows());
  const double lml = -0.5 * y_std.dot(alpha) - L.diagonal().array().log().sum() -
                     0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(lml) ? lml : -std::numeric_limits<double>::infinity();
}

GPModel fit_gp(const Matrix& X, const Vector& y, std::uint64_t seed, const Vector& lower, const Vector& upper,
               const GpFitOptions& options) {
  check_inputs(X, y);
  const auto n = X.rows();
  const auto d = X.cols();
  if (lower.size() != d || upper.size() != d || !(lower.array() < upper.array()).all()) {
    fail(ErrorCode::InvalidArgument, "fit_gp: bounds do not match the input dimension");
  }

  GPModel gp;
  gp.lower_ = lower;
  gp.upper_ = upper;
  gp.X_ = ((X.rowwise() - lower.transpose()).array().rowwise() / (upper - lower).transpose().array()).matrix();

  gp.y_mean_ = y.mean();
  const double var = (y.array() - gp.y_mean_).square().sum() / static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(gp.y_mean_)))) {
    // Constant targets: the posterior is the prior around the constant.
    gp.constant_ = true;
    gp.y_std_ = 1.0;
    gp.hyper_.signal_variance = 1.0;
    gp.hyper_.lengthscales = Vector::Ones(d);
    gp.hyper_.noise_variance = 1e-6;
    gp.alpha_ = Vector::Zero(n);
    gp.chol_ = Matrix::Zero(0, 0);
    gp.fitted_ = true;
    return gp;
  }
  gp.y_std_ = sd;
  const Vector ys = (y.array() - gp.y_mean_) / sd;

  const auto n_params = d + 2;
  auto objective = [&](const Vector& p) {
    const double lml = log_marginal_likelihood(gp.X_, ys, p);
    return std::isfinite(lml) ? -lml : 1e300;
  };

  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector best_params;
  double best_value = std::numeric_limits<double>::infinity();
  const std::size_t starts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t s = 0; s < starts; ++s) {
    Vector start(n_params);
    if (s == 0) {
      start[0] = 0.0;
      start.segment(1, d).setConstant(std::log(0.5));
      start[d + 1] = std::log(1e-4);
    } else {
      start[0] = -1.0 + 2.0 * u01(rng);
      for (Eigen::Index i = 1; i <= d; ++i) start[i] = std::log(0.05) + (std::log(5.0) - std::log(0.05)) * u01(rng);
      start[d + 1] = std::log(1e-6) + (std::log(1e-1) - std::log(1e-6)) * u01(rng);
    }
    gp.trace_.start_points.push_back(start);
    gp.trace_.start_log_likelihoods.push_back(log_marginal_likelihood(gp.X_, ys, start));
    const auto result = nelder_mead(objective, start, 0.5, options.iterations, options.tolerance);
    if (result.value < best_value) {
      best_value = result.value;
      best_params = clamp_params(result.x);
    }
  }
  if (best_value >= 1e300) {
    best_params = clamp_params(gp.trace_.start_points.front());
  }

  gp.hyper_ = to_hyper(best_params);
  const Matrix K = kernel_matrix(gp.X_, gp.hyper_);
  const Factorization f = factorize(K, gp.hyper_.noise_variance);
  if (!f.ok) fail(ErrorCode::IllConditioned, "fit_gp: Cholesky failed after jitter escalation to 1e-2");
  gp.chol_ = f.L;
  gp.hyper_.noise_variance += f.jitter;
  gp.alpha_ = f.L.transpose().triangularView<Eigen::Upper>().solve(f.L.triangularView<Eigen::Lower>().solve(ys));
  gp.trace_.jitter = f.jitter;
  gp.trace_.log_likelihood = -best_value;
  gp.fitted_ = true;
  return gp;
}

GPModel fit_gp(const Matrix& X, const Vector& y, std::uint64_t seed, const GpFitOptions& options) {
  const auto d = X.cols();
  return fit_gp(X, y, seed, Vector::Zero(d), Vector::Ones(d), options);
}

Vector GPModel::normalize(const Vector& x) const {
  return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
}

double GPModel::kernel(const Vector& a_unit, const Vector& b_unit) const {
  const double r2 = ((a_unit - b_unit).array() / hyper_.lengthscales.array()).square().sum();
  return hyper_.signal_variance * std::exp(-0.5 * r2);
}

Posterior GPModel::posterior(const Vector& x) const {
  if (!fitted_) fail(ErrorCode::InvalidState, "posterior: model is not fitted");
  if (x.size() != lower_.size() || !x.allFinite()) fail(ErrorCode::InvalidArgument, "posterior: bad input");
  if (constant_) return {y_mean_, hyper_.signal_variance * y_std_ * y_std_};
  const Vector u = normalize(x);
  const auto n = X_.rows();
  Vector k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = kernel(u, X_.row(i).transpose());
  const double mean_s = k.dot(alpha_);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double var_s = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return {y_mean_ + y_std_ * mean_s, var_s * y_std_ * y_std_};
}

Vector GPModel::mean_gradient(const Vector& x) const {
  if (!fitted_) fail(ErrorCode::InvalidState, "mean_gradient: model is not fitted");
  if (x.size() != lower_.size() || !x.allFinite()) fail(ErrorCode::InvalidArgument, "mean_gradient: bad input");
  const auto d = lower_.size();
  if (constant_) return Vector::Zero(d);
  const Vector u = normalize(x);
  const Vector inv_l2 = hyper_.lengthscales.array().square().inverse();
  Vector grad_u = Vector::Zero(d);
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    const Vector diff = X_.row(i).transpose() - u;
    const double k = kernel(u, X_.row(i).transpose());
    // d k(u, x_i) / d u = k * (x_i - u) / l^2
    grad_u += (alpha_[i] * k) * (diff.array() * inv_l2.array()).matrix();
  }
  // Chain rule through target standardization and input normalization.
  return (y_std_ * grad_u.array() / (upper_ - lower_).array()).matrix();
}

}  // namespace cdmpsl
