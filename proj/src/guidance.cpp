#include "guidance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diffusion.hpp"

namespace cdmpsl {

Vector sde_fitness(const Matrix& Y) {
  const auto n = Y.rows();
  if (n < 2) fail(ErrorCode::InvalidArgument, "sde_fitness needs at least 2 rows");
  if (!Y.allFinite()) fail(ErrorCode::InvalidArgument, "sde_fitness: non-finite objectives");
  const auto m = Y.cols();
  Vector fitness(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index q = 0; q < n; ++q) {
      if (q == p) continue;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double shift = std::max(0.0, Y(q, i) - Y(p, i));
        acc += shift * shift;
      }
      best = std::min(best, std::sqrt(acc));
    }
    fitness[p] = best;
  }
  return fitness;
}

std::vector<std::size_t> extract_indices(const Archive& archive, std::size_t count) {
  if (archive.empty()) fail(ErrorCode::InvalidData, "extract_training_set: empty archive");
  if (count < 1) fail(ErrorCode::InvalidArgument, "extract_training_set: count must be >= 1");
  const std::size_t n = archive.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n == 1) return idx;
  const Vector fitness = sde_fitness(archive.Y());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return fitness[static_cast<Eigen::Index>(a)] > fitness[static_cast<Eigen::Index>(b)];
  });
  idx.resize(std::min(count, n));
  return idx;
}

Matrix extract_training_set(const Archive& archive, std::size_t count) {
  const auto idx = extract_indices(archive, count);
  Matrix X(static_cast<Eigen::Index>(idx.size()), archive.X().cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = archive.X().row(static_cast<Eigen::Index>(idx[i]));
  }
  return X;
}

Vector entropy_weights(const Matrix& Y) {
  const auto n = Y.rows();
  const auto m = Y.cols();
  if (n < 2) fail(ErrorCode::InvalidArgument, "entropy_weights needs at least 2 rows");
  if (!Y.allFinite()) fail(ErrorCode::InvalidArgument, "entropy_weights: non-finite objectives");
  const double log_n = std::log(static_cast<double>(n));

  Vector info(m);  // 1 - E_j, or 0 for a column with no spread
  for (Eigen::Index j = 0; j < m; ++j) {
    const double lo = Y.col(j).minCoeff();
    const double hi = Y.col(j).maxCoeff();
    if (!(hi > lo)) {
      info[j] = 0.0;
      continue;
    }
    const Vector norm = (Y.col(j).array() - lo) / (hi - lo);
    const double total = norm.sum();
    double h = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = norm[i] / total;
      if (p > 0.0) h += p * std::log(p + kEntropyEta);
    }
    info[j] = std::max(0.0, 1.0 + h / log_n);
  }
  const double sum = info.sum();
  if (!(sum > 0.0)) return Vector::Constant(m, 1.0 / static_cast<double>(m));
  return info / sum;
}

Vector weighted_gradient(const std::vector<GPModel>& gps, const Vector& weights, const Vector& x_dm,
                         const ProblemSpec& spec, double max_norm) {
  if (gps.empty() || static_cast<Eigen::Index>(gps.size()) != weights.size()) {
    fail(ErrorCode::InvalidArgument, "weighted_gradient: need one weight per surrogate");
  }
  if (x_dm.size() != static_cast<Eigen::Index>(spec.dim) || !x_dm.allFinite()) {
    fail(ErrorCode::InvalidArgument, "weighted_gradient: bad sample");
  }
  const Vector unit = ((x_dm.array().max(-1.0).min(1.0) + 1.0) * 0.5).matrix();
  const Vector x = spec.from_unit(unit).cwiseMax(spec.lower).cwiseMin(spec.upper);
  Vector grad = Vector::Zero(x_dm.size());
  for (std::size_t j = 0; j < gps.size(); ++j) {
    if (!gps[j].fitted()) fail(ErrorCode::InvalidState, "weighted_gradient: surrogate is not fitted");
    grad += weights[static_cast<Eigen::Index>(j)] * gps[j].mean_gradient(x);
  }
  // dx / dx_dm = (upper - lower) / 2
  const Vector g_dm = -(grad.array() * (spec.upper - spec.lower).array() * 0.5).matrix();
  return clip_norm(g_dm, max_norm);
}

}  // namespace cdmpsl
