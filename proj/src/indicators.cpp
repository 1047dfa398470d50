#include "indicators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace cdmpsl {

namespace {

struct Point2 {
  double x;
  double y;
};

// Points must already be strictly inside the reference box.
double sweep_2d(std::vector<Point2> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  double area = 0.0;
  double floor_y = ry;
  for (const auto& p : pts) {
    if (p.y < floor_y) {
      area += (rx - p.x) * (floor_y - p.y);
      floor_y = p.y;
    }
  }
  return area;
}

}  // namespace

bool dominates(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) fail(ErrorCode::InvalidArgument, "dominates: objective vectors differ in length");
  bool strict = false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > q[i]) return false;
    if (p[i] < q[i]) strict = true;
  }
  return strict;
}

std::vector<std::size_t> nondominated_filter(const Matrix& Y) {
  std::vector<std::size_t> keep;
  const auto n = Y.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    bool dominated = false;
    for (Eigen::Index j = 0; j < n && !dominated; ++j) {
      if (j != i && dominates(Y.row(j).transpose(), Y.row(i).transpose())) dominated = true;
    }
    if (!dominated) keep.push_back(static_cast<std::size_t>(i));
  }
  return keep;
}

Vector reference_point(const Matrix& Y_init) {
  if (Y_init.rows() == 0 || Y_init.cols() == 0) fail(ErrorCode::InvalidData, "reference_point: empty sample");
  if (!Y_init.allFinite()) fail(ErrorCode::InvalidData, "reference_point: non-finite objectives");
  return Y_init.colwise().maxCoeff().transpose();
}

double hypervolume(const Matrix& S, const Vector& ref) {
  const auto m = ref.size();
  if (S.rows() > 0 && S.cols() != m) fail(ErrorCode::InvalidArgument, "hypervolume: point/reference length mismatch");
  if (m != 2 && m != 3) {
    fail(ErrorCode::UnsupportedDimension, "exact hypervolume supports M = 2 or 3, got " + std::to_string(m));
  }
  // Only points strictly better than the reference in every objective enclose positive volume.
  std::vector<Eigen::Index> inside;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    if ((S.row(i).transpose().array() < ref.array()).all()) inside.push_back(i);
  }
  // Drop weakly dominated points (keeping the first of duplicates) so that adding a
  // dominated point never changes the slicing and hence the rounding.
  std::vector<Eigen::Index> front;
  for (auto i : inside) {
    bool covered = false;
    for (auto j : inside) {
      if (j == i) continue;
      const bool weak = (S.row(j).array() <= S.row(i).array()).all();
      if (weak && ((S.row(j).array() < S.row(i).array()).any() || j < i)) {
        covered = true;
        break;
      }
    }
    if (!covered) front.push_back(i);
  }
  inside = std::move(front);
  if (inside.empty()) return 0.0;

  if (m == 2) {
    std::vector<Point2> pts;
    pts.reserve(inside.size());
    for (auto i : inside) pts.push_back({S(i, 0), S(i, 1)});
    return sweep_2d(std::move(pts), ref[0], ref[1]);
  }

  std::sort(inside.begin(), inside.end(), [&](Eigen::Index a, Eigen::Index b) { return S(a, 2) < S(b, 2); });
  double volume = 0.0;
  std::vector<Point2> slice;
  slice.reserve(inside.size());
  for (std::size_t k = 0; k < inside.size(); ++k) {
    const auto i = inside[k];
    slice.push_back({S(i, 0), S(i, 1)});
    const double z_next = k + 1 < inside.size() ? S(inside[k + 1], 2) : ref[2];
    const double depth = z_next - S(i, 2);
    if (depth > 0.0) volume += depth * sweep_2d(slice, ref[0], ref[1]);
  }
  return volume;
}

MonteCarloEstimate hypervolume_mc(const Matrix& S, const Vector& ref, std::size_t n_samples, std::uint64_t seed) {
  if (S.rows() == 0 || n_samples == 0) return {};
  if (S.cols() != ref.size()) fail(ErrorCode::InvalidArgument, "hypervolume_mc: point/reference length mismatch");
  const Vector lo = S.colwise().minCoeff().transpose().cwiseMin(ref);
  const Vector extent = ref - lo;
  const double box = extent.prod();
  if (!(box > 0.0)) return {};

  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto m = ref.size();
  Vector q(m);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (Eigen::Index j = 0; j < m; ++j) q[j] = lo[j] + unif(rng) * extent[j];
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
      if ((S.row(i).transpose().array() <= q.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(n_samples);
  return {box * frac, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n_samples))};
}

}  // namespace cdmpsl
