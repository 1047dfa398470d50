#include <doctest.h>

#include <algorithm>
#include <set>

#include "indicators.hpp"
#include "support.hpp"

using namespace cdmpsl;
using testing_support::error_code_of;
using testing_support::Gen;

namespace {

// Coordinate-compression oracle: sums every grid cell covered by at least one box.
double grid_hypervolume(const Matrix& S, const Vector& r) {
  const auto m = r.size();
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    std::set<double> c{r[j]};
    for (Eigen::Index i = 0; i < S.rows(); ++i)
      if (S(i, j) < r[j]) c.insert(S(i, j));
    axes[static_cast<std::size_t>(j)].assign(c.begin(), c.end());
  }
  double total = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
  while (true) {
    bool valid = true;
    double vol = 1.0;
    Vector lo(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& a = axes[static_cast<std::size_t>(j)];
      const auto k = idx[static_cast<std::size_t>(j)];
      if (k + 1 >= a.size()) {
        valid = false;
        break;
      }
      lo[j] = a[k];
      vol *= a[k + 1] - a[k];
    }
    if (valid) {
      for (Eigen::Index i = 0; i < S.rows(); ++i) {
        if ((S.row(i).transpose().array() <= lo.array()).all()) {
          total += vol;
          break;
        }
      }
    }
    std::size_t j = 0;
    for (; j < idx.size(); ++j) {
      if (++idx[j] + 1 < axes[j].size()) break;
      idx[j] = 0;
    }
    if (j == idx.size()) break;
  }
  return total;
}

Matrix random_front(Gen& gen, Eigen::Index m) {
  const auto n = static_cast<Eigen::Index>(gen.index(1, 30));
  return gen.matrix(n, m, 0.0, 1.2);
}

}  // namespace

TEST_CASE("dominates examples") {
  CHECK(dominates(Vector{{0.0, 0.0}}, Vector{{1.0, 1.0}}));
  CHECK_FALSE(dominates(Vector{{1.0, 2.0}}, Vector{{2.0, 1.0}}));
  CHECK_FALSE(dominates(Vector{{2.0, 1.0}}, Vector{{1.0, 2.0}}));
  CHECK_FALSE(dominates(Vector{{1.0, 1.0}}, Vector{{1.0, 1.0}}));
  CHECK(dominates(Vector{{1.0, 0.5}}, Vector{{1.0, 1.0}}));
  CHECK(error_code_of([] { dominates(Vector{{1.0}}, Vector{{1.0, 2.0}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("nondominated_filter examples") {
  CHECK(nondominated_filter(Matrix{{1, 2}, {2, 1}}) == std::vector<std::size_t>{0, 1});
  CHECK(nondominated_filter(Matrix{{0, 0}, {1, 1}}) == std::vector<std::size_t>{0});
  CHECK(nondominated_filter(Matrix{{0, 3}, {1, 1}, {3, 0}, {2, 2}}) == std::vector<std::size_t>{0, 1, 2});
  CHECK(nondominated_filter(Matrix{{1, 1}, {1, 1}, {2, 2}}) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("reference_point examples") {
  CHECK(reference_point(Matrix{{1, 5}, {3, 2}}) == Vector{{3.0, 5.0}});
  CHECK(reference_point(Matrix{{4, 7, 1}}) == Vector{{4.0, 7.0, 1.0}});
  CHECK(error_code_of([] { reference_point(Matrix(0, 2)); }) == ErrorCode::InvalidData);
}

TEST_CASE("hypervolume examples") {
  CHECK(hypervolume(Matrix{{1, 1}}, Vector{{2, 2}}) == 1.0);
  CHECK(hypervolume(Matrix{{1, 2}, {2, 1}}, Vector{{3, 3}}) == 3.0);
  CHECK(hypervolume(Matrix{{4, 4}}, Vector{{3, 3}}) == 0.0);
  CHECK(hypervolume(Matrix(0, 2), Vector{{3, 3}}) == 0.0);
  CHECK(hypervolume(Matrix{{3, 1}}, Vector{{3, 3}}) == 0.0);
  CHECK(hypervolume(Matrix{{1, 1, 1}}, Vector{{2, 3, 4}}) == 6.0);
  // Boxes of volume 8 and 3 overlapping in a 1 x 1 x 2 slab.
  CHECK(hypervolume(Matrix{{0, 0, 1}, {1, 1, 0}}, Vector{{2, 2, 3}}) == doctest::Approx(9.0));
  CHECK(error_code_of([] { hypervolume(Matrix{{1, 1, 1, 1}}, Vector::Constant(4, 2.0)); }) ==
        ErrorCode::UnsupportedDimension);
}

TEST_CASE("hypervolume_mc examples") {
  const auto unit = hypervolume_mc(Matrix{{1, 1}}, Vector{{2, 2}}, 1000000, 1);
  CHECK(std::abs(unit.value - 1.0) <= 0.005);
  const auto three = hypervolume_mc(Matrix{{1, 2}, {2, 1}}, Vector{{3, 3}}, 1000000, 2);
  CHECK(std::abs(three.value - 3.0) <= 0.02);
  CHECK(hypervolume_mc(Matrix(0, 2), Vector{{3, 3}}, 1000, 3).value == 0.0);
  const auto four = hypervolume_mc(Matrix{{0.5, 0.5, 0.5, 0.5}}, Vector::Ones(4), 200000, 4);
  CHECK(four.value == doctest::Approx(0.0625).epsilon(0.05));
}

TEST_CASE("property: exact hypervolume equals the grid oracle") {
  Gen gen(21);
  for (int t = 0; t < 300; ++t) {
    const Eigen::Index m = gen.coin() ? 2 : 3;
    Matrix S = random_front(gen, m);
    // Duplicate rows and shared coordinates stress tie handling.
    if (t % 5 == 0 && S.rows() > 1) S.row(1) = S.row(0);
    if (t % 7 == 0 && S.rows() > 2) S(2, 0) = S(0, 0);
    const Vector r = Vector::Ones(m);
    CHECK(hypervolume(S, r) == doctest::Approx(grid_hypervolume(S, r)).epsilon(1e-12));
  }
}

TEST_CASE("property: monotone under insertion, invariant to dominated points") {
  Gen gen(22);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index m = t % 2 ? 2 : 3;
    const Matrix S = random_front(gen, m);
    const Vector r = Vector::Ones(m);
    Matrix S2(S.rows() + 1, m);
    S2 << S, gen.vector(m, 0.0, 1.2).transpose();
    CHECK(hypervolume(S2, r) >= hypervolume(S, r));

    const auto nd = nondominated_filter(S);
    Matrix F(static_cast<Eigen::Index>(nd.size()), m);
    for (std::size_t i = 0; i < nd.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = S.row(static_cast<Eigen::Index>(nd[i]));
    CHECK(hypervolume(F, r) == doctest::Approx(hypervolume(S, r)).epsilon(1e-12));
  }
}

TEST_CASE("property: dominance is antisymmetric and irreflexive") {
  Gen gen(23);
  for (int t = 0; t < 5000; ++t) {
    const Eigen::Index m = static_cast<Eigen::Index>(gen.index(2, 4));
    // Coarse grid values make ties frequent.
    Vector p(m), q(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      p[j] = static_cast<double>(gen.index(0, 3));
      q[j] = static_cast<double>(gen.index(0, 3));
    }
    CHECK_FALSE((dominates(p, q) && dominates(q, p)));
    CHECK_FALSE(dominates(p, p));
  }
}

TEST_CASE("property: nondominated_filter matches brute force") {
  Gen gen(24);
  for (int t = 0; t < 300; ++t) {
    const auto n = static_cast<Eigen::Index>(gen.index(1, 40));
    Matrix Y(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) Y(i, j) = static_cast<double>(gen.index(0, 5));
    std::vector<std::size_t> want;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool dominated = false;
      for (Eigen::Index k = 0; k < n && !dominated; ++k) {
        dominated = (Y.row(k).array() <= Y.row(i).array()).all() && (Y.row(k).array() < Y.row(i).array()).any();
      }
      if (!dominated) want.push_back(static_cast<std::size_t>(i));
    }
    CHECK(nondominated_filter(Y) == want);
  }
}
