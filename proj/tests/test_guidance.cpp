#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "guidance.hpp"
#include "support.hpp"

using namespace cdmpsl;
using testing_support::error_code_of;
using testing_support::Gen;

namespace {

Vector sde_transcription(const Matrix& Y) {
  Vector out(Y.rows());
  for (Eigen::Index p = 0; p < Y.rows(); ++p) {
    double m = INFINITY;
    for (Eigen::Index q = 0; q < Y.rows(); ++q) {
      if (p == q) continue;
      double s = 0.0;
      for (Eigen::Index i = 0; i < Y.cols(); ++i) s += std::pow(std::fmax(0.0, Y(q, i) - Y(p, i)), 2.0);
      m = std::fmin(m, std::sqrt(s));
    }
    out[p] = m;
  }
  return out;
}

ProblemSpec box_problem(const Vector& lo, const Vector& hi) {
  return make_custom_problem("box", lo, hi, 2, [](const Vector& x) { return Vector{{x[0], -x[0]}}; });
}

GPModel fit_on(const ProblemSpec& spec, Gen& gen, double (*f)(const Vector&), std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix X(25, d);
  Vector y(25);
  for (Eigen::Index i = 0; i < 25; ++i) {
    X.row(i) = spec.from_unit(gen.vector(d)).transpose();
    y[i] = f(X.row(i).transpose());
  }
  return fit_gp(X, y, seed, spec.lower, spec.upper);
}

double bowl(const Vector& x) { return (x.array() - 0.3).square().sum(); }
double ridge(const Vector& x) { return std::sin(2.0 * x[0]) + x.sum(); }

}  // namespace

TEST_CASE("sde_fitness hand cases") {
  CHECK(sde_fitness(Matrix{{0, 0}, {1, 1}}) == Vector{{std::sqrt(2.0), 0.0}});
  CHECK(sde_fitness(Matrix{{1, 2}, {2, 1}}) == Vector{{1.0, 1.0}});
  CHECK(sde_fitness(Matrix{{0, 3}, {1, 1}, {3, 0}}) == Vector{{1.0, 2.0, 1.0}});
  CHECK(error_code_of([] { sde_fitness(Matrix{{1, 2}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: sde_fitness is bitwise equal to a transcription") {
  Gen gen(51);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<Eigen::Index>(gen.index(2, 30));
    const auto m = static_cast<Eigen::Index>(gen.index(2, 4));
    Matrix Y = gen.matrix(n, m, -2.0, 2.0);
    if (t % 3 == 0) Y = Y.array().round();  // many ties and duplicates
    const Vector got = sde_fitness(Y);
    const Vector want = sde_transcription(Y);
    CHECK((got.array() == want.array()).all());
    // A strictly dominated point scores zero.
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = 0; q < n; ++q) {
        if ((Y.row(q).array() < Y.row(p).array()).all()) CHECK(got[p] == 0.0);
      }
    }
  }
}

TEST_CASE("extract_training_set examples") {
  Gen gen(52);
  const Matrix Y = gen.matrix(99, 2);
  const Archive big(gen.matrix(99, 3), Y);
  CHECK(extract_training_set(big, 99 / 3).rows() == 33);
  CHECK(extract_training_set(big, 500).rows() == 99);

  const Archive small(Matrix{{0.0}, {1.0}, {2.0}}, Matrix{{0, 3}, {1, 1}, {3, 0}});
  CHECK(extract_indices(small, 2) == std::vector<std::size_t>{1, 0});
  CHECK(extract_training_set(small, 2) == Matrix{{1.0}, {0.0}});
  CHECK(error_code_of([] { extract_training_set(Archive(1, 2), 1); }) == ErrorCode::InvalidData);
}

TEST_CASE("property: extraction invariant to appending far-dominated rows") {
  Gen gen(53);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(gen.index(3, 40));
    const Matrix Y = gen.matrix(n, 2);
    const Matrix X = gen.matrix(n, 2);
    const std::size_t count = gen.index(1, static_cast<std::size_t>(n));
    const auto before = extract_indices(Archive(X, Y), count);

    const auto extra = static_cast<Eigen::Index>(gen.index(1, 10));
    Matrix Y2(n + extra, 2), X2(n + extra, 2);
    Y2.topRows(n) = Y;
    X2.topRows(n) = X;
    // Offsets exceed every shifted distance inside the unit square.
    Y2.bottomRows(extra) = (gen.matrix(extra, 2).array() + 10.0).matrix();
    X2.bottomRows(extra) = gen.matrix(extra, 2);
    CHECK(extract_indices(Archive(X2, Y2), count) == before);
  }
}

TEST_CASE("entropy_weights examples") {
  const Vector w = entropy_weights(Matrix{{0, 0}, {0.5, 1}, {1, 0}});
  // Frozen from an independent script.
  CHECK(w[0] == doctest::Approx(0.296081910967).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(0.703918089033).epsilon(1e-9));
  CHECK(std::abs(w[0] - 0.296) <= 1e-3);
  CHECK(std::abs(w[1] - 0.704) <= 1e-3);

  const Vector same = entropy_weights(Matrix{{0.1, 0.1}, {0.7, 0.7}, {0.4, 0.4}, {0.9, 0.9}});
  CHECK(same[0] == doctest::Approx(0.5));
  CHECK(same[1] == doctest::Approx(0.5));

  const Vector one_const = entropy_weights(Matrix{{0.1, 2.0, 5.0}, {0.7, 2.0, 1.0}, {0.4, 2.0, 3.0}});
  CHECK(one_const[1] == 0.0);
  CHECK(one_const.sum() == doctest::Approx(1.0));

  const Vector all_const = entropy_weights(Matrix{{1, 2, 3}, {1, 2, 3}});
  CHECK(all_const == Vector::Constant(3, 1.0 / 3.0));
}

TEST_CASE("property: entropy weights are a distribution and permutation-equivariant") {
  Gen gen(54);
  for (int t = 0; t < 10000; ++t) {
    const auto n = static_cast<Eigen::Index>(gen.index(2, 25));
    const auto m = static_cast<Eigen::Index>(gen.index(1, 5));
    Matrix Y = gen.matrix(n, m, -3.0, 3.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (gen.coin(0.15)) Y.col(j).setConstant(gen.uniform());
      else if (gen.coin(0.1)) Y.col(j) = Y.col(j).array().round();
    }
    const Vector w = entropy_weights(Y);
    CHECK((w.array() >= 0.0).all());
    CHECK(std::abs(w.sum() - 1.0) <= 1e-9);

    if (t % 10 == 0) {
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(n)), cols(static_cast<std::size_t>(m));
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
      std::iota(cols.begin(), cols.end(), Eigen::Index{0});
      std::shuffle(rows.begin(), rows.end(), gen.rng());
      std::shuffle(cols.begin(), cols.end(), gen.rng());
      Matrix P(n, m);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) P(i, j) = Y(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      const Vector wp = entropy_weights(P);
      for (Eigen::Index j = 0; j < m; ++j) CHECK(wp[j] == doctest::Approx(w[cols[static_cast<std::size_t>(j)]]).epsilon(1e-12));
    }
  }
}

TEST_CASE("weighted_gradient examples") {
  Gen gen(55);
  const Vector lo{{-1.0, 2.0, 0.0}}, hi{{3.0, 2.5, 10.0}};
  const auto spec = box_problem(lo, hi);

  // Constant surrogates give zero guidance.
  Matrix X(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) X.row(i) = spec.from_unit(gen.vector(3)).transpose();
  const auto flat = fit_gp(X, Vector::Constant(5, 2.0), 1, lo, hi);
  CHECK(weighted_gradient({flat, flat}, Vector{{0.5, 0.5}}, gen.vector(3, -1, 1), spec, 1.0) == Vector::Zero(3));

  const auto g1 = fit_on(spec, gen, bowl, 2);
  const auto g2 = fit_on(spec, gen, ridge, 3);
  for (int t = 0; t < 50; ++t) {
    const Vector x_dm = gen.vector(3, -1.0, 1.0);
    const Vector x = spec.from_unit((x_dm.array() + 1.0) / 2.0);
    const Vector scale = (hi - lo) / 2.0;

    // Single objective: exact chain rule, direction opposite the gradient.
    const Vector single = weighted_gradient({g1}, Vector{{1.0}}, x_dm, spec, 1e12);
    const Vector want = -(g1.mean_gradient(x).array() * scale.array()).matrix();
    CHECK((single - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
    CHECK(single.dot(g1.mean_gradient(x)) <= 0.0);

    // Superposition over two objectives, then clipping preserves direction.
    const double w = gen.uniform();
    const Vector a = weighted_gradient({g1}, Vector{{1.0}}, x_dm, spec, 1e12);
    const Vector b = weighted_gradient({g2}, Vector{{1.0}}, x_dm, spec, 1e12);
    const Vector both = weighted_gradient({g1, g2}, Vector{{w, 1.0 - w}}, x_dm, spec, 1e12);
    CHECK((both - (w * a + (1.0 - w) * b)).norm() <= 1e-12 * std::max(1.0, both.norm()));
    const Vector clipped = weighted_gradient({g1, g2}, Vector{{w, 1.0 - w}}, x_dm, spec, 0.25);
    CHECK(clipped.norm() <= 0.25 + 1e-12);
    if (both.norm() > 0.0) CHECK(clipped.normalized().dot(both.normalized()) == doctest::Approx(1.0));
  }

  // Samples outside the box are clipped before the query.
  const Vector inside = weighted_gradient({g1}, Vector{{1.0}}, Vector{{1.0, -1.0, 0.2}}, spec, 1e12);
  CHECK(weighted_gradient({g1}, Vector{{1.0}}, Vector{{4.0, -3.0, 0.2}}, spec, 1e12) == inside);

  CHECK(error_code_of([&] { weighted_gradient({GPModel()}, Vector{{1.0}}, Vector::Zero(3), spec, 1.0); }) ==
        ErrorCode::InvalidState);
  CHECK(error_code_of([&] { weighted_gradient({g1}, Vector{{0.5, 0.5}}, Vector::Zero(3), spec, 1.0); }) ==
        ErrorCode::InvalidArgument);
}
