#include "problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace cdmpsl {

namespace {

constexpr double kPi = std::numbers::pi;

// ZDT family, M = 2. Shared g(x) = 1 + 9 * mean(x[1:]).
double zdt_g(const Vector& x) {
  const auto n = x.size();
  return 1.0 + 9.0 * x.tail(n - 1).sum() / static_cast<double>(n - 1);
}

Vector zdt1(const Vector& x) {
  const double f1 = x[0];
  const double g = zdt_g(x);
  return Vector{{f1, g * (1.0 - std::sqrt(f1 / g))}};
}

Vector zdt2(const Vector& x) {
  const double f1 = x[0];
  const double g = zdt_g(x);
  const double r = f1 / g;
  return Vector{{f1, g * (1.0 - r * r)}};
}

Vector zdt3(const Vector& x) {
  const double f1 = x[0];
  const double g = zdt_g(x);
  const double r = f1 / g;
  return Vector{{f1, g * (1.0 - std::sqrt(r) - r * std::sin(10.0 * kPi * f1))}};
}

// DTLZ family. The last k = d - M + 1 variables are distance variables.
double dtlz_g_sphere(const Vector& x, std::size_t m) {
  const auto k = x.size() - static_cast<Eigen::Index>(m) + 1;
  return (x.tail(k).array() - 0.5).square().sum();
}

double dtlz_g_rastrigin(const Vector& x, std::size_t m) {
  const auto k = x.size() - static_cast<Eigen::Index>(m) + 1;
  const auto t = x.tail(k).array() - 0.5;
  return 100.0 * (static_cast<double>(k) + (t.square() - (20.0 * kPi * t).cos()).sum());
}

// f_i = (1+g) * prod_{j < M-i} cos(theta_j) * sin(theta_{M-i})   (0-based i, theta in radians)
Vector spherical_front(const Vector& theta, double g, std::size_t m) {
  Vector f(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    double v = 1.0 + g;
    for (std::size_t j = 0; j + i + 1 < m; ++j) v *= std::cos(theta[static_cast<Eigen::Index>(j)]);
    if (i > 0) v *= std::sin(theta[static_cast<Eigen::Index>(m - i - 1)]);
    f[static_cast<Eigen::Index>(i)] = v;
  }
  return f;
}

Vector dtlz2_like(const Vector& x, std::size_t m, double g, double alpha) {
  Vector theta(static_cast<Eigen::Index>(m - 1));
  for (std::size_t j = 0; j + 1 < m; ++j) {
    theta[static_cast<Eigen::Index>(j)] = std::pow(x[static_cast<Eigen::Index>(j)], alpha) * kPi / 2.0;
  }
  return spherical_front(theta, g, m);
}

Vector dtlz5_like(const Vector& x, std::size_t m, double g) {
  Vector theta(static_cast<Eigen::Index>(m - 1));
  theta[0] = x[0] * kPi / 2.0;
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    theta[jj] = kPi / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * x[jj]);
  }
  return spherical_front(theta, g, m);
}

Vector dtlz7(const Vector& x, std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  const auto k = x.size() - mm + 1;
  const double g = 1.0 + 9.0 * x.tail(k).sum() / static_cast<double>(k);
  Vector f(mm);
  double h = static_cast<double>(m);
  for (Eigen::Index i = 0; i + 1 < mm; ++i) {
    f[i] = x[i];
    h -= f[i] / (1.0 + g) * (1.0 + std::sin(3.0 * kPi * f[i]));
  }
  f[mm - 1] = (1.0 + g) * h;
  return f;
}

ProblemSpec unit_box_problem(std::string name, std::size_t dim, std::size_t m, Evaluator fn) {
  const auto d = static_cast<Eigen::Index>(dim);
  return make_custom_problem(std::move(name), Vector::Zero(d), Vector::Ones(d), m, std::move(fn));
}

ProblemFactory zdt_factory(std::string name, Vector (*fn)(const Vector&)) {
  return [name, fn](std::size_t dim) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, name + " needs d >= 2, got " + std::to_string(dim));
    return unit_box_problem(name, dim, 2, fn);
  };
}

ProblemFactory dtlz_factory(std::string name, std::function<Vector(const Vector&, std::size_t)> fn) {
  constexpr std::size_t m = 3;
  return [name, fn](std::size_t dim) {
    if (dim < m) {
      fail(ErrorCode::InvalidDimension, name + " needs d >= " + std::to_string(m) + ", got " + std::to_string(dim));
    }
    return unit_box_problem(name, dim, m, [fn](const Vector& x) { return fn(x, m); });
  };
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, ProblemFactory> factories;

  Registry() {
    factories["zdt1"] = zdt_factory("zdt1", zdt1);
    factories["zdt2"] = zdt_factory("zdt2", zdt2);
    factories["zdt3"] = zdt_factory("zdt3", zdt3);
    factories["dtlz2"] = dtlz_factory("dtlz2", [](const Vector& x, std::size_t m) {
      return dtlz2_like(x, m, dtlz_g_sphere(x, m), 1.0);
    });
    factories["dtlz3"] = dtlz_factory("dtlz3", [](const Vector& x, std::size_t m) {
      return dtlz2_like(x, m, dtlz_g_rastrigin(x, m), 1.0);
    });
    factories["dtlz4"] = dtlz_factory("dtlz4", [](const Vector& x, std::size_t m) {
      return dtlz2_like(x, m, dtlz_g_sphere(x, m), 100.0);
    });
    factories["dtlz5"] = dtlz_factory("dtlz5", [](const Vector& x, std::size_t m) {
      return dtlz5_like(x, m, dtlz_g_sphere(x, m));
    });
    factories["dtlz6"] = dtlz_factory("dtlz6", [](const Vector& x, std::size_t m) {
      const auto k = x.size() - static_cast<Eigen::Index>(m) + 1;
      return dtlz5_like(x, m, x.tail(k).array().pow(0.1).sum());
    });
    factories["dtlz7"] = dtlz_factory("dtlz7", dtlz7);
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

bool ProblemSpec::contains(const Vector& x) const {
  if (x.size() != static_cast<Eigen::Index>(dim)) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vector ProblemSpec::to_unit(const Vector& x) const {
  return ((x - lower).array() / (upper - lower).array()).matrix();
}

Vector ProblemSpec::from_unit(const Vector& u) const {
  return lower + (u.array() * (upper - lower).array()).matrix();
}

Matrix ProblemSpec::rows_to_unit(const Matrix& X) const {
  return ((X.rowwise() - lower.transpose()).array().rowwise() / (upper - lower).transpose().array()).matrix();
}

Matrix ProblemSpec::rows_to_symmetric(const Matrix& X) const {
  return (2.0 * rows_to_unit(X).array() - 1.0).matrix();
}

Matrix ProblemSpec::rows_from_symmetric(const Matrix& S) const {
  const Matrix unit = ((S.array().max(-1.0).min(1.0) + 1.0) * 0.5).matrix();
  Matrix X = (unit.array().rowwise() * (upper - lower).transpose().array()).matrix();
  X.rowwise() += lower.transpose();
  // Guard against rounding past the upper bound.
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    X.col(j) = X.col(j).array().max(lower[j]).min(upper[j]);
  }
  return X;
}

ProblemSpec make_custom_problem(std::string name, Vector lower, Vector upper, std::size_t objectives,
                                Evaluator evaluator) {
  if (lower.size() == 0) fail(ErrorCode::InvalidDimension, "problem needs d >= 1");
  if (lower.size() != upper.size()) fail(ErrorCode::InvalidArgument, "lower/upper bound length mismatch");
  if (objectives < 2) fail(ErrorCode::InvalidArgument, "problem needs M >= 2 objectives");
  if (!lower.allFinite() || !upper.allFinite() || !(lower.array() < upper.array()).all()) {
    fail(ErrorCode::InvalidArgument, "bounds must be finite with lower < upper");
  }
  if (!evaluator) fail(ErrorCode::InvalidArgument, "problem '" + name + "' has no evaluator");
  ProblemSpec spec;
  spec.name = std::move(name);
  spec.dim = static_cast<std::size_t>(lower.size());
  spec.objectives = objectives;
  spec.lower = std::move(lower);
  spec.upper = std::move(upper);
  spec.evaluator = std::move(evaluator);
  return spec;
}

void register_problem(const std::string& name, ProblemFactory factory) {
  if (name.empty() || !factory) fail(ErrorCode::InvalidArgument, "problem registration needs a name and factory");
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.factories[lowercase(name)] = std::move(factory);
}

std::vector<std::string> list_problems() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : reg.factories) names.push_back(name);
  return names;
}

ProblemSpec make_problem(std::string_view name, std::size_t dim) {
  ProblemFactory factory;
  {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    const auto it = reg.factories.find(lowercase(name));
    if (it == reg.factories.end()) fail(ErrorCode::UnsupportedProblem, "unknown problem '" + std::string(name) + "'");
    factory = it->second;
  }
  return factory(dim);
}

Vector evaluate(const ProblemSpec& spec, const Vector& x) {
  if (x.size() != static_cast<Eigen::Index>(spec.dim)) {
    fail(ErrorCode::InvalidDimension, spec.name + ": expected " + std::to_string(spec.dim) + " variables, got " +
                                          std::to_string(x.size()));
  }
  if (!x.allFinite() || !spec.contains(x)) fail(ErrorCode::BoundsViolation, spec.name + ": input outside bounds");
  Vector y = spec.evaluator(x);
  if (y.size() != static_cast<Eigen::Index>(spec.objectives)) {
    fail(ErrorCode::InvalidData, spec.name + ": evaluator returned wrong objective count");
  }
  if (!y.allFinite()) fail(ErrorCode::InvalidData, spec.name + ": evaluator returned a non-finite objective");
  return y;
}

Matrix latin_hypercube(std::size_t n, const ProblemSpec& spec, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "latin_hypercube needs n >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(spec.dim);
  Matrix unit(rows, cols);
  std::vector<std::size_t> strata(n);
  for (Eigen::Index j = 0; j < cols; ++j) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double k = static_cast<double>(strata[static_cast<std::size_t>(i)]);
      // Clamp keeps the point strictly inside its stratum when the jitter rounds up.
      const double v = (k + jitter(rng)) / static_cast<double>(n);
      unit(i, j) = std::min(v, std::nextafter((k + 1.0) / static_cast<double>(n), 0.0));
    }
  }
  Matrix X(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) X.row(i) = spec.from_unit(unit.row(i).transpose()).transpose();
  return X;
}

Archive::Archive(Matrix X, Matrix Y) : X_(std::move(X)), Y_(std::move(Y)) {
  if (X_.rows() != Y_.rows()) fail(ErrorCode::InvalidArgument, "archive X/Y row counts differ");
}

void Archive::append(const Vector& x, const Vector& y) {
  if (x.size() != X_.cols() || y.size() != Y_.cols()) fail(ErrorCode::InvalidArgument, "archive row shape mismatch");
  X_.conservativeResize(X_.rows() + 1, Eigen::NoChange);
  Y_.conservativeResize(Y_.rows() + 1, Eigen::NoChange);
  X_.row(X_.rows() - 1) = x.transpose();
  Y_.row(Y_.rows() - 1) = y.transpose();
}

void Archive::append(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != X_.cols() || Y.cols() != Y_.cols()) {
    fail(ErrorCode::InvalidArgument, "archive block shape mismatch");
  }
  const auto n = X_.rows();
  X_.conservativeResize(n + X.rows(), Eigen::NoChange);
  Y_.conservativeResize(n + Y.rows(), Eigen::NoChange);
  X_.bottomRows(X.rows()) = X;
  Y_.bottomRows(Y.rows()) = Y;
}

}  // namespace cdmpsl
