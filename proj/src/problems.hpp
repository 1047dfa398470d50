#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace cdmpsl {

using Evaluator = std::function<Vector(const Vector&)>;

// Box-constrained black box with M objectives, all minimized.
struct ProblemSpec {
  std::string name;
  std::size_t dim = 0;
  std::size_t objectives = 0;
  Vector lower;
  Vector upper;
  Evaluator evaluator;

  bool contains(const Vector& x) const;
  // Affine maps between the problem box and the unit box / the symmetric box [-1, 1]^d.
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& u) const;
  Matrix rows_to_unit(const Matrix& X) const;
  Matrix rows_to_symmetric(const Matrix& X) const;
  // Clips into [-1, 1] first, then maps back to problem coordinates.
  Matrix rows_from_symmetric(const Matrix& S) const;
};

// Validates the invariants (bounds ordered, M >= 2, d >= 1, evaluator present).
ProblemSpec make_custom_problem(std::string name, Vector lower, Vector upper, std::size_t objectives,
                                Evaluator evaluator);

using ProblemFactory = std::function<ProblemSpec(std::size_t dim)>;

// Registry keyed by lowercase name. The built-in ZDT/DTLZ suite is always present;
// additional problems (e.g. real-world suites) may be plugged in at runtime.
void register_problem(const std::string& name, ProblemFactory factory);
std::vector<std::string> list_problems();
ProblemSpec make_problem(std::string_view name, std::size_t dim);

// Checks bounds before and finiteness after calling the evaluator.
Vector evaluate(const ProblemSpec& spec, const Vector& x);

// One point per stratum in every dimension, jittered uniformly inside the stratum.
Matrix latin_hypercube(std::size_t n, const ProblemSpec& spec, std::uint64_t seed);

// Paired decision/objective rows. Append-only.
class Archive {
 public:
  Archive() = default;
  Archive(std::size_t dim, std::size_t objectives) : X_(0, dim), Y_(0, objectives) {}
  Archive(Matrix X, Matrix Y);

  void append(const Vector& x, const Vector& y);
  void append(const Matrix& X, const Matrix& Y);

  const Matrix& X() const { return X_; }
  const Matrix& Y() const { return Y_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  std::size_t objectives() const { return static_cast<std::size_t>(Y_.cols()); }
  bool empty() const { return size() == 0; }

 private:
  Matrix X_;
  Matrix Y_;
};

}  // namespace cdmpsl
