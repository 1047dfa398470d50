#pragma once

#include <cstdint>
#include <random>

#include "common.hpp"

namespace testing_support {

// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return uniform() < p; }

  cdmpsl::Vector vector(Eigen::Index n, double lo = 0.0, double hi = 1.0) {
    cdmpsl::Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  cdmpsl::Vector normal_vector(Eigen::Index n) {
    cdmpsl::Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  cdmpsl::Matrix matrix(Eigen::Index rows, Eigen::Index cols, double lo = 0.0, double hi = 1.0) {
    cdmpsl::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

template <typename F>
cdmpsl::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const cdmpsl::Error& e) {
    return e.code();
  }
  throw std::logic_error("expected cdmpsl::Error");
}

}  // namespace testing_support
