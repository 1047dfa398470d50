#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace cdmpsl {

// Pareto dominance under minimization.
bool dominates(const Vector& p, const Vector& q);

// Indices of rows not dominated by any other row, ascending. Duplicates are all kept.
std::vector<std::size_t> nondominated_filter(const Matrix& Y);

// Componentwise maximum of the initial sample.
Vector reference_point(const Matrix& Y_init);

// Exact hypervolume for M = 2 (sweep) and M = 3 (slicing into 2-D sweeps).
double hypervolume(const Matrix& S, const Vector& ref);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// Uniform sampling of the box [min(S, ref), ref]; works for any M.
MonteCarloEstimate hypervolume_mc(const Matrix& S, const Vector& ref, std::size_t n_samples, std::uint64_t seed);

}  // namespace cdmpsl
