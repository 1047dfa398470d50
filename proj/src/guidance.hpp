#pragma once

#include <cstddef>
#include <vector>

#include "common.hpp"
#include "problems.hpp"
#include "surrogate.hpp"

namespace cdmpsl {

// Shift-based density estimation fitness (higher is better; dominated points get 0):
//   fitness(p) = min_{q != p} || max(0, f(q) - f(p)) ||_2
Vector sde_fitness(const Matrix& Y);

// Archive row indices of the `count` largest-fitness rows, ordered by descending
// fitness with ties broken by smaller index. Returns every row when count >= n.
std::vector<std::size_t> extract_indices(const Archive& archive, std::size_t count);
Matrix extract_training_set(const Archive& archive, std::size_t count);

// Entropy weights over the objective columns of Y (min-max normalization,
// column-stochastic probabilities, normalized Shannon entropy, W_j ∝ 1 - E_j).
// Constant columns get weight 0; an all-constant Y falls back to 1/M.
Vector entropy_weights(const Matrix& Y);

inline constexpr double kEntropyEta = 1e-12;

// Guidance direction in diffusion coordinates [-1, 1]^d:
//   g = -sum_j W_j * d mu_j / d x_dm,
// norm-clipped to max_norm. x_dm is mapped into the problem box (and clipped) first.
Vector weighted_gradient(const std::vector<GPModel>& gps, const Vector& weights, const Vector& x_dm,
                         const ProblemSpec& spec, double max_norm);

}  // namespace cdmpsl
