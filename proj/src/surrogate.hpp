#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace cdmpsl {

struct KernelHyper {
  double signal_variance = 1.0;
  Vector lengthscales;
  double noise_variance = 1e-6;
};

struct GpFitOptions {
  std::size_t restarts = 4;
  std::size_t iterations = 200;
  double tolerance = 1e-6;
};

// Diagnostics kept from the hyperparameter search.
struct GpFitTrace {
  std::vector<Vector> start_points;      // log-hyperparameters (log sf2, log l_1..l_d, log sn2)
  std::vector<double> start_log_likelihoods;
  double log_likelihood = 0.0;            // at the selected hyperparameters
  double jitter = 0.0;                    // diagonal jitter that made the final factorization succeed
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact GP regression with a squared-exponential ARD kernel.
// Inputs are given in problem coordinates; the model normalizes them with the
// bounds it was fitted with and standardizes the targets.
class GPModel {
 public:
  GPModel() = default;

  bool fitted() const { return fitted_; }
  std::size_t dim() const { return static_cast<std::size_t>(lower_.size()); }

  Posterior posterior(const Vector& x) const;
  // d mean / d x in raw objective units per raw decision unit.
  Vector mean_gradient(const Vector& x) const;

  const KernelHyper& hyper() const { return hyper_; }
  const Matrix& train_inputs() const { return X_; }  // normalized to the unit box
  const Matrix& cholesky() const { return chol_; }
  const Vector& alpha() const { return alpha_; }
  double y_mean() const { return y_mean_; }
  double y_std() const { return y_std_; }
  bool constant() const { return constant_; }
  const GpFitTrace& trace() const { return trace_; }

  // Standardized-space kernel; exposed for tests and oracles.
  double kernel(const Vector& a_unit, const Vector& b_unit) const;

 private:
  friend GPModel fit_gp(const Matrix&, const Vector&, std::uint64_t, const Vector&, const Vector&,
                        const GpFitOptions&);

  Vector normalize(const Vector& x) const;

  bool fitted_ = false;
  bool constant_ = false;
  Vector lower_;
  Vector upper_;
  Matrix X_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  Vector alpha_;
  Matrix chol_;
  KernelHyper hyper_;
  GpFitTrace trace_;
};

// Fits on rows of X (problem coordinates inside [lower, upper]) with targets y.
GPModel fit_gp(const Matrix& X, const Vector& y, std::uint64_t seed, const Vector& lower, const Vector& upper,
               const GpFitOptions& options = {});

// Unit-box overload: X is taken to be already normalized.
GPModel fit_gp(const Matrix& X, const Vector& y, std::uint64_t seed, const GpFitOptions& options = {});

// Log marginal likelihood of standardized targets under the given log-hyperparameters.
// Returns -inf when the kernel matrix cannot be factorized.
double log_marginal_likelihood(const Matrix& X_unit, const Vector& y_std, const Vector& log_params);

}  // namespace cdmpsl
