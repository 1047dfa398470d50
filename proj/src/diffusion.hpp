#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "common.hpp"

namespace cdmpsl {

// Linear beta schedule. Steps are 1-based in the accessors; storage is 0-based.
struct NoiseSchedule {
  std::size_t steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;

  double beta_at(std::size_t t) const { return beta.at(t - 1); }
  double alpha_at(std::size_t t) const { return alpha.at(t - 1); }
  double alpha_bar_at(std::size_t t) const { return alpha_bar.at(t - 1); }
  double sigma_at(std::size_t t) const { return sigma.at(t - 1); }
};

NoiseSchedule make_schedule(std::size_t steps, double beta_min = 1e-5, double beta_max = 5e-2);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) noise
Vector forward_sample(const Vector& x0, std::size_t t, const NoiseSchedule& sched, const Vector& noise);

// epsilon_theta(x_t, t)
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector predict(const Vector& x, std::size_t t, std::size_t steps) const = 0;
};

// Fully connected d+1 -> H -> H -> d network with ReLU hidden layers.
// The extra input is the normalized timestep t / T.
class DenoiseNet final : public NoisePredictor {
 public:
  static constexpr std::size_t kDefaultHidden = 128;

  DenoiseNet() = default;
  DenoiseNet(std::size_t dim, std::uint64_t seed, std::size_t hidden = kDefaultHidden);

  std::size_t dim() const override { return dim_; }
  std::size_t hidden() const { return static_cast<std::size_t>(W1.rows()); }

  Vector predict(const Vector& x, std::size_t t, std::size_t steps) const override;
  // Columns are samples; tnorm holds t / T per column.
  Matrix forward(const Matrix& Xcols, const Eigen::RowVectorXd& tnorm) const;

  bool finite() const;

  Matrix W1, W2, W3;
  Vector b1, b2, b3;

 private:
  std::size_t dim_ = 0;
};

struct TrainConfig {
  std::size_t epochs = 4000;
  std::size_t batch = 1024;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainResult {
  DenoiseNet net;
  std::vector<double> loss_history;
};

// One Adam step per epoch on a minibatch (clamped to the dataset size), with
// t ~ U{1..T} and eps ~ N(0, I) drawn per item. Rows of data are samples in [-1, 1]^d.
TrainResult train(DenoiseNet net, const Matrix& data, const NoiseSchedule& sched, const TrainConfig& cfg,
                  std::uint64_t seed);

// x_{t-1} = (x_t - (1 - alpha_t) / sqrt(1 - abar_t) * eps) / sqrt(alpha_t) + sigma_t z,  z ignored at t = 1.
Vector denoise_step(const NoisePredictor& net, const Vector& x_t, std::size_t t, const NoiseSchedule& sched,
                    const Vector& z);

// denoise_step plus sigma_t^2 * g_hat.
Vector guided_denoise_step(const NoisePredictor& net, const Vector& x_t, std::size_t t, const NoiseSchedule& sched,
                           const Vector& g_hat, const Vector& z);

struct GenerationConfig {
  std::size_t n_conditional = 10;
  std::size_t n_unconditional = 100;
  double max_gradient_norm = 1.0;
};

using Guidance = std::function<Vector(const Vector&)>;

struct GenerationTimings {
  double conditional_seconds = 0.0;
  double unconditional_seconds = 0.0;
};

// Rows [0, N1) come from guided reverse chains, rows [N1, N1 + N2) from unguided ones.
// Row i draws all of its noise from its own stream derive_seed(seed, i), so a guided
// row with zero guidance reproduces the unguided row with the same index.
Matrix generate_composite(const NoisePredictor& net, const NoiseSchedule& sched, const GenerationConfig& gen,
                          const Guidance& guidance, std::uint64_t seed, GenerationTimings* timings = nullptr);

// Rescales v to have norm at most max_norm, preserving direction.
Vector clip_norm(const Vector& v, double max_norm);

}  // namespace cdmpsl
