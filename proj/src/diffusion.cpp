#include "diffusion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace cdmpsl {

namespace {

void check_step(std::size_t t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps) {
    fail(ErrorCode::InvalidArgument,
         "diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps) + "]");
  }
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

Vector uniform_vector(Eigen::Index n, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Vector normal_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = z(rng);
  return v;
}

// Adam moment buffers for one parameter tensor.
struct AdamSlot {
  Matrix m;
  Matrix v;

  template <typename Param>
  void step(Param& param, const Matrix& grad, const TrainConfig& cfg, double bc1, double bc2) {
    if (m.size() == 0) {
      m = Matrix::Zero(grad.rows(), grad.cols());
      v = Matrix::Zero(grad.rows(), grad.cols());
    }
    m.array() = cfg.adam_beta1 * m.array() + (1.0 - cfg.adam_beta1) * grad.array();
    v.array() = cfg.adam_beta2 * v.array() + (1.0 - cfg.adam_beta2) * grad.array().square();
    param.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  }
};

}  // namespace

NoiseSchedule make_schedule(std::size_t steps, double beta_min, double beta_max) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "schedule needs T >= 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
    fail(ErrorCode::InvalidArgument, "schedule needs 0 < beta_min <= beta_max < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  s.sigma.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.beta[i] = beta_min + (beta_max - beta_min) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
    s.sigma[i] = std::sqrt(s.beta[i]);
  }
  return s;
}

Vector forward_sample(const Vector& x0, std::size_t t, const NoiseSchedule& sched, const Vector& noise) {
  check_step(t, sched);
  if (x0.size() != noise.size()) fail(ErrorCode::InvalidArgument, "forward_sample: noise length mismatch");
  const double ab = sched.alpha_bar_at(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

DenoiseNet::DenoiseNet(std::size_t dim, std::uint64_t seed, std::size_t hidden) : dim_(dim) {
  if (dim == 0 || hidden == 0) fail(ErrorCode::InvalidArgument, "DenoiseNet needs positive dimensions");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  const double in_bound = std::sqrt(1.0 / static_cast<double>(d + 1));
  const double hid_bound = std::sqrt(1.0 / static_cast<double>(h));
  W1 = uniform_matrix(h, d + 1, in_bound, rng);
  b1 = uniform_vector(h, in_bound, rng);
  W2 = uniform_matrix(h, h, hid_bound, rng);
  b2 = uniform_vector(h, hid_bound, rng);
  W3 = uniform_matrix(d, h, hid_bound, rng);
  b3 = uniform_vector(d, hid_bound, rng);
}

Matrix DenoiseNet::forward(const Matrix& Xcols, const Eigen::RowVectorXd& tnorm) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  // Split W1 to avoid materializing the concatenated input.
  Matrix z = W1.leftCols(d) * Xcols + W1.col(d) * tnorm;
  z.colwise() += b1;
  const Matrix h1 = z.cwiseMax(0.0);
  Matrix z2 = W2 * h1;
  z2.colwise() += b2;
  const Matrix h2 = z2.cwiseMax(0.0);
  Matrix out = W3 * h2;
  out.colwise() += b3;
  return out;
}

Vector DenoiseNet::predict(const Vector& x, std::size_t t, std::size_t steps) const {
  if (x.size() != static_cast<Eigen::Index>(dim_)) fail(ErrorCode::InvalidArgument, "DenoiseNet: input length");
  Eigen::RowVectorXd tn(1);
  tn[0] = static_cast<double>(t) / static_cast<double>(steps);
  return forward(x, tn).col(0);
}

bool DenoiseNet::finite() const {
  return W1.allFinite() && W2.allFinite() && W3.allFinite() && b1.allFinite() && b2.allFinite() && b3.allFinite();
}

TrainResult train(DenoiseNet net, const Matrix& data, const NoiseSchedule& sched, const TrainConfig& cfg,
                  std::uint64_t seed) {
  if (cfg.epochs < 1) fail(ErrorCode::InvalidArgument, "train: epochs must be >= 1");
  if (cfg.batch < 1) fail(ErrorCode::InvalidArgument, "train: batch must be >= 1");
  if (!(cfg.lr > 0.0)) fail(ErrorCode::InvalidArgument, "train: learning rate must be positive");
  if (data.rows() == 0) fail(ErrorCode::InvalidData, "train: empty dataset");
  if (data.rows() < 2) fail(ErrorCode::InvalidData, "train: need at least 2 samples");
  if (data.cols() != static_cast<Eigen::Index>(net.dim())) fail(ErrorCode::InvalidData, "train: dimension mismatch");
  if (!data.allFinite() || data.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
    fail(ErrorCode::InvalidData, "train: samples must be finite and inside [-1, 1]");
  }

  const auto n = static_cast<std::size_t>(data.rows());
  const auto d = data.cols();
  const auto batch = std::min(cfg.batch, n);
  const auto bsz = static_cast<Eigen::Index>(batch);
  const double T = static_cast<double>(sched.steps);

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> step_dist(1, sched.steps);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> sqrt_ab(sched.steps), sqrt_1mab(sched.steps);
  for (std::size_t i = 0; i < sched.steps; ++i) {
    sqrt_ab[i] = std::sqrt(sched.alpha_bar[i]);
    sqrt_1mab[i] = std::sqrt(1.0 - sched.alpha_bar[i]);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix xt(d, bsz), eps(d, bsz);
  Eigen::RowVectorXd tnorm(bsz);
  const auto hidden = net.W1.rows();
  Matrix z1(hidden, bsz), h1(hidden, bsz), z2(hidden, bsz), h2(hidden, bsz), out(d, bsz);
  Matrix d_out(d, bsz), d_z2(hidden, bsz), d_z1(hidden, bsz);
  Matrix gW1(net.W1.rows(), net.W1.cols()), gW2(net.W2.rows(), net.W2.cols()), gW3(net.W3.rows(), net.W3.cols());
  Vector gb1(hidden), gb2(hidden), gb3(d);
  AdamSlot sW1, sW2, sW3, sb1, sb2, sb3;
  double bc1 = 1.0, bc2 = 1.0;

  TrainResult result;
  result.loss_history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) {
      // Partial Fisher-Yates: the first `batch` entries are a uniform subset.
      for (std::size_t i = 0; i < batch; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
      }
    }
    for (Eigen::Index b = 0; b < bsz; ++b) {
      const std::size_t t = step_dist(rng);
      tnorm[b] = static_cast<double>(t) / T;
      for (Eigen::Index j = 0; j < d; ++j) eps(j, b) = normal(rng);
      const auto row = static_cast<Eigen::Index>(order[static_cast<std::size_t>(b)]);
      xt.col(b) = sqrt_ab[t - 1] * data.row(row).transpose() + sqrt_1mab[t - 1] * eps.col(b);
    }

    // Forward pass, keeping activations for backprop.
    z1.noalias() = net.W1.leftCols(d) * xt;
    z1.noalias() += net.W1.col(d) * tnorm;
    z1.colwise() += net.b1;
    h1 = z1.cwiseMax(0.0);
    z2.noalias() = net.W2 * h1;
    z2.colwise() += net.b2;
    h2 = z2.cwiseMax(0.0);
    out.noalias() = net.W3 * h2;
    out.colwise() += net.b3;

    const double denom = static_cast<double>(d * bsz);
    d_out = out - eps;
    result.loss_history.push_back(d_out.squaredNorm() / denom);
    d_out *= 2.0 / denom;

    gW3.noalias() = d_out * h2.transpose();
    gb3 = d_out.rowwise().sum();
    d_z2.noalias() = net.W3.transpose() * d_out;
    d_z2 = (z2.array() > 0.0).select(d_z2, 0.0);
    gW2.noalias() = d_z2 * h1.transpose();
    gb2 = d_z2.rowwise().sum();
    d_z1.noalias() = net.W2.transpose() * d_z2;
    d_z1 = (z1.array() > 0.0).select(d_z1, 0.0);
    gW1.leftCols(d).noalias() = d_z1 * xt.transpose();
    gW1.col(d).noalias() = d_z1 * tnorm.transpose();
    gb1 = d_z1.rowwise().sum();

    bc1 *= cfg.adam_beta1;
    bc2 *= cfg.adam_beta2;
    const double c1 = 1.0 - bc1, c2 = 1.0 - bc2;
    sW1.step(net.W1, gW1, cfg, c1, c2);
    sb1.step(net.b1, gb1, cfg, c1, c2);
    sW2.step(net.W2, gW2, cfg, c1, c2);
    sb2.step(net.b2, gb2, cfg, c1, c2);
    sW3.step(net.W3, gW3, cfg, c1, c2);
    sb3.step(net.b3, gb3, cfg, c1, c2);
  }
  if (!net.finite()) fail(ErrorCode::InvalidData, "train: parameters diverged to non-finite values");
  result.net = std::move(net);
  return result;
}

Vector denoise_step(const NoisePredictor& net, const Vector& x_t, std::size_t t, const NoiseSchedule& sched,
                    const Vector& z) {
  check_step(t, sched);
  if (z.size() != x_t.size()) fail(ErrorCode::InvalidArgument, "denoise_step: noise length mismatch");
  const double a = sched.alpha_at(t);
  const double ab = sched.alpha_bar_at(t);
  const Vector eps = net.predict(x_t, t, sched.steps);
  Vector out = (x_t - ((1.0 - a) / std::sqrt(1.0 - ab)) * eps) / std::sqrt(a);
  if (t > 1) out += sched.sigma_at(t) * z;
  return out;
}

Vector guided_denoise_step(const NoisePredictor& net, const Vector& x_t, std::size_t t, const NoiseSchedule& sched,
                           const Vector& g_hat, const Vector& z) {
  if (g_hat.size() != x_t.size()) fail(ErrorCode::InvalidArgument, "guided_denoise_step: gradient length mismatch");
  if (!g_hat.allFinite()) fail(ErrorCode::InvalidArgument, "guided_denoise_step: non-finite guidance gradient");
  const double s = sched.sigma_at(t);
  return denoise_step(net, x_t, t, sched, z) + (s * s) * g_hat;
}

Vector clip_norm(const Vector& v, double max_norm) {
  const double norm = v.norm();
  if (norm > max_norm && norm > 0.0) return v * (max_norm / norm);
  return v;
}

Matrix generate_composite(const NoisePredictor& net, const NoiseSchedule& sched, const GenerationConfig& gen,
                          const Guidance& guidance, std::uint64_t seed, GenerationTimings* timings) {
  if (gen.n_conditional > 0 && !guidance) {
    fail(ErrorCode::InvalidArgument, "generate_composite: conditional rows requested without a guidance callable");
  }
  const auto d = static_cast<Eigen::Index>(net.dim());
  const std::size_t total = gen.n_conditional + gen.n_unconditional;
  Matrix out(static_cast<Eigen::Index>(total), d);
  for (std::size_t row = 0; row < total; ++row) {
    const bool guided = row < gen.n_conditional;
    const auto started = std::chrono::steady_clock::now();
    Rng rng(derive_seed(seed, row));
    Vector x = normal_vector(d, rng);
    for (std::size_t t = sched.steps; t >= 1; --t) {
      const Vector z = normal_vector(d, rng);
      if (guided) {
        const Vector g = clip_norm(guidance(x.cwiseMax(-1.0).cwiseMin(1.0)), gen.max_gradient_norm);
        x = guided_denoise_step(net, x, t, sched, g, z);
      } else {
        x = denoise_step(net, x, t, sched, z);
      }
    }
    out.row(static_cast<Eigen::Index>(row)) = x.cwiseMax(-1.0).cwiseMin(1.0).transpose();
    if (timings) {
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      (guided ? timings->conditional_seconds : timings->unconditional_seconds) += dt;
    }
  }
  return out;
}

}  // namespace cdmpsl
