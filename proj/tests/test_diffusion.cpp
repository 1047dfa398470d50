#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diffusion.hpp"
#include "support.hpp"

using namespace cdmpsl;
using testing_support::error_code_of;
using testing_support::Gen;

namespace {

class ZeroNet final : public NoisePredictor {
 public:
  explicit ZeroNet(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  Vector predict(const Vector& x, std::size_t, std::size_t) const override { return Vector::Zero(x.size()); }

 private:
  std::size_t d_;
};

// Independent evaluation of the network, unit by unit.
Vector naive_forward(const DenoiseNet& net, const Vector& x, double tn) {
  const auto d = x.size();
  const auto h = net.W1.rows();
  Vector in(d + 1);
  in << x, tn;
  Vector a1(h), a2(h), out(d);
  for (Eigen::Index i = 0; i < h; ++i) {
    double s = net.b1[i];
    for (Eigen::Index j = 0; j <= d; ++j) s += net.W1(i, j) * in[j];
    a1[i] = s > 0.0 ? s : 0.0;
  }
  for (Eigen::Index i = 0; i < h; ++i) {
    double s = net.b2[i];
    for (Eigen::Index j = 0; j < h; ++j) s += net.W2(i, j) * a1[j];
    a2[i] = s > 0.0 ? s : 0.0;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = net.b3[i];
    for (Eigen::Index j = 0; j < h; ++j) s += net.W3(i, j) * a2[j];
    out[i] = s;
  }
  return out;
}

}  // namespace

TEST_CASE("schedule examples") {
  const auto s = make_schedule(25, 1e-5, 5e-2);
  CHECK(s.beta_at(1) == 1e-5);
  CHECK(s.beta_at(25) == doctest::Approx(5e-2).epsilon(1e-15));
  for (std::size_t t = 2; t <= 25; ++t) {
    CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
    CHECK(s.beta_at(t) > s.beta_at(t - 1));
    CHECK(s.sigma_at(t) == std::sqrt(s.beta_at(t)));
    CHECK(s.alpha_at(t) == 1.0 - s.beta_at(t));
  }
  // Frozen from an independent running-product script.
  CHECK(s.alpha_bar_at(25) == doctest::Approx(0.52938432833588522).epsilon(1e-14));
  CHECK(std::abs(s.alpha_bar_at(25) - 0.53) <= 0.01);

  const auto one = make_schedule(1, 0.2, 0.2);
  CHECK(one.alpha_bar_at(1) == doctest::Approx(0.8).epsilon(1e-15));

  CHECK(error_code_of([] { make_schedule(0, 1e-5, 5e-2); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { make_schedule(10, 0.0, 5e-2); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { make_schedule(10, 0.1, 0.05); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { make_schedule(10, 0.1, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: alpha_bar equals a naive product") {
  Gen gen(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = gen.index(1, 200);
    const double lo = std::pow(10.0, gen.uniform(-8.0, -2.0));
    const double hi = std::min(0.5, lo + gen.uniform(0.0, 0.3));
    const auto s = make_schedule(T, lo, hi);
    for (std::size_t t = 1; t <= T; ++t) {
      const double beta = T == 1 ? lo : lo + (hi - lo) * static_cast<double>(t - 1) / static_cast<double>(T - 1);
      CHECK(std::abs(s.beta_at(t) - beta) <= 1e-15 * beta);
      // Naive product over the stored betas, and a looser one over recomputed betas.
      double prod = 1.0, loose = 1.0;
      for (std::size_t u = 1; u <= t; ++u) {
        prod *= 1.0 - s.beta_at(u);
        loose *= 1.0 - (T == 1 ? lo : lo + (hi - lo) * static_cast<double>(u - 1) / static_cast<double>(T - 1));
      }
      CHECK(std::abs(s.alpha_bar_at(t) - prod) <= 1e-15 * prod);
      CHECK(std::abs(s.alpha_bar_at(t) - loose) <= 1e-13 * loose);
    }
  }
}

TEST_CASE("forward_sample examples") {
  Gen gen(42);
  const auto tiny = make_schedule(25, 1e-16, 1e-16);
  const Vector x0 = gen.vector(6, -1.0, 1.0);
  CHECK((forward_sample(x0, 25, tiny, gen.normal_vector(6)) - x0).cwiseAbs().maxCoeff() <= 1e-6);

  const auto s = make_schedule(25);
  const Vector e1 = Vector::Unit(4, 1);
  CHECK(forward_sample(Vector::Zero(4), 25, s, e1) == std::sqrt(1.0 - s.alpha_bar_at(25)) * e1);

  // Product-form coefficients frozen from an independent script.
  const double a = 0.95386959688162842, b = 0.30022123866388878;
  for (int t = 0; t < 100; ++t) {
    const Vector x = gen.vector(5, -1.0, 1.0), z = gen.normal_vector(5);
    CHECK((forward_sample(x, 10, s, z) - (a * x + b * z)).cwiseAbs().maxCoeff() <= 1e-14);
  }

  CHECK(error_code_of([&] { forward_sample(x0, 0, s, x0); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([&] { forward_sample(x0, 26, s, x0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("denoise_step examples") {
  Gen gen(43);
  const auto s = make_schedule(25);
  const ZeroNet zero(3);
  const Vector x = gen.vector(3, -1.0, 1.0);
  CHECK((denoise_step(zero, x, 7, s, Vector::Zero(3)) - x / std::sqrt(s.alpha_at(7))).norm() == 0.0);
  CHECK(denoise_step(zero, x, 1, s, gen.normal_vector(3)) == denoise_step(zero, x, 1, s, Vector::Zero(3)));
  CHECK(error_code_of([&] { denoise_step(zero, x, 0, s, x); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([&] { denoise_step(zero, x, 26, s, x); }) == ErrorCode::InvalidArgument);

  const DenoiseNet net(3, 5, 16);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = gen.index(1, 25);
    const Vector xt = gen.normal_vector(3), z = gen.normal_vector(3);
    const Vector eps = naive_forward(net, xt, static_cast<double>(t) / 25.0);
    double ab = 1.0;
    for (std::size_t u = 1; u <= t; ++u) ab *= 1.0 - (1e-5 + (5e-2 - 1e-5) * static_cast<double>(u - 1) / 24.0);
    const double beta = 1e-5 + (5e-2 - 1e-5) * static_cast<double>(t - 1) / 24.0;
    const double alpha = 1.0 - beta;
    Vector want = (xt - (1.0 - alpha) / std::sqrt(1.0 - ab) * eps) / std::sqrt(alpha);
    if (t > 1) want += std::sqrt(beta) * z;
    CHECK((denoise_step(net, xt, t, s, z) - want).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("guided_denoise_step examples and superposition") {
  Gen gen(44);
  const auto s = make_schedule(25);
  const ZeroNet zero(3);
  const Vector x = gen.vector(3, -1.0, 1.0);
  const Vector e1 = Vector::Unit(3, 0);
  const double s2 = s.sigma_at(9) * s.sigma_at(9);
  CHECK((guided_denoise_step(zero, x, 9, s, e1, Vector::Zero(3)) - (x / std::sqrt(s.alpha_at(9)) + s2 * e1))
            .cwiseAbs()
            .maxCoeff() <= 1e-15);

  const DenoiseNet net(4, 6, 32);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t t = gen.index(1, 25);
    const Vector xt = gen.normal_vector(4), z = gen.normal_vector(4), g = gen.normal_vector(4);
    const double st2 = s.sigma_at(t) * s.sigma_at(t);
    const Vector plain = denoise_step(net, xt, t, s, z);
    CHECK((guided_denoise_step(net, xt, t, s, g, z) - plain - st2 * g).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(guided_denoise_step(net, xt, t, s, Vector::Zero(4), z) == plain);
  }
  CHECK(error_code_of([&] { guided_denoise_step(net, Vector::Zero(4), 3, s, Vector::Constant(4, NAN), Vector::Zero(4)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("zero-noise reverse chain returns the start point") {
  Gen gen(45);
  const auto s = make_schedule(25, 1e-12, 1e-12);
  const ZeroNet zero(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x0 = gen.vector(5, -1.0, 1.0);
    Vector x = x0;
    for (std::size_t t = 25; t >= 1; --t) x = denoise_step(zero, x, t, s, Vector::Zero(5));
    CHECK((x - x0).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("network forward matches a naive evaluation") {
  Gen gen(46);
  const DenoiseNet net(7, 9);
  CHECK(net.hidden() == 128);
  CHECK(net.W1.cols() == 8);
  CHECK(net.W3.rows() == 7);
  CHECK(net.W1.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 8.0));
  CHECK(net.W2.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 128.0));
  for (int t = 0; t < 20; ++t) {
    const Vector x = gen.normal_vector(7);
    CHECK((net.predict(x, 4, 25) - naive_forward(net, x, 4.0 / 25.0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("train: argument checks and determinism") {
  Gen gen(47);
  const auto s = make_schedule(25);
  const Matrix data = gen.matrix(20, 3, -1.0, 1.0);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(error_code_of([&] { train(DenoiseNet(3, 1), data, s, cfg, 1); }) == ErrorCode::InvalidArgument);
  cfg.epochs = 50;
  CHECK(error_code_of([&] { train(DenoiseNet(3, 1), Matrix(0, 3), s, cfg, 1); }) == ErrorCode::InvalidData);
  CHECK(error_code_of([&] { train(DenoiseNet(3, 1), Matrix::Constant(4, 3, 2.0), s, cfg, 1); }) ==
        ErrorCode::InvalidData);

  const auto a = train(DenoiseNet(3, 1), data, s, cfg, 7);
  const auto b = train(DenoiseNet(3, 1), data, s, cfg, 7);
  CHECK(a.loss_history.size() == 50);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.net.W1 == b.net.W1);
  CHECK(a.net.W3 == b.net.W3);
  const auto c = train(DenoiseNet(3, 1), data, s, cfg, 8);
  CHECK(c.loss_history != a.loss_history);
}

TEST_CASE("train: first Adam step follows the sign of the finite-difference loss gradient") {
  // With batch = n there is no shuffle, so the minibatch can be replayed from the seed.
  const auto s = make_schedule(25);
  const Matrix data{{0.2, -0.4}, {-0.7, 0.1}, {0.5, 0.9}};
  const std::uint64_t seed = 99;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> step_dist(1, 25);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> xt, eps;
  std::vector<double> tn;
  for (Eigen::Index b = 0; b < 3; ++b) {
    const std::size_t t = step_dist(rng);
    Vector e(2);
    for (Eigen::Index j = 0; j < 2; ++j) e[j] = normal(rng);
    tn.push_back(static_cast<double>(t) / 25.0);
    eps.push_back(e);
    xt.push_back(std::sqrt(s.alpha_bar_at(t)) * data.row(b).transpose() + std::sqrt(1.0 - s.alpha_bar_at(t)) * e);
  }
  auto loss = [&](const DenoiseNet& net) {
    double total = 0.0;
    for (std::size_t b = 0; b < 3; ++b) total += (naive_forward(net, xt[b], tn[b]) - eps[b]).squaredNorm();
    return total / 6.0;
  };

  const DenoiseNet start(2, 3, 6);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 1e-7;
  const auto trained = train(start, data, s, cfg, seed);
  CHECK(trained.loss_history.front() == doctest::Approx(loss(start)).epsilon(1e-12));

  auto check_tensor = [&](auto member) {
    int compared = 0;
    const auto& before = start.*member;
    const auto& after = trained.net.*member;
    for (Eigen::Index i = 0; i < before.size(); ++i) {
      DenoiseNet plus = start, minus = start;
      (plus.*member).data()[i] += 1e-6;
      (minus.*member).data()[i] -= 1e-6;
      const double g = (loss(plus) - loss(minus)) / 2e-6;
      if (std::abs(g) < 1e-4) continue;
      const double step = after.data()[i] - before.data()[i];
      // Adam's first step is lr * g / (|g| + eps).
      CHECK(step == doctest::Approx(-cfg.lr * g / (std::abs(g) + 1e-8)).epsilon(1e-3));
      ++compared;
    }
    CHECK(compared > 0);
  };
  check_tensor(&DenoiseNet::W1);
  check_tensor(&DenoiseNet::W2);
  check_tensor(&DenoiseNet::W3);
  check_tensor(&DenoiseNet::b1);
  check_tensor(&DenoiseNet::b2);
  check_tensor(&DenoiseNet::b3);
}

TEST_CASE("generate_composite contracts") {
  const auto s = make_schedule(25);
  const DenoiseNet net(4, 3, 32);
  int calls = 0;
  Guidance counting = [&](const Vector& x) {
    ++calls;
    CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
    return Vector::Zero(x.size());
  };

  const Matrix uncond = generate_composite(net, s, {0, 5, 1.0}, counting, 11);
  CHECK(uncond.rows() == 5);
  CHECK(calls == 0);

  const Matrix mixed = generate_composite(net, s, {3, 3, 1.0}, counting, 11);
  const Matrix plain = generate_composite(net, s, {0, 6, 1.0}, nullptr, 11);
  CHECK(calls == 3 * 25);
  CHECK(mixed == plain);
  CHECK(generate_composite(net, s, {3, 3, 1.0}, counting, 11) == mixed);
  CHECK(plain.cwiseAbs().maxCoeff() <= 1.0);

  CHECK(error_code_of([&] { generate_composite(net, s, {2, 3, 1.0}, nullptr, 1); }) == ErrorCode::InvalidArgument);

  // Large guidance is clipped to the configured norm, and pushes samples along it.
  Guidance push = [](const Vector& x) { return Vector::Constant(x.size(), 1e6); };
  const Matrix pushed = generate_composite(net, s, {6, 0, 1.0}, push, 12);
  const Matrix free = generate_composite(net, s, {0, 6, 1.0}, nullptr, 12);
  CHECK(pushed.allFinite());
  CHECK(pushed.sum() >= free.sum());
}

TEST_CASE("trained model recovers a single blob mean") {
  Gen gen(48);
  const Eigen::Index d = 10;
  const Vector center = gen.vector(d, -0.4, 0.4);
  Matrix data(200, d);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data(i, j) = std::clamp(center[j] + 0.05 * gen.normal(), -1.0, 1.0);
  }
  const auto s = make_schedule(25);
  const auto result = train(DenoiseNet(10, 5), data, s, TrainConfig{}, 6);
  const Matrix samples = generate_composite(result.net, s, {0, 100, 1.0}, nullptr, 7);
  const Vector got = samples.colwise().mean().transpose();
  const Vector want = data.colwise().mean().transpose();
  CHECK((got - want).cwiseAbs().maxCoeff() <= 0.1);
}
