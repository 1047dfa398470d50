#include "optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "guidance.hpp"
#include "indicators.hpp"

namespace cdmpsl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream tags for the per-iteration seed fan-out.
enum StreamTag : std::uint64_t {
  kInitStream = 1,
  kNetInit = 1,
  kTrain = 2,
  kGenerate = 3,
  kGenetic = 4,
  kRandomPool = 5,
  kGpBase = 100,
};

std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration, std::uint64_t tag) {
  return derive_seed(seed, 1000 + iteration, tag);
}

// Polynomial mutation (Deb & Goyal), bounded variant.
double mutate(double x, double lo, double hi, double eta, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double span = hi - lo;
  const double d1 = (x - lo) / span;
  const double d2 = (hi - x) / span;
  const double r = u01(rng);
  const double pw = 1.0 / (eta + 1.0);
  double dq;
  if (r < 0.5) {
    const double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
    dq = std::pow(v, pw) - 1.0;
  } else {
    const double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
    dq = 1.0 - std::pow(v, pw);
  }
  return std::clamp(x + dq * span, lo, hi);
}

}  // namespace

void RunConfig::validate() const {
  if (n_init < 2) fail(ErrorCode::InvalidArgument, "n_init must be >= 2");
  if (batch < 1) fail(ErrorCode::InvalidArgument, "batch must be >= 1");
  if (!(extraction_fraction > 0.0 && extraction_fraction <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "extraction_fraction must lie in (0, 1]");
  }
  if (switch_window < 1) fail(ErrorCode::InvalidArgument, "switch_window must be >= 1");
  if (!(switch_threshold >= 0.0)) fail(ErrorCode::InvalidArgument, "switch_threshold must be >= 0");
  if (pool_size() < batch) fail(ErrorCode::InvalidArgument, "candidate pool smaller than the batch");
  if (!(generation.max_gradient_norm > 0.0)) fail(ErrorCode::InvalidArgument, "max_gradient_norm must be > 0");
  if (train.epochs < 1 || train.batch < 1 || !(train.lr > 0.0)) {
    fail(ErrorCode::InvalidArgument, "training needs epochs >= 1, batch >= 1 and lr > 0");
  }
  make_schedule(steps, beta_min, beta_max);
}

SwitchState update_switch(SwitchState state, std::size_t window, double threshold, SwitchMode mode) {
  const auto& h = state.hv_history;
  if (window < 1 || h.size() < window + 1) return state;
  if (mode == SwitchMode::Blocked && (h.size() - 1) % window != 0) return state;
  const double now = h.back();
  const double then = h[h.size() - 1 - window];
  const double rate = (now - then) / std::max(then, kGrowthGuard);
  if (rate < threshold) state.use_cdm = !state.use_cdm;
  return state;
}

std::vector<std::size_t> greedy_hv_select(const Matrix& predicted, const Matrix& base_front, const Vector& ref,
                                          std::size_t batch) {
  const auto m = predicted.rows();
  if (batch < 1) fail(ErrorCode::InvalidArgument, "batch_select: batch must be >= 1");
  if (static_cast<std::size_t>(m) < batch) {
    fail(ErrorCode::InvalidArgument, "batch_select: fewer candidates than the batch size");
  }
  Matrix current(base_front.rows() + static_cast<Eigen::Index>(batch) + 1, predicted.cols());
  Eigen::Index used = base_front.rows();
  current.topRows(used) = base_front;
  std::vector<bool> taken(static_cast<std::size_t>(m), false);
  std::vector<std::size_t> chosen;
  chosen.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    double best = -1.0;
    std::size_t best_idx = 0;
    bool found = false;
    for (Eigen::Index c = 0; c < m; ++c) {
      if (taken[static_cast<std::size_t>(c)]) continue;
      current.row(used) = predicted.row(c);
      const double hv = hypervolume(current.topRows(used + 1), ref);
      // Strict improvement with a relative guard keeps the smallest index on ties.
      if (!found || hv > best + 1e-12 * std::max(1.0, std::abs(best))) {
        best = hv;
        best_idx = static_cast<std::size_t>(c);
        found = true;
      }
    }
    taken[best_idx] = true;
    chosen.push_back(best_idx);
    current.row(used) = predicted.row(static_cast<Eigen::Index>(best_idx));
    ++used;
  }
  return chosen;
}

std::vector<std::size_t> batch_select(const Matrix& candidates, const std::vector<GPModel>& gps,
                                      const Archive& archive, const Vector& ref, std::size_t batch) {
  if (static_cast<std::size_t>(candidates.rows()) < batch || batch < 1) {
    fail(ErrorCode::InvalidArgument, "batch_select: need 1 <= batch <= candidates");
  }
  if (gps.size() != archive.objectives() || static_cast<Eigen::Index>(gps.size()) != ref.size()) {
    fail(ErrorCode::InvalidArgument, "batch_select: surrogate/objective count mismatch");
  }
  Matrix predicted(candidates.rows(), static_cast<Eigen::Index>(gps.size()));
  for (Eigen::Index c = 0; c < candidates.rows(); ++c) {
    const Vector x = candidates.row(c).transpose();
    for (std::size_t j = 0; j < gps.size(); ++j) predicted(c, static_cast<Eigen::Index>(j)) = gps[j].posterior(x).mean;
  }
  const auto nd = nondominated_filter(archive.Y());
  Matrix base(static_cast<Eigen::Index>(nd.size()), archive.Y().cols());
  for (std::size_t i = 0; i < nd.size(); ++i) {
    base.row(static_cast<Eigen::Index>(i)) = archive.Y().row(static_cast<Eigen::Index>(nd[i]));
  }
  return greedy_hv_select(predicted, base, ref, batch);
}

Matrix ga_offspring(const Archive& archive, std::size_t n_out, const ProblemSpec& spec, std::uint64_t seed,
                    const GaConfig& ga) {
  if (archive.size() < 2) fail(ErrorCode::InvalidState, "ga_offspring needs at least 2 archive rows");
  const auto d = static_cast<Eigen::Index>(spec.dim);
  if (archive.X().cols() != d) fail(ErrorCode::InvalidArgument, "ga_offspring: archive/problem dimension mismatch");
  const Vector fitness = sde_fitness(archive.Y());
  const std::size_t n = archive.size();
  const double pm = ga.mutation_rate < 0.0 ? 1.0 / static_cast<double>(d) : ga.mutation_rate;

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto tournament = [&]() {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const double fa = fitness[static_cast<Eigen::Index>(a)];
    const double fb = fitness[static_cast<Eigen::Index>(b)];
    if (fa != fb) return fa > fb ? a : b;
    return std::min(a, b);
  };

  Matrix out(static_cast<Eigen::Index>(n_out), d);
  Eigen::Index row = 0;
  while (row < out.rows()) {
    Vector c1 = archive.X().row(static_cast<Eigen::Index>(tournament())).transpose();
    Vector c2 = archive.X().row(static_cast<Eigen::Index>(tournament())).transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
      // Draws happen unconditionally so the stream layout does not depend on the parents.
      const double r_cross = u01(rng);
      const double r_beta = u01(rng);
      const double r_swap = u01(rng);
      if (r_cross > ga.crossover_rate || std::abs(c1[j] - c2[j]) < 1e-14) continue;
      const double beta = r_beta <= 0.5 ? std::pow(2.0 * r_beta, 1.0 / (ga.eta_c + 1.0))
                                        : std::pow(1.0 / (2.0 * (1.0 - r_beta)), 1.0 / (ga.eta_c + 1.0));
      const double a = c1[j], b = c2[j];
      double y1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
      double y2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
      if (r_swap < 0.5) std::swap(y1, y2);
      c1[j] = std::clamp(y1, spec.lower[j], spec.upper[j]);
      c2[j] = std::clamp(y2, spec.lower[j], spec.upper[j]);
    }
    for (Vector* child : {&c1, &c2}) {
      if (row >= out.rows()) break;
      for (Eigen::Index j = 0; j < d; ++j) {
        if (u01(rng) < pm) (*child)[j] = mutate((*child)[j], spec.lower[j], spec.upper[j], ga.eta_m, rng);
      }
      out.row(row++) = child->cwiseMax(spec.lower).cwiseMin(spec.upper).transpose();
    }
  }
  return out;
}

RunResult run(const ProblemSpec& spec, const RunConfig& cfg) {
  cfg.validate();
  if (spec.objectives != 2 && spec.objectives != 3) {
    fail(ErrorCode::UnsupportedDimension, "run: exact hypervolume tracking supports M = 2 or 3");
  }
  const auto start = Clock::now();
  const NoiseSchedule sched = make_schedule(cfg.steps, cfg.beta_min, cfg.beta_max);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const auto m = spec.objectives;

  RunResult result;
  result.seed = cfg.seed;
  auto evaluate_rows = [&](const Matrix& X) {
    const auto t0 = Clock::now();
    Matrix Y(X.rows(), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      Y.row(i) = evaluate(spec, X.row(i).transpose()).transpose();
      ++result.evaluations;
    }
    result.timings.evaluation += seconds_since(t0);
    return Y;
  };

  const Matrix X0 = latin_hypercube(cfg.n_init, spec, derive_seed(cfg.seed, kInitStream));
  result.archive = Archive(X0, evaluate_rows(X0));
  result.reference = reference_point(result.archive.Y());

  SwitchState sw;
  sw.use_cdm = cfg.policy == OperatorPolicy::Composite;
  sw.hv_history.push_back(hypervolume(result.archive.Y(), result.reference));
  result.hv_curve.push_back(sw.hv_history.back());
  result.cumulative_fe.push_back(result.archive.size());
  result.switch_trace.push_back(sw.use_cdm);
  result.wall_seconds.push_back(seconds_since(start));

  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    try {
      const Archive& archive = result.archive;
      auto t0 = Clock::now();
      std::vector<GPModel> gps;
      gps.reserve(m);
      for (std::size_t j = 0; j < m; ++j) {
        gps.push_back(fit_gp(archive.X(), archive.Y().col(static_cast<Eigen::Index>(j)),
                             iteration_seed(cfg.seed, k, kGpBase + j), spec.lower, spec.upper, cfg.gp));
      }
      result.timings.gp_fit += seconds_since(t0);

      const std::size_t n = archive.size();
      const auto elite_count = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::ceil(cfg.extraction_fraction * static_cast<double>(n) - 1e-9)));
      const auto elites = extract_indices(archive, elite_count);

      const bool use_cdm = sw.use_cdm;
      Matrix candidates;
      if (cfg.policy == OperatorPolicy::RandomPool) {
        t0 = Clock::now();
        Rng rng(iteration_seed(cfg.seed, k, kRandomPool));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        candidates.resize(static_cast<Eigen::Index>(cfg.pool_size()), d);
        for (Eigen::Index i = 0; i < candidates.rows(); ++i)
          for (Eigen::Index j = 0; j < d; ++j)
            candidates(i, j) = spec.lower[j] + u01(rng) * (spec.upper[j] - spec.lower[j]);
        result.timings.genetic += seconds_since(t0);
      } else if (use_cdm) {
        Matrix elite_x(static_cast<Eigen::Index>(elites.size()), d);
        Matrix elite_y(static_cast<Eigen::Index>(elites.size()), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < elites.size(); ++i) {
          elite_x.row(static_cast<Eigen::Index>(i)) = archive.X().row(static_cast<Eigen::Index>(elites[i]));
          elite_y.row(static_cast<Eigen::Index>(i)) = archive.Y().row(static_cast<Eigen::Index>(elites[i]));
        }
        t0 = Clock::now();
        DenoiseNet net(spec.dim, iteration_seed(cfg.seed, k, kNetInit));
        auto trained = train(std::move(net), spec.rows_to_symmetric(elite_x), sched, cfg.train,
                             iteration_seed(cfg.seed, k, kTrain));
        result.timings.training += seconds_since(t0);

        const Vector weights = cfg.weighting == WeightMode::Entropy
                                   ? entropy_weights(elite_y)
                                   : Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
        const double max_norm = cfg.generation.max_gradient_norm;
        Guidance guide = [&](const Vector& x) { return weighted_gradient(gps, weights, x, spec, max_norm); };

        GenerationTimings gen_time;
        const Matrix pool =
            generate_composite(trained.net, sched, cfg.generation, guide, iteration_seed(cfg.seed, k, kGenerate),
                               &gen_time);
        result.timings.conditional += gen_time.conditional_seconds;
        result.timings.unconditional += gen_time.unconditional_seconds;
        candidates = spec.rows_from_symmetric(pool);
      } else {
        t0 = Clock::now();
        candidates = ga_offspring(archive, cfg.pool_size(), spec, iteration_seed(cfg.seed, k, kGenetic), cfg.ga);
        result.timings.genetic += seconds_since(t0);
      }

      t0 = Clock::now();
      const auto picked = batch_select(candidates, gps, archive, result.reference, cfg.batch);
      result.timings.selection += seconds_since(t0);
      Matrix Xb(static_cast<Eigen::Index>(picked.size()), d);
      for (std::size_t i = 0; i < picked.size(); ++i) {
        Xb.row(static_cast<Eigen::Index>(i)) = candidates.row(static_cast<Eigen::Index>(picked[i]));
      }
      const Matrix Yb = evaluate_rows(Xb);
      result.archive.append(Xb, Yb);

      sw.hv_history.push_back(hypervolume(result.archive.Y(), result.reference));
      result.hv_curve.push_back(sw.hv_history.back());
      result.cumulative_fe.push_back(result.archive.size());
      result.switch_trace.push_back(use_cdm);
      if (cfg.policy == OperatorPolicy::Composite) {
        sw = update_switch(std::move(sw), cfg.switch_window, cfg.switch_threshold, cfg.switch_mode);
      }
      result.wall_seconds.push_back(seconds_since(start));
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(k) + ": " + e.what());
    }
  }

  result.front_indices = nondominated_filter(result.archive.Y());
  result.front.resize(static_cast<Eigen::Index>(result.front_indices.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < result.front_indices.size(); ++i) {
    result.front.row(static_cast<Eigen::Index>(i)) =
        result.archive.Y().row(static_cast<Eigen::Index>(result.front_indices[i]));
  }
  result.timings.total = seconds_since(start);
  return result;
}

}  // namespace cdmpsl
