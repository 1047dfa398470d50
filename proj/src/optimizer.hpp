#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "common.hpp"
#include "diffusion.hpp"
#include "problems.hpp"
#include "surrogate.hpp"

namespace cdmpsl {

enum class SwitchMode { Sliding, Blocked };

// Which offspring operators the loop may use.
enum class OperatorPolicy {
  Composite,    // diffusion generation, switching to the GA when HV growth stalls
  GeneticOnly,  // SBX + polynomial mutation every iteration
  RandomPool,   // uniform candidates in the box
};

enum class WeightMode { Entropy, Uniform };

struct GaConfig {
  double eta_c = 15.0;
  double eta_m = 20.0;
  double crossover_rate = 0.9;  // per variable
  double mutation_rate = -1.0;  // per variable; negative means 1/d
};

struct RunConfig {
  std::size_t n_init = 100;
  std::size_t iterations = 20;
  std::size_t batch = 5;
  double extraction_fraction = 1.0 / 3.0;
  std::size_t switch_window = 3;
  double switch_threshold = 0.05;
  SwitchMode switch_mode = SwitchMode::Sliding;
  GenerationConfig generation;
  TrainConfig train;
  std::size_t steps = 25;
  double beta_min = 1e-5;
  double beta_max = 5e-2;
  GpFitOptions gp;
  GaConfig ga;
  OperatorPolicy policy = OperatorPolicy::Composite;
  WeightMode weighting = WeightMode::Entropy;
  std::uint64_t seed = 0;

  std::size_t pool_size() const { return generation.n_conditional + generation.n_unconditional; }
  void validate() const;
};

struct SwitchState {
  bool use_cdm = true;
  std::vector<double> hv_history;
};

inline constexpr double kGrowthGuard = 1e-12;

// Inverts use_cdm when the relative HV growth over the last `window` entries is below
// `threshold`. Sliding mode checks whenever window + 1 entries exist; blocked mode only
// when the number of completed steps is a multiple of the window.
SwitchState update_switch(SwitchState state, std::size_t window, double threshold,
                          SwitchMode mode = SwitchMode::Sliding);

// Greedy hypervolume batch selection over GP-predicted candidate objectives, starting
// from the archive's observed non-dominated front. Returns candidate row indices in
// selection order.
std::vector<std::size_t> batch_select(const Matrix& candidates, const std::vector<GPModel>& gps,
                                      const Archive& archive, const Vector& ref, std::size_t batch);

// Same greedy rule on already-predicted objective rows.
std::vector<std::size_t> greedy_hv_select(const Matrix& predicted, const Matrix& base_front, const Vector& ref,
                                          std::size_t batch);

// Binary tournaments on SDE fitness, SBX crossover and polynomial mutation, clipped to bounds.
Matrix ga_offspring(const Archive& archive, std::size_t n_out, const ProblemSpec& spec, std::uint64_t seed,
                    const GaConfig& ga = {});

struct RunTimings {
  double gp_fit = 0.0;
  double training = 0.0;
  double conditional = 0.0;
  double unconditional = 0.0;
  double genetic = 0.0;
  double selection = 0.0;
  double evaluation = 0.0;
  double total = 0.0;
};

struct RunResult {
  Archive archive;
  Vector reference;
  std::vector<std::size_t> cumulative_fe;  // K + 1 entries, starting at n_init
  std::vector<double> hv_curve;            // K + 1 entries, starting after initialization
  std::vector<bool> switch_trace;          // K + 1 entries: initial flag, then the flag used per iteration
  std::vector<double> wall_seconds;        // K + 1 entries, elapsed since the run started
  std::vector<std::size_t> front_indices;
  Matrix front;
  std::size_t evaluations = 0;
  std::uint64_t seed = 0;
  RunTimings timings;
};

// The full loop: LHS initialization, then per iteration GP fitting, elite extraction,
// offspring generation, batch selection, true evaluation and operator switching.
RunResult run(const ProblemSpec& spec, const RunConfig& cfg);

}  // namespace cdmpsl
