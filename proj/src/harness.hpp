#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "optimizer.hpp"

namespace cdmpsl {

enum class Variant { Full, NoWeight, NoCondition, NoSwitch, NoDm, RandomBaseline };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();

// Rewires a run configuration for an ablation variant.
RunConfig apply_variant(RunConfig run, Variant v);

struct ProblemEntry {
  std::string name;
  std::size_t dim = 0;

  bool operator==(const ProblemEntry&) const = default;
};

struct ExperimentConfig {
  std::vector<ProblemEntry> problems;
  std::vector<std::uint64_t> seeds;
  std::vector<Variant> variants{Variant::Full};
  RunConfig run;
  std::filesystem::path output_dir;  // empty: see resolve_output_dir
  std::size_t jobs = 1;
  bool record_wall_time = false;
};

// Flat `key = value` lines with `[section]` headers; `#` and `;` start comments.
// See README.md for the full key list.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one override. Keys are `key` for top-level entries or `section.key`.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Canonical, re-parseable rendering of every resolved key.
std::string format_config(const ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

struct HistoryRecord {
  std::string problem;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::string variant;
  std::size_t iteration = 0;
  std::size_t cumulative_fe = 0;
  double hv = 0.0;
  bool f_cdm = false;
  double wall_seconds = 0.0;
};

// One record per hv_curve entry. wall_seconds is zero unless record_wall_time is set,
// which keeps history files byte-identical across repeated runs.
std::vector<HistoryRecord> history_from_run(const RunResult& run, const ProblemEntry& problem, Variant variant,
                                            bool record_wall_time);

void write_history(const std::vector<HistoryRecord>& records, const std::filesystem::path& path);
std::vector<HistoryRecord> read_history(const std::filesystem::path& path);

// Non-dominated rows of the final archive: x_1..x_d, f_1..f_M.
void write_front(const RunResult& run, const std::filesystem::path& path);

inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kFrontFile = "front.csv";
inline constexpr const char* kRunSnapshotFile = "run.ini";
inline constexpr const char* kExperimentSnapshotFile = "experiment.ini";

inline constexpr const char* kOutputDirEnv = "CDMPSL_OUTPUT_DIR";
inline constexpr const char* kDefaultOutputDir = "results";

// An empty path falls back to $CDMPSL_OUTPUT_DIR, then to "results".
std::filesystem::path resolve_output_dir(const std::filesystem::path& configured);

std::filesystem::path run_directory(const std::filesystem::path& output_dir, const ProblemEntry& problem,
                                    Variant variant, std::uint64_t seed);

struct CellResult {
  ProblemEntry problem;
  Variant variant = Variant::Full;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_hv = 0.0;
  RunTimings timings;
  std::filesystem::path directory;
};

struct MedianSummary {
  ProblemEntry problem;
  Variant variant = Variant::Full;
  double median_final_hv = 0.0;
  std::size_t runs = 0;
};

struct ExperimentSummary {
  std::vector<CellResult> cells;
  std::vector<MedianSummary> medians;
  std::size_t failures = 0;
};

// Runs every problem x variant x seed cell on a pool of cfg.jobs workers. Failed cells
// are recorded without stopping the others.
ExperimentSummary execute_experiment(const ExperimentConfig& cfg);

double median(std::vector<double> values);

struct PlotSeries {
  std::string label;  // problem_d/variant
  std::vector<double> fe;  // evaluations after initialization
  std::vector<double> median;
  std::vector<double> min;
  std::vector<double> max;
  std::size_t runs = 0;
};

std::vector<PlotSeries> aggregate_histories(const std::vector<std::filesystem::path>& paths);

// SVG chart of median HV vs FEs with min-max bands, plus a companion CSV of the
// aggregated values next to it (same stem, .csv extension).
std::vector<PlotSeries> emit_plot(const std::vector<std::filesystem::path>& history_paths,
                                  const std::filesystem::path& out_path);

}  // namespace cdmpsl
