#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdmpsl/cdmpsl.h"

namespace {

int report(cdmpsl_status status, const char* context) {
  std::fprintf(stderr, "error: %s: %s (%s)\n", context, cdmpsl_last_error(), cdmpsl_status_string(status));
  return 2;
}

struct Overrides {
  std::vector<std::string> sets;
  std::string output_dir;
  std::size_t jobs = 0;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--set", o.sets, "Override a config key, e.g. --set run.iterations=10 (repeatable)");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output root (default: $CDMPSL_OUTPUT_DIR or ./results)");
  cmd->add_option("-j,--jobs", o.jobs, "Concurrent cells");
}

int apply_overrides(cdmpsl_experiment* exp, const Overrides& o) {
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (auto st = cdmpsl_experiment_set(exp, key.c_str(), value.c_str()); st != CDMPSL_OK) {
      return report(st, ("--set " + key).c_str());
    }
  }
  if (!o.output_dir.empty()) {
    if (auto st = cdmpsl_experiment_set(exp, "output_dir", o.output_dir.c_str()); st != CDMPSL_OK) {
      return report(st, "--output-dir");
    }
  }
  if (o.jobs > 0) {
    if (auto st = cdmpsl_experiment_set(exp, "jobs", std::to_string(o.jobs).c_str()); st != CDMPSL_OK) {
      return report(st, "--jobs");
    }
  }
  return 0;
}

int execute_and_report(cdmpsl_experiment* exp) {
  if (auto st = cdmpsl_experiment_validate(exp); st != CDMPSL_OK) return report(st, "configuration");
  cdmpsl_summary* summary = nullptr;
  if (auto st = cdmpsl_experiment_execute(exp, &summary); st != CDMPSL_OK) return report(st, "execution");

  const size_t cells = cdmpsl_summary_cell_count(summary);
  for (size_t i = 0; i < cells; ++i) {
    cdmpsl_cell_info c{};
    cdmpsl_summary_cell(summary, i, &c);
    if (c.ok) {
      std::printf("%s_%zu %-15s seed=%-6llu hv=%.10g time=%.1fs  %s\n", c.problem, c.dim, c.variant,
                  static_cast<unsigned long long>(c.seed), c.final_hv, c.total_seconds, c.directory);
    } else {
      std::printf("%s_%zu %-15s seed=%-6llu FAILED: %s\n", c.problem, c.dim, c.variant,
                  static_cast<unsigned long long>(c.seed), c.error);
    }
  }
  const size_t medians = cdmpsl_summary_median_count(summary);
  if (medians > 0) std::printf("\nmedian final HV\n");
  for (size_t i = 0; i < medians; ++i) {
    cdmpsl_median_info m{};
    cdmpsl_summary_median(summary, i, &m);
    std::printf("%s_%zu %-15s %.10g (%zu runs)\n", m.problem, m.dim, m.variant, m.median_final_hv, m.runs);
  }
  const size_t failures = cdmpsl_summary_failures(summary);
  cdmpsl_summary_destroy(summary);
  if (failures > 0) {
    std::fprintf(stderr, "error: %zu of %zu cells failed\n", failures, cells);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based multi-objective Bayesian optimization benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cdmpsl_version());

  auto* list_cmd = app.add_subcommand("list-problems", "List registered benchmark problems");

  std::string run_problem, run_variant = "full", run_config;
  std::size_t run_dim = 0;
  unsigned long long run_seed = 0;
  Overrides run_over;
  auto* run_cmd = app.add_subcommand("run", "Run a single problem/variant/seed cell");
  run_cmd->add_option("-p,--problem", run_problem, "Problem name")->required();
  run_cmd->add_option("-d,--dim", run_dim, "Decision dimension")->required();
  run_cmd->add_option("-s,--seed", run_seed, "Seed")->required();
  run_cmd->add_option("-v,--variant", run_variant, "Variant")->capture_default_str();
  run_cmd->add_option("-c,--config", run_config, "Config file supplying defaults")->check(CLI::ExistingFile);
  add_overrides(run_cmd, run_over);

  std::string bench_config;
  Overrides bench_over;
  auto* bench_cmd = app.add_subcommand("bench", "Run every cell of a configuration file");
  bench_cmd->add_option("config", bench_config, "Config file")->required()->check(CLI::ExistingFile);
  add_overrides(bench_cmd, bench_over);

  std::string plot_out;
  std::vector<std::string> plot_inputs;
  auto* plot_cmd = app.add_subcommand("plot", "Median HV vs FE chart from history files");
  plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();
  plot_cmd->add_option("histories", plot_inputs, "history.csv files")->required();

  CLI11_PARSE(app, argc, argv);

  if (list_cmd->parsed()) {
    const size_t n = cdmpsl_problem_count();
    for (size_t i = 0; i < n; ++i) std::printf("%s\n", cdmpsl_problem_name(i));
    return 0;
  }

  if (run_cmd->parsed() || bench_cmd->parsed()) {
    cdmpsl_experiment* exp = nullptr;
    cdmpsl_status st = CDMPSL_OK;
    const std::string& file = run_cmd->parsed() ? run_config : bench_config;
    st = file.empty() ? cdmpsl_experiment_create(&exp) : cdmpsl_experiment_load(file.c_str(), &exp);
    if (st != CDMPSL_OK) return report(st, file.empty() ? "configuration" : file.c_str());

    int rc = 0;
    if (run_cmd->parsed()) {
      const std::string cell = run_problem + ":" + std::to_string(run_dim);
      const std::string seed = std::to_string(run_seed);
      if ((st = cdmpsl_experiment_set(exp, "problems", cell.c_str())) != CDMPSL_OK) rc = report(st, "--problem");
      else if ((st = cdmpsl_experiment_set(exp, "seeds", seed.c_str())) != CDMPSL_OK) rc = report(st, "--seed");
      else if ((st = cdmpsl_experiment_set(exp, "variant", run_variant.c_str())) != CDMPSL_OK)
        rc = report(st, "--variant");
      if (rc == 0) rc = apply_overrides(exp, run_over);
    } else {
      rc = apply_overrides(exp, bench_over);
    }
    if (rc == 0) rc = execute_and_report(exp);
    cdmpsl_experiment_destroy(exp);
    return rc;
  }

  if (plot_cmd->parsed()) {
    std::vector<const char*> paths;
    for (const auto& p : plot_inputs) paths.push_back(p.c_str());
    if (auto st = cdmpsl_plot(paths.data(), paths.size(), plot_out.c_str()); st != CDMPSL_OK) {
      return report(st, "plot");
    }
    std::printf("wrote %s\n", plot_out.c_str());
    return 0;
  }
  return 0;
}
