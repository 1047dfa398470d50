#include "cdmpsl/cdmpsl.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <memory>
#include <mutex>
#include <new>
#include <set>
#include <string>
#include <vector>

#include "harness.hpp"
#include "indicators.hpp"
#include "optimizer.hpp"
#include "problems.hpp"

struct cdmpsl_problem {
  cdmpsl::ProblemSpec spec;
  cdmpsl::ProblemEntry entry;
};

struct cdmpsl_run_config {
  cdmpsl::ExperimentConfig cfg;
  std::uint64_t seed = 0;
};

struct cdmpsl_run_result {
  cdmpsl::RunResult result;
  cdmpsl::ProblemEntry entry;
  cdmpsl::Variant variant = cdmpsl::Variant::Full;
};

struct cdmpsl_experiment {
  cdmpsl::ExperimentConfig cfg;
};

struct cdmpsl_summary {
  cdmpsl::ExperimentSummary summary;
  std::vector<std::string> directories;
  std::vector<std::string> variant_names;
  std::vector<std::string> median_variant_names;
};

namespace {

thread_local std::string g_last_error;

cdmpsl_status to_status(cdmpsl::ErrorCode code) {
  using cdmpsl::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return CDMPSL_INVALID_ARGUMENT;
    case ErrorCode::UnsupportedProblem: return CDMPSL_UNSUPPORTED_PROBLEM;
    case ErrorCode::InvalidDimension: return CDMPSL_INVALID_DIMENSION;
    case ErrorCode::BoundsViolation: return CDMPSL_BOUNDS_VIOLATION;
    case ErrorCode::InvalidData: return CDMPSL_INVALID_DATA;
    case ErrorCode::IllConditioned: return CDMPSL_ILL_CONDITIONED;
    case ErrorCode::InvalidState: return CDMPSL_INVALID_STATE;
    case ErrorCode::UnsupportedDimension: return CDMPSL_UNSUPPORTED_DIMENSION;
    case ErrorCode::Parse: return CDMPSL_PARSE_ERROR;
    case ErrorCode::Io: return CDMPSL_IO_ERROR;
    case ErrorCode::Alignment: return CDMPSL_ALIGNMENT_ERROR;
    case ErrorCode::RunFailed: return CDMPSL_RUN_FAILED;
  }
  return CDMPSL_INTERNAL_ERROR;
}

template <typename F>
cdmpsl_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CDMPSL_OK;
  } catch (const cdmpsl::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CDMPSL_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CDMPSL_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown exception";
    return CDMPSL_INTERNAL_ERROR;
  }
}

void require(bool cond, const char* what) {
  if (!cond) cdmpsl::fail(cdmpsl::ErrorCode::InvalidArgument, what);
}

// Problem names handed out to C callers; set nodes keep their addresses.
std::mutex g_names_mutex;
std::set<std::string> g_names;

const char* intern(const std::string& s) {
  std::lock_guard<std::mutex> lock(g_names_mutex);
  return g_names.insert(s).first->c_str();
}

}  // namespace

extern "C" {

const char* cdmpsl_last_error(void) { return g_last_error.c_str(); }

const char* cdmpsl_status_string(cdmpsl_status status) {
  switch (status) {
    case CDMPSL_OK: return "ok";
    case CDMPSL_INVALID_ARGUMENT: return "invalid argument";
    case CDMPSL_UNSUPPORTED_PROBLEM: return "unsupported problem";
    case CDMPSL_INVALID_DIMENSION: return "invalid dimension";
    case CDMPSL_BOUNDS_VIOLATION: return "bounds violation";
    case CDMPSL_INVALID_DATA: return "invalid data";
    case CDMPSL_ILL_CONDITIONED: return "ill-conditioned";
    case CDMPSL_INVALID_STATE: return "invalid state";
    case CDMPSL_UNSUPPORTED_DIMENSION: return "unsupported dimension";
    case CDMPSL_PARSE_ERROR: return "parse error";
    case CDMPSL_IO_ERROR: return "I/O error";
    case CDMPSL_ALIGNMENT_ERROR: return "alignment error";
    case CDMPSL_RUN_FAILED: return "run failed";
    case CDMPSL_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* cdmpsl_version(void) { return "0.1.0"; }

size_t cdmpsl_problem_count(void) { return cdmpsl::list_problems().size(); }

const char* cdmpsl_problem_name(size_t index) {
  const auto names = cdmpsl::list_problems();
  if (index >= names.size()) return nullptr;
  return intern(names[index]);
}

cdmpsl_status cdmpsl_problem_create(const char* name, size_t dim, cdmpsl_problem** out) {
  return guarded([&] {
    require(name && out, "name and out must be non-null");
    auto p = std::make_unique<cdmpsl_problem>();
    p->spec = cdmpsl::make_problem(name, dim);
    p->entry = {p->spec.name, dim};
    *out = p.release();
  });
}

void cdmpsl_problem_destroy(cdmpsl_problem* problem) { delete problem; }

size_t cdmpsl_problem_dim(const cdmpsl_problem* problem) { return problem ? problem->spec.dim : 0; }

size_t cdmpsl_problem_objectives(const cdmpsl_problem* problem) { return problem ? problem->spec.objectives : 0; }

cdmpsl_status cdmpsl_problem_evaluate(const cdmpsl_problem* problem, const double* x, double* f) {
  return guarded([&] {
    require(problem && x && f, "problem, x and f must be non-null");
    const auto d = static_cast<Eigen::Index>(problem->spec.dim);
    const cdmpsl::Vector y = cdmpsl::evaluate(problem->spec, Eigen::Map<const cdmpsl::Vector>(x, d));
    std::memcpy(f, y.data(), sizeof(double) * static_cast<std::size_t>(y.size()));
  });
}

cdmpsl_status cdmpsl_problem_register(const char* name, size_t dim, size_t objectives, const double* lower,
                                      const double* upper, cdmpsl_objective_fn fn, void* user) {
  return guarded([&] {
    require(name && lower && upper && fn, "name, bounds and callback must be non-null");
    require(dim >= 1, "dim must be >= 1");
    const auto d = static_cast<Eigen::Index>(dim);
    const cdmpsl::Vector lo = Eigen::Map<const cdmpsl::Vector>(lower, d);
    const cdmpsl::Vector hi = Eigen::Map<const cdmpsl::Vector>(upper, d);
    const std::string key = name;
    cdmpsl::Evaluator eval = [fn, user, objectives, key](const cdmpsl::Vector& x) {
      cdmpsl::Vector y(static_cast<Eigen::Index>(objectives));
      if (fn(x.data(), static_cast<size_t>(x.size()), y.data(), objectives, user) != 0) {
        cdmpsl::fail(cdmpsl::ErrorCode::InvalidData, "objective callback for '" + key + "' reported failure");
      }
      return y;
    };
    // Validate eagerly so a bad registration is reported here rather than at first use.
    cdmpsl::make_custom_problem(key, lo, hi, objectives, eval);
    cdmpsl::register_problem(key, [=](std::size_t requested) {
      if (requested != dim) {
        cdmpsl::fail(cdmpsl::ErrorCode::InvalidDimension,
                     "problem '" + key + "' is registered with d=" + std::to_string(dim) + ", requested d=" +
                         std::to_string(requested));
      }
      return cdmpsl::make_custom_problem(key, lo, hi, objectives, eval);
    });
  });
}

cdmpsl_status cdmpsl_hypervolume(const double* points, size_t rows, size_t objectives, const double* ref,
                                 double* out) {
  return guarded([&] {
    require((points || rows == 0) && ref && out, "points, ref and out must be non-null");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const cdmpsl::Matrix S = Eigen::Map<const RowMajor>(points, static_cast<Eigen::Index>(rows),
                                                        static_cast<Eigen::Index>(objectives));
    const cdmpsl::Vector r = Eigen::Map<const cdmpsl::Vector>(ref, static_cast<Eigen::Index>(objectives));
    *out = cdmpsl::hypervolume(S, r);
  });
}

cdmpsl_status cdmpsl_run_config_create(cdmpsl_run_config** out) {
  return guarded([&] {
    require(out, "out must be non-null");
    *out = new cdmpsl_run_config();
  });
}

void cdmpsl_run_config_destroy(cdmpsl_run_config* cfg) { delete cfg; }

cdmpsl_status cdmpsl_run_config_set(cdmpsl_run_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "cfg, key and value must be non-null");
    if (std::strcmp(key, "seed") == 0) {
      cdmpsl::ExperimentConfig tmp;
      cdmpsl::set_config_value(tmp, "seeds", value);
      if (tmp.seeds.size() != 1) cdmpsl::fail(cdmpsl::ErrorCode::Parse, "seed takes exactly one value");
      cfg->seed = tmp.seeds.front();
      return;
    }
    cdmpsl::ExperimentConfig next = cfg->cfg;
    cdmpsl::set_config_value(next, key, value);
    if (next.variants.size() != 1) cdmpsl::fail(cdmpsl::ErrorCode::Parse, "a single run takes exactly one variant");
    cfg->cfg = std::move(next);
  });
}

cdmpsl_status cdmpsl_run(const cdmpsl_problem* problem, const cdmpsl_run_config* cfg, cdmpsl_run_result** out) {
  return guarded([&] {
    require(problem && cfg && out, "problem, cfg and out must be non-null");
    auto r = std::make_unique<cdmpsl_run_result>();
    r->variant = cfg->cfg.variants.front();
    r->entry = problem->entry;
    cdmpsl::RunConfig rc = cdmpsl::apply_variant(cfg->cfg.run, r->variant);
    rc.seed = cfg->seed;
    r->result = cdmpsl::run(problem->spec, rc);
    *out = r.release();
  });
}

void cdmpsl_run_result_destroy(cdmpsl_run_result* result) { delete result; }

size_t cdmpsl_run_result_length(const cdmpsl_run_result* result) {
  return result ? result->result.hv_curve.size() : 0;
}

double cdmpsl_run_result_hv(const cdmpsl_run_result* result, size_t index) {
  return result && index < result->result.hv_curve.size() ? result->result.hv_curve[index] : 0.0;
}

size_t cdmpsl_run_result_cumulative_fe(const cdmpsl_run_result* result, size_t index) {
  return result && index < result->result.cumulative_fe.size() ? result->result.cumulative_fe[index] : 0;
}

int cdmpsl_run_result_f_cdm(const cdmpsl_run_result* result, size_t index) {
  return result && index < result->result.switch_trace.size() && result->result.switch_trace[index] ? 1 : 0;
}

size_t cdmpsl_run_result_evaluations(const cdmpsl_run_result* result) {
  return result ? result->result.evaluations : 0;
}

size_t cdmpsl_run_result_front_size(const cdmpsl_run_result* result) {
  return result ? static_cast<size_t>(result->result.front.rows()) : 0;
}

cdmpsl_status cdmpsl_run_result_front(const cdmpsl_run_result* result, double* out, size_t capacity) {
  return guarded([&] {
    require(result && out, "result and out must be non-null");
    const auto& F = result->result.front;
    require(capacity >= static_cast<size_t>(F.size()), "capacity smaller than front_size * objectives");
    for (Eigen::Index i = 0; i < F.rows(); ++i)
      for (Eigen::Index j = 0; j < F.cols(); ++j) out[i * F.cols() + j] = F(i, j);
  });
}

cdmpsl_timings cdmpsl_run_result_timings(const cdmpsl_run_result* result) {
  cdmpsl_timings t{};
  if (!result) return t;
  const auto& s = result->result.timings;
  t.gp_fit = s.gp_fit;
  t.training = s.training;
  t.conditional = s.conditional;
  t.unconditional = s.unconditional;
  t.genetic = s.genetic;
  t.selection = s.selection;
  t.evaluation = s.evaluation;
  t.total = s.total;
  return t;
}

cdmpsl_status cdmpsl_run_result_write(const cdmpsl_run_result* result, const char* directory,
                                      int record_wall_time) {
  return guarded([&] {
    require(result && directory, "result and directory must be non-null");
    const std::filesystem::path dir = directory;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) cdmpsl::fail(cdmpsl::ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
    cdmpsl::write_history(
        cdmpsl::history_from_run(result->result, result->entry, result->variant, record_wall_time != 0),
        dir / cdmpsl::kHistoryFile);
    cdmpsl::write_front(result->result, dir / cdmpsl::kFrontFile);
  });
}

cdmpsl_status cdmpsl_experiment_parse(const char* text, cdmpsl_experiment** out) {
  return guarded([&] {
    require(text && out, "text and out must be non-null");
    auto e = std::make_unique<cdmpsl_experiment>();
    e->cfg = cdmpsl::parse_config(text);
    *out = e.release();
  });
}

cdmpsl_status cdmpsl_experiment_load(const char* path, cdmpsl_experiment** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    auto e = std::make_unique<cdmpsl_experiment>();
    e->cfg = cdmpsl::load_config(path);
    *out = e.release();
  });
}

cdmpsl_status cdmpsl_experiment_create(cdmpsl_experiment** out) {
  return guarded([&] {
    require(out, "out must be non-null");
    *out = new cdmpsl_experiment();
  });
}

void cdmpsl_experiment_destroy(cdmpsl_experiment* exp) { delete exp; }

cdmpsl_status cdmpsl_experiment_set(cdmpsl_experiment* exp, const char* key, const char* value) {
  return guarded([&] {
    require(exp && key && value, "exp, key and value must be non-null");
    cdmpsl::set_config_value(exp->cfg, key, value);
  });
}

cdmpsl_status cdmpsl_experiment_validate(const cdmpsl_experiment* exp) {
  return guarded([&] {
    require(exp, "exp must be non-null");
    cdmpsl::validate(exp->cfg);
  });
}

size_t cdmpsl_experiment_format(const cdmpsl_experiment* exp, char* buffer, size_t capacity) {
  if (!exp) return 0;
  const std::string text = cdmpsl::format_config(exp->cfg);
  if (buffer && capacity > 0) {
    const size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
  return text.size();
}

cdmpsl_status cdmpsl_experiment_execute(const cdmpsl_experiment* exp, cdmpsl_summary** out) {
  return guarded([&] {
    require(exp && out, "exp and out must be non-null");
    auto s = std::make_unique<cdmpsl_summary>();
    s->summary = cdmpsl::execute_experiment(exp->cfg);
    for (const auto& c : s->summary.cells) {
      s->directories.push_back(c.directory.string());
      s->variant_names.emplace_back(cdmpsl::to_string(c.variant));
    }
    for (const auto& m : s->summary.medians) s->median_variant_names.emplace_back(cdmpsl::to_string(m.variant));
    *out = s.release();
  });
}

void cdmpsl_summary_destroy(cdmpsl_summary* summary) { delete summary; }

size_t cdmpsl_summary_cell_count(const cdmpsl_summary* summary) {
  return summary ? summary->summary.cells.size() : 0;
}

size_t cdmpsl_summary_failures(const cdmpsl_summary* summary) { return summary ? summary->summary.failures : 0; }

cdmpsl_status cdmpsl_summary_cell(const cdmpsl_summary* summary, size_t index, cdmpsl_cell_info* out) {
  return guarded([&] {
    require(summary && out, "summary and out must be non-null");
    require(index < summary->summary.cells.size(), "cell index out of range");
    const auto& c = summary->summary.cells[index];
    out->problem = c.problem.name.c_str();
    out->dim = c.problem.dim;
    out->variant = summary->variant_names[index].c_str();
    out->seed = c.seed;
    out->ok = c.ok ? 1 : 0;
    out->final_hv = c.final_hv;
    out->total_seconds = c.timings.total;
    out->training_seconds = c.timings.training;
    out->directory = summary->directories[index].c_str();
    out->error = c.error.c_str();
  });
}

size_t cdmpsl_summary_median_count(const cdmpsl_summary* summary) {
  return summary ? summary->summary.medians.size() : 0;
}

cdmpsl_status cdmpsl_summary_median(const cdmpsl_summary* summary, size_t index, cdmpsl_median_info* out) {
  return guarded([&] {
    require(summary && out, "summary and out must be non-null");
    require(index < summary->summary.medians.size(), "median index out of range");
    const auto& m = summary->summary.medians[index];
    out->problem = m.problem.name.c_str();
    out->dim = m.problem.dim;
    out->variant = summary->median_variant_names[index].c_str();
    out->median_final_hv = m.median_final_hv;
    out->runs = m.runs;
  });
}

cdmpsl_status cdmpsl_plot(const char* const* history_paths, size_t count, const char* out_path) {
  return guarded([&] {
    require(out_path && (history_paths || count == 0), "paths and out_path must be non-null");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      require(history_paths[i], "history path must be non-null");
      paths.emplace_back(history_paths[i]);
    }
    cdmpsl::emit_plot(paths, out_path);
  });
}

}  // extern "C"
