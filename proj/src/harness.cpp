#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "indicators.hpp"
#include "problems.hpp"

namespace cdmpsl {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void parse_fail(const std::string& what) { fail(ErrorCode::Parse, what); }

std::uint64_t parse_u64(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    parse_fail("malformed integer '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view s) { return static_cast<std::size_t>(parse_u64(s)); }

double parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v)) {
    parse_fail("malformed number '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  parse_fail("malformed boolean '" + std::string(s) + "'");
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

std::string format_sig10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

struct KeySpec {
  std::string_view section;
  std::string_view key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::vector<ProblemEntry> parse_problems(std::string_view value) {
  std::vector<ProblemEntry> out;
  if (trim(value).empty()) return out;
  for (auto item : split(value, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) parse_fail("problem entry '" + std::string(item) + "' must be name:d");
    ProblemEntry p;
    p.name = std::string(trim(item.substr(0, colon)));
    std::transform(p.name.begin(), p.name.end(), p.name.begin(), [](unsigned char c) { return std::tolower(c); });
    p.dim = parse_count(item.substr(colon + 1));
    if (p.name.empty()) parse_fail("problem entry '" + std::string(item) + "' has no name");
    out.push_back(std::move(p));
  }
  return out;
}

#define CDMPSL_COUNT_KEY(sec, name, field)                                               \
  KeySpec {                                                                              \
    sec, #name, [](ExperimentConfig& c, std::string_view v) { field = parse_count(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(field); }                  \
  }
#define CDMPSL_REAL_KEY(sec, name, field)                                               \
  KeySpec {                                                                             \
    sec, #name, [](ExperimentConfig& c, std::string_view v) { field = parse_real(v); }, \
        [](const ExperimentConfig& c) { return format_real(field); }                    \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"", "problems", [](ExperimentConfig& c, std::string_view v) { c.problems = parse_problems(v); },
       [](const ExperimentConfig& c) {
         return join(c.problems, [](const ProblemEntry& p) { return p.name + ":" + std::to_string(p.dim); });
       }},
      {"", "seeds",
       [](ExperimentConfig& c, std::string_view v) {
         c.seeds.clear();
         if (trim(v).empty()) return;
         for (auto s : split(v, ',')) c.seeds.push_back(parse_u64(s));
       },
       [](const ExperimentConfig& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }},
      {"", "variant",
       [](ExperimentConfig& c, std::string_view v) {
         c.variants.clear();
         for (auto s : split(v, ',')) c.variants.push_back(parse_variant(s));
       },
       [](const ExperimentConfig& c) {
         return join(c.variants, [](Variant v) { return std::string(to_string(v)); });
       }},
      {"", "output_dir", [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      CDMPSL_COUNT_KEY("", jobs, c.jobs),
      {"", "record_wall_time", [](ExperimentConfig& c, std::string_view v) { c.record_wall_time = parse_bool(v); },
       [](const ExperimentConfig& c) { return std::string(c.record_wall_time ? "true" : "false"); }},

      CDMPSL_COUNT_KEY("run", n_init, c.run.n_init),
      CDMPSL_COUNT_KEY("run", iterations, c.run.iterations),
      CDMPSL_COUNT_KEY("run", batch, c.run.batch),
      CDMPSL_REAL_KEY("run", extraction_fraction, c.run.extraction_fraction),
      CDMPSL_COUNT_KEY("run", switch_window, c.run.switch_window),
      CDMPSL_REAL_KEY("run", switch_threshold, c.run.switch_threshold),
      {"run", "switch_mode",
       [](ExperimentConfig& c, std::string_view v) {
         v = trim(v);
         if (v == "sliding") c.run.switch_mode = SwitchMode::Sliding;
         else if (v == "blocked") c.run.switch_mode = SwitchMode::Blocked;
         else parse_fail("switch_mode must be 'sliding' or 'blocked', got '" + std::string(v) + "'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.run.switch_mode == SwitchMode::Sliding ? "sliding" : "blocked");
       }},

      CDMPSL_COUNT_KEY("generation", n_conditional, c.run.generation.n_conditional),
      CDMPSL_COUNT_KEY("generation", n_unconditional, c.run.generation.n_unconditional),
      CDMPSL_REAL_KEY("generation", max_gradient_norm, c.run.generation.max_gradient_norm),

      CDMPSL_COUNT_KEY("train", epochs, c.run.train.epochs),
      CDMPSL_COUNT_KEY("train", batch, c.run.train.batch),
      CDMPSL_REAL_KEY("train", lr, c.run.train.lr),
      CDMPSL_REAL_KEY("train", adam_beta1, c.run.train.adam_beta1),
      CDMPSL_REAL_KEY("train", adam_beta2, c.run.train.adam_beta2),
      CDMPSL_REAL_KEY("train", adam_eps, c.run.train.adam_eps),

      CDMPSL_COUNT_KEY("schedule", steps, c.run.steps),
      CDMPSL_REAL_KEY("schedule", beta_min, c.run.beta_min),
      CDMPSL_REAL_KEY("schedule", beta_max, c.run.beta_max),

      CDMPSL_COUNT_KEY("gp", restarts, c.run.gp.restarts),
      CDMPSL_COUNT_KEY("gp", iterations, c.run.gp.iterations),
      CDMPSL_REAL_KEY("gp", tolerance, c.run.gp.tolerance),

      CDMPSL_REAL_KEY("ga", eta_c, c.run.ga.eta_c),
      CDMPSL_REAL_KEY("ga", eta_m, c.run.ga.eta_m),
      CDMPSL_REAL_KEY("ga", crossover_rate, c.run.ga.crossover_rate),
      CDMPSL_REAL_KEY("ga", mutation_rate, c.run.ga.mutation_rate),
  };
  return table;
}

#undef CDMPSL_COUNT_KEY
#undef CDMPSL_REAL_KEY

const KeySpec* find_key(std::string_view section, std::string_view key) {
  if (section.empty() && key == "variants") key = "variant";
  for (const auto& k : key_table()) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

std::string csv_escape_free(const std::string& s) {
  if (s.find_first_of(",\n\"") != std::string::npos) {
    fail(ErrorCode::InvalidArgument, "history field '" + s + "' contains a delimiter");
  }
  return s;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoWeight: return "no_weight";
    case Variant::NoCondition: return "no_condition";
    case Variant::NoSwitch: return "no_switch";
    case Variant::NoDm: return "no_dm";
    case Variant::RandomBaseline: return "random_baseline";
  }
  return "unknown";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {Variant::Full,     Variant::NoWeight, Variant::NoCondition,
                                         Variant::NoSwitch, Variant::NoDm,     Variant::RandomBaseline};
  return v;
}

Variant parse_variant(std::string_view name) {
  name = trim(name);
  for (auto v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  parse_fail("unknown variant '" + std::string(name) + "'");
}

RunConfig apply_variant(RunConfig run, Variant v) {
  switch (v) {
    case Variant::Full: break;
    case Variant::NoWeight: run.weighting = WeightMode::Uniform; break;
    case Variant::NoCondition:
      run.generation.n_unconditional += run.generation.n_conditional;
      run.generation.n_conditional = 0;
      break;
    case Variant::NoSwitch: run.switch_threshold = 0.0; break;
    case Variant::NoDm: run.policy = OperatorPolicy::GeneticOnly; break;
    case Variant::RandomBaseline: run.policy = OperatorPolicy::RandomPool; break;
  }
  return run;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  std::string_view section;
  const auto dot = key.find('.');
  if (dot != std::string_view::npos) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
  }
  const KeySpec* spec = find_key(section, key);
  if (!spec) {
    parse_fail("unknown key '" + std::string(key) + "'" +
               (section.empty() ? std::string() : " in [" + std::string(section) + "]"));
  }
  spec->set(cfg, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  bool saw_problems = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::vector<std::string_view> known = {"run", "generation", "train", "schedule", "gp", "ga"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        parse_fail(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) parse_fail(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const KeySpec* spec = find_key(section, key);
    if (!spec) {
      parse_fail(where + "unknown key '" + std::string(key) + "'" + (section.empty() ? "" : " in [" + section + "]"));
    }
    try {
      spec->set(cfg, value);
    } catch (const Error& e) {
      parse_fail(where + e.what());
    }
    if (section.empty() && key == "problems") saw_problems = true;
  }
  if (!saw_problems || cfg.problems.empty()) parse_fail("configuration names no problems");
  if (cfg.seeds.empty()) parse_fail("configuration names no seeds");
  try {
    validate(cfg);
  } catch (const Error& e) {
    parse_fail(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string_view current;
  for (const auto& k : key_table()) {
    if (k.section != current) {
      out += "\n[" + std::string(k.section) + "]\n";
      current = k.section;
    }
    out += std::string(k.key) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.problems.empty()) fail(ErrorCode::InvalidArgument, "no problems configured");
  if (cfg.seeds.empty()) fail(ErrorCode::InvalidArgument, "no seeds configured");
  if (cfg.variants.empty()) fail(ErrorCode::InvalidArgument, "no variants configured");
  if (cfg.jobs < 1) fail(ErrorCode::InvalidArgument, "jobs must be >= 1");
  cfg.run.validate();
  for (const auto& p : cfg.problems) {
    make_problem(p.name, p.dim);
  }
}

std::vector<HistoryRecord> history_from_run(const RunResult& run, const ProblemEntry& problem, Variant variant,
                                            bool record_wall_time) {
  std::vector<HistoryRecord> out;
  for (std::size_t i = 0; i < run.hv_curve.size(); ++i) {
    HistoryRecord r;
    r.problem = problem.name;
    r.d = problem.dim;
    r.seed = run.seed;
    r.variant = std::string(to_string(variant));
    r.iteration = i;
    r.cumulative_fe = run.cumulative_fe[i];
    r.hv = run.hv_curve[i];
    r.f_cdm = run.switch_trace[i];
    r.wall_seconds = record_wall_time ? run.wall_seconds[i] : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

void write_history(const std::vector<HistoryRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write history '" + path.string() + "'");
  out << "problem,d,seed,variant,iteration,cumulative_fe,hv,f_cdm,wall_seconds\n";
  for (const auto& r : records) {
    out << csv_escape_free(r.problem) << ',' << r.d << ',' << r.seed << ',' << csv_escape_free(r.variant) << ','
        << r.iteration << ',' << r.cumulative_fe << ',' << format_sig10(r.hv) << ',' << (r.f_cdm ? 1 : 0) << ','
        << format_sig10(r.wall_seconds) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "failed while writing history '" + path.string() + "'");
}

std::vector<HistoryRecord> read_history(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open history '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "problem,d,seed,variant,iteration,cumulative_fe,hv,f_cdm,wall_seconds") {
    fail(ErrorCode::Parse, path.string() + ": missing or unexpected history header");
  }
  std::vector<HistoryRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) fail(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": expected 9 fields");
    try {
      HistoryRecord r;
      r.problem = std::string(f[0]);
      r.d = parse_count(f[1]);
      r.seed = parse_u64(f[2]);
      r.variant = std::string(f[3]);
      r.iteration = parse_count(f[4]);
      r.cumulative_fe = parse_count(f[5]);
      r.hv = parse_real(f[6]);
      r.f_cdm = parse_bool(f[7]);
      r.wall_seconds = parse_real(f[8]);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      fail(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_front(const RunResult& run, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write front '" + path.string() + "'");
  const auto d = run.archive.X().cols();
  const auto m = run.archive.Y().cols();
  for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << j + 1;
  for (Eigen::Index j = 0; j < m; ++j) out << ",f" << j + 1;
  out << '\n';
  for (auto idx : run.front_indices) {
    const auto i = static_cast<Eigen::Index>(idx);
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << format_sig10(run.archive.X()(i, j));
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_sig10(run.archive.Y()(i, j));
    out << '\n';
  }
  if (!out) fail(ErrorCode::Io, "failed while writing front '" + path.string() + "'");
}

fs::path run_directory(const fs::path& output_dir, const ProblemEntry& problem, Variant variant,
                       std::uint64_t seed) {
  return output_dir / (problem.name + "_" + std::to_string(problem.dim)) / std::string(to_string(variant)) /
         std::to_string(seed);
}

fs::path resolve_output_dir(const fs::path& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return kDefaultOutputDir;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ExperimentSummary execute_experiment(const ExperimentConfig& requested) {
  validate(requested);
  ExperimentConfig cfg = requested;
  cfg.output_dir = resolve_output_dir(requested.output_dir);
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + cfg.output_dir.string() + "': " + ec.message());
  {
    std::ofstream snap(cfg.output_dir / kExperimentSnapshotFile, std::ios::binary | std::ios::trunc);
    if (!snap) fail(ErrorCode::Io, "cannot write experiment snapshot in '" + cfg.output_dir.string() + "'");
    snap << format_config(cfg);
  }

  ExperimentSummary summary;
  for (const auto& p : cfg.problems)
    for (auto v : cfg.variants)
      for (auto s : cfg.seeds) {
        CellResult cell;
        cell.problem = p;
        cell.variant = v;
        cell.seed = s;
        cell.directory = run_directory(cfg.output_dir, p, v, s);
        summary.cells.push_back(std::move(cell));
      }

  auto run_cell = [&cfg](CellResult& cell) {
    try {
      const ProblemSpec spec = make_problem(cell.problem.name, cell.problem.dim);
      RunConfig rc = apply_variant(cfg.run, cell.variant);
      rc.seed = cell.seed;
      const RunResult result = run(spec, rc);

      fs::create_directories(cell.directory);
      ExperimentConfig single = cfg;
      single.problems = {cell.problem};
      single.seeds = {cell.seed};
      single.variants = {cell.variant};
      single.jobs = 1;
      {
        std::ofstream snap(cell.directory / kRunSnapshotFile, std::ios::binary | std::ios::trunc);
        if (!snap) fail(ErrorCode::Io, "cannot write run snapshot in '" + cell.directory.string() + "'");
        snap << format_config(single);
      }
      write_history(history_from_run(result, cell.problem, cell.variant, cfg.record_wall_time),
                    cell.directory / kHistoryFile);
      write_front(result, cell.directory / kFrontFile);
      cell.final_hv = result.hv_curve.back();
      cell.timings = result.timings;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  };

  const std::size_t workers = std::min(cfg.jobs, summary.cells.size());
  if (workers <= 1) {
    for (auto& cell : summary.cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < summary.cells.size(); i = next++) run_cell(summary.cells[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& p : cfg.problems)
    for (auto v : cfg.variants) {
      std::vector<double> finals;
      for (const auto& c : summary.cells) {
        if (c.ok && c.problem == p && c.variant == v) finals.push_back(c.final_hv);
      }
      summary.medians.push_back({p, v, median(finals), finals.size()});
    }
  summary.failures = static_cast<std::size_t>(
      std::count_if(summary.cells.begin(), summary.cells.end(), [](const CellResult& c) { return !c.ok; }));
  return summary;
}

std::vector<PlotSeries> aggregate_histories(const std::vector<fs::path>& paths) {
  if (paths.empty()) fail(ErrorCode::InvalidArgument, "plot needs at least one history file");
  struct Group {
    std::vector<double> fe;
    fs::path first;
    std::vector<std::vector<double>> hv;
  };
  std::map<std::string, Group> groups;
  std::vector<std::string> order;
  for (const auto& path : paths) {
    const auto records = read_history(path);
    if (records.empty()) fail(ErrorCode::Parse, path.string() + ": history has no records");
    const auto& r0 = records.front();
    const std::string label = r0.problem + "_" + std::to_string(r0.d) + "/" + r0.variant;
    std::vector<double> fe, hv;
    for (const auto& r : records) {
      fe.push_back(static_cast<double>(r.cumulative_fe - r0.cumulative_fe));
      hv.push_back(r.hv);
    }
    auto [it, inserted] = groups.try_emplace(label);
    if (inserted) {
      it->second.fe = fe;
      it->second.first = path;
      order.push_back(label);
    } else if (it->second.fe != fe) {
      fail(ErrorCode::Alignment,
           path.string() + ": FE grid does not match '" + it->second.first.string() + "' for series " + label);
    }
    it->second.hv.push_back(std::move(hv));
  }
  std::vector<PlotSeries> out;
  for (const auto& label : order) {
    const auto& g = groups.at(label);
    PlotSeries s;
    s.label = label;
    s.fe = g.fe;
    s.runs = g.hv.size();
    for (std::size_t i = 0; i < g.fe.size(); ++i) {
      std::vector<double> column;
      for (const auto& run : g.hv) column.push_back(run[i]);
      s.min.push_back(*std::min_element(column.begin(), column.end()));
      s.max.push_back(*std::max_element(column.begin(), column.end()));
      s.median.push_back(median(std::move(column)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PlotSeries> emit_plot(const std::vector<fs::path>& history_paths, const fs::path& out_path) {
  const auto series = aggregate_histories(history_paths);

  fs::path csv_path = out_path;
  csv_path.replace_extension(".csv");
  {
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) fail(ErrorCode::Io, "cannot write '" + csv_path.string() + "'");
    csv << "series,fe,median,min,max,runs\n";
    for (const auto& s : series) {
      for (std::size_t i = 0; i < s.fe.size(); ++i) {
        csv << s.label << ',' << format_sig10(s.fe[i]) << ',' << format_sig10(s.median[i]) << ','
            << format_sig10(s.min[i]) << ',' << format_sig10(s.max[i]) << ',' << s.runs << '\n';
      }
    }
  }

  constexpr double width = 800, height = 500, left = 80, right = 220, top = 30, bottom = 60;
  double x_max = 0.0, y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  for (const auto& s : series) {
    x_max = std::max(x_max, s.fe.back());
    y_min = std::min(y_min, *std::min_element(s.min.begin(), s.min.end()));
    y_max = std::max(y_max, *std::max_element(s.max.begin(), s.max.end()));
  }
  if (x_max <= 0.0) x_max = 1.0;
  if (!(y_max > y_min)) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double pw = width - left - right, ph = height - top - bottom;
  auto sx = [&](double x) { return left + pw * x / x_max; };
  auto sy = [&](double y) { return top + ph * (1.0 - (y - y_min) / (y_max - y_min)); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

  std::ofstream svg(out_path, std::ios::binary | std::ios::trunc);
  if (!svg) fail(ErrorCode::Io, "cannot write plot '" + out_path.string() + "'");
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_max * i / 5.0, yv = y_min + (y_max - y_min) * i / 5.0;
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << format_sig10(std::round(xv * 100) / 100) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << format_sig10(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\">FEs after initialization</text>\n";
  svg << "<text x=\"20\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 20 " << top + ph / 2
      << ")\" text-anchor=\"middle\">Hypervolume</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % (sizeof(palette) / sizeof(palette[0]))];
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.fe.size(); ++i) svg << sx(s.fe[i]) << ',' << sy(s.max[i]) << ' ';
    for (std::size_t i = s.fe.size(); i-- > 0;) svg << sx(s.fe[i]) << ',' << sy(s.min[i]) << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.fe.size(); ++i) svg << sx(s.fe[i]) << ',' << sy(s.median[i]) << ' ';
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(k) + 8;
    svg << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 35 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\">" << s.label << " (n=" << s.runs
        << ")</text>\n";
  }
  svg << "</svg>\n";
  if (!svg) fail(ErrorCode::Io, "failed while writing plot '" + out_path.string() + "'");
  return series;
}

}  // namespace cdmpsl
