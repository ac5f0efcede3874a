#include "sqn/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace sqn::harness {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  const auto colon = value.find(':');
  if (colon != std::string::npos) {
    const auto lo = std::stoull(value.substr(0, colon));
    const auto hi = std::stoull(value.substr(colon + 1));
    if (hi < lo) throw InvalidInput("spec: bad seed range " + value);
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::istringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw InvalidInput("spec: empty seed list");
  return seeds;
}

void check_name(const std::string& name) {
  if (name.empty()) throw InvalidInput("spec: empty config name");
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      throw InvalidInput("spec: config name '" + name + "' must be [A-Za-z0-9_-]");
}

void apply_config_key(NamedConfig& nc, const std::string& key, const std::string& value) {
  auto& cfg = nc.cfg;
  if (key == "preconditioner") {
    cfg.kind = preconditioner_from_string(value);
  } else if (key == "eta") {
    if (value == "1/L") nc.eta_inv_smoothness = true;
    else cfg.eta = std::stod(value);
  } else if (key == "batch") {
    cfg.batch_size = std::stoi(value);
  } else if (key == "rho") {
    cfg.rho = std::stod(value);
  } else if (key == "m_lower") {
    cfg.curvature.m_lower = std::stod(value);
  } else if (key == "m_upper") {
    if (value == "none") cfg.curvature.m_upper = std::numeric_limits<double>::infinity();
    else if (value == "L") nc.m_upper_smoothness = true;
    else cfg.curvature.m_upper = std::stod(value);
  } else if (key == "p_cap") {
    cfg.curvature.p_cap = std::stod(value);
  } else if (key == "memory") {
    cfg.memory = std::stoul(value);
  } else if (key == "h0") {
    if (value == "1/L") nc.h0_inv_smoothness = true;
    else cfg.h0_scale = std::stod(value);
  } else if (key == "snapshots") {
    cfg.record_snapshots = (value == "true" || value == "1");
  } else if (key == "snapshot_stride") {
    cfg.snapshot_stride = std::stol(value);
  } else if (key == "restart") {
    if (value == "none") cfg.restart_interval.reset();
    else cfg.restart_interval = std::stol(value);
  } else {
    throw InvalidInput("spec: unknown config key '" + key + "'");
  }
}

void apply_global_key(ExperimentSpec& spec, const std::string& key,
                      const std::string& value) {
  auto& p = spec.problem;
  if (key == "problem") {
    if (value != "quadratic" && value != "logistic")
      throw InvalidInput("spec: unknown problem kind '" + value + "'");
    p.kind = value;
  } else if (key == "dim") p.dim = std::stoi(value);
  else if (key == "kappa") p.kappa = std::stod(value);
  else if (key == "wishart_scale") p.wishart_scale = std::stod(value);
  else if (key == "problem_seed") p.problem_seed = std::stoull(value);
  else if (key == "x0") {
    if (value != "gaussian" && value != "zero")
      throw InvalidInput("spec: x0 must be 'gaussian' or 'zero'");
    p.x0_mode = value;
  } else if (key == "dataset") p.dataset = value;
  else if (key == "format") {
    if (value == "libsvm") p.format = DatasetFormat::libsvm;
    else if (value == "csv") p.format = DatasetFormat::csv;
    else throw InvalidInput("spec: unknown dataset format '" + value + "'");
  } else if (key == "lambda_lr") p.lambda_lr = std::stod(value);
  else if (key == "iters") spec.iters = std::stol(value);
  else if (key == "seeds") spec.seeds = parse_seed_list(value);
  else if (key == "stride") spec.stride = std::stol(value);
  else throw InvalidInput("spec: unknown key '" + key + "'");
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text) {
  ExperimentSpec spec;
  spec.raw_text = text;
  NamedConfig* current = nullptr;

  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw InvalidInput("spec line " + std::to_string(line_no) + ": unterminated section");
      auto inner = trim(line.substr(1, line.size() - 2));
      if (inner.rfind("config", 0) != 0)
        throw InvalidInput("spec line " + std::to_string(line_no) + ": unknown section");
      auto name = trim(inner.substr(6));
      check_name(name);
      spec.configs.push_back({});
      spec.configs.back().name = name;
      current = &spec.configs.back();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("spec line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (current) apply_config_key(*current, key, value);
      else apply_global_key(spec, key, value);
    } catch (const std::invalid_argument& e) {
      throw InvalidInput("spec line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  if (spec.configs.empty()) throw InvalidInput("spec: no [config ...] sections");
  if (spec.seeds.empty()) for (std::uint64_t s = 0; s < 50; ++s) spec.seeds.push_back(s);
  return spec;
}

ExperimentSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    // Manifest round-trip: re-parse the embedded spec with the manifest's
    // effective seeds and stride.
    const json manifest = json::parse(text);
    ExperimentSpec spec = parse_spec(manifest.at("spec_text").get<std::string>());
    spec.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
    spec.stride = manifest.at("stride").get<long>();
    return spec;
  }
  return parse_spec(text);
}

std::unique_ptr<StochasticProblem> build_problem(const ProblemSpec& spec) {
  if (spec.kind == "quadratic") {
    return std::make_unique<QuadraticProblem>(
        gen_quadratic(spec.problem_seed, spec.dim, spec.kappa, spec.wishart_scale));
  }
  if (spec.dataset.empty()) throw InvalidInput("spec: logistic problem needs a dataset");
  return std::make_unique<LogisticProblem>(
      logistic_from_file(spec.dataset, spec.format, spec.lambda_lr));
}

Vec initial_point(const ProblemSpec& spec, Eigen::Index d) {
  if (spec.x0_mode == "zero") return Vec::Zero(d);
  std::mt19937_64 rng(spec.problem_seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec x0(d);
  for (Eigen::Index i = 0; i < d; ++i) x0(i) = normal(rng);
  return x0;
}

std::uint64_t problem_fingerprint(const StochasticProblem& problem) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  if (const auto* q = dynamic_cast<const QuadraticProblem*>(&problem)) {
    mix(q->hessian().data(), sizeof(double) * q->hessian().size());
    mix(q->noise_covariance().data(), sizeof(double) * q->noise_covariance().size());
  } else if (const auto* l = dynamic_cast<const LogisticProblem*>(&problem)) {
    mix(l->features().data(), sizeof(double) * l->features().size());
    mix(l->labels().data(), sizeof(int) * l->labels().size());
  }
  return h;
}

void write_run_csv(const std::string& path, const RunRecord& record, long n_samples) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << "iter,epoch,gap,accepted,lambda_min,lambda_max,psi,wall_time_ns\n";
  for (const auto& row : record.rows) {
    out << row.iter << ',';
    if (n_samples > 0)
      out << fmt(static_cast<double>(row.grad_evals) / static_cast<double>(n_samples));
    out << ',';
    out << (std::isfinite(row.gap) ? fmt(row.gap) : "nan") << ',';
    out << (row.accepted ? 1 : 0) << ',';
    if (row.lambda_min) out << fmt(*row.lambda_min);
    out << ',';
    if (row.lambda_max) out << fmt(*row.lambda_max);
    out << ',';
    if (row.psi) out << fmt(*row.psi);
    out << ',';
    out << row.wall_time_ns << '\n';
  }
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

namespace {

struct ParsedRun {
  std::string path;
  std::vector<long> iters;
  std::vector<double> epochs;
  std::vector<double> gaps;
  bool diverged = false;
};

ParsedRun read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  ParsedRun run;
  run.path = path;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + ": empty file");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) throw InvalidInput(path + ": malformed row");
    run.iters.push_back(std::stol(cells[0]));
    run.epochs.push_back(cells[1].empty() ? 0.0 : std::stod(cells[1]));
    const double gap = std::stod(cells[2]);
    run.gaps.push_back(gap);
    if (!std::isfinite(gap)) run.diverged = true;
  }
  return run;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<std::string>& run_csv_paths) {
  if (run_csv_paths.empty()) throw InvalidInput("summarize: no run files");
  std::vector<ParsedRun> runs;
  runs.reserve(run_csv_paths.size());
  for (const auto& path : run_csv_paths) runs.push_back(read_run_csv(path));

  const ParsedRun* reference = nullptr;
  int n_diverged = 0;
  for (const auto& run : runs) {
    if (run.diverged) {
      ++n_diverged;
      continue;
    }
    if (!reference) {
      reference = &run;
    } else if (run.iters != reference->iters) {
      throw InvalidInput("summarize: iteration grids differ between " +
                         reference->path + " and " + run.path);
    }
  }
  if (!reference)
    throw InvalidInput("summarize: every run diverged; nothing to summarize");

  std::vector<SummaryRow> table;
  table.reserve(reference->iters.size());
  for (std::size_t i = 0; i < reference->iters.size(); ++i) {
    std::vector<double> sample;
    for (const auto& run : runs)
      if (!run.diverged) sample.push_back(run.gaps[i]);
    SummaryRow row;
    row.iter = reference->iters[i];
    row.epoch = reference->epochs[i];
    row.q05 = quantile_type7(sample, 0.05);
    row.q25 = quantile_type7(sample, 0.25);
    row.median = quantile_type7(sample, 0.50);
    row.q75 = quantile_type7(sample, 0.75);
    row.q95 = quantile_type7(sample, 0.95);
    row.n_runs = static_cast<int>(sample.size());
    row.n_diverged = n_diverged;
    table.push_back(row);
  }
  return table;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << "iter,epoch,gap_q05,gap_q25,gap_median,gap_q75,gap_q95,n_runs,n_diverged\n";
  for (const auto& r : rows)
    out << r.iter << ',' << fmt(r.epoch) << ',' << fmt(r.q05) << ',' << fmt(r.q25)
        << ',' << fmt(r.median) << ',' << fmt(r.q75) << ',' << fmt(r.q95) << ','
        << r.n_runs << ',' << r.n_diverged << '\n';
}

namespace {

struct Cell {
  std::string config_name;
  OptimizerConfig cfg;
  std::uint64_t seed = 0;
  std::optional<double> eta;  // sweep cells carry the eta in the filename
};

OptimizerConfig resolve_config(const NamedConfig& nc, const StochasticProblem& problem,
                               long iters, long stride) {
  OptimizerConfig cfg = nc.cfg;
  if (nc.eta_inv_smoothness || nc.h0_inv_smoothness || nc.m_upper_smoothness) {
    const auto l = problem.smoothness();
    if (!l) throw InvalidInput("config '" + nc.name + "' needs the smoothness constant");
    if (nc.eta_inv_smoothness) cfg.eta = 1.0 / *l;
    if (nc.h0_inv_smoothness) cfg.h0_scale = 1.0 / *l;
    if (nc.m_upper_smoothness) cfg.curvature.m_upper = *l;
  }
  cfg.max_iters = iters;
  cfg.metric_stride = stride;
  return cfg;
}

ExperimentResult execute_cells(const ExperimentSpec& spec, std::vector<Cell> cells,
                               const RunOptions& opts, bool sweep_mode) {
  fs::create_directories(opts.out_dir);
  {  // fail before any run if the output directory is unwritable
    const auto probe = fs::path(opts.out_dir) / ".writable";
    std::ofstream test(probe);
    if (!test) throw InvalidInput("output directory not writable: " + opts.out_dir);
    test.close();
    fs::remove(probe);
  }

  const auto problem = build_problem(spec.problem);
  const Vec x0 = initial_point(spec.problem, problem->dim());
  const long n_samples = problem->n_samples();

  struct CellOutcome {
    CellResult result;
    RunRecord record;
  };
  std::vector<CellOutcome> outcomes(cells.size());

  unsigned jobs = opts.jobs > 0 ? static_cast<unsigned>(opts.jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      const Cell& cell = cells[i];
      auto& out = outcomes[i];
      out.result.config = cell.config_name;
      out.result.seed = cell.seed;
      out.result.eta = cell.eta;
      try {
        out.record = run(*problem, cell.cfg, x0);
        out.result.diverged = out.record.diverged;
      } catch (const std::exception& e) {
        out.result.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Single collector writes everything.
  ExperimentResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& out = outcomes[i];
    if (out.result.error.empty()) {
      std::string name = cells[i].config_name;
      if (cells[i].eta) name += "_eta" + fmt_short(*cells[i].eta);
      name += "_seed" + std::to_string(cells[i].seed) + ".csv";
      const auto path = (fs::path(opts.out_dir) / name).string();
      write_run_csv(path, out.record, n_samples);
      out.result.csv_path = path;
    }
    result.cells.push_back(out.result);
  }

  // One summary per (config[, eta]) group, skipping groups where every seed
  // diverged or failed.
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (const auto& cell : result.cells) {
    if (cell.csv_path.empty()) continue;
    std::string key = cell.config;
    if (cell.eta) key += "_eta" + fmt_short(*cell.eta);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(cell.csv_path);
  }
  for (const auto& [key, paths] : groups) {
    bool all_diverged = true;
    for (const auto& cell : result.cells)
      if (!cell.csv_path.empty() && !cell.diverged) {
        std::string k = cell.config;
        if (cell.eta) k += "_eta" + fmt_short(*cell.eta);
        if (k == key) { all_diverged = false; break; }
      }
    if (all_diverged) continue;
    const auto path = (fs::path(opts.out_dir) / ("summary_" + key + ".csv")).string();
    write_summary_csv(path, summarize(paths));
    result.summary_paths.push_back(path);
  }

  if (sweep_mode) {
    std::ofstream stab((fs::path(opts.out_dir) / "stability.csv").string());
    stab << "config,eta,n_runs,n_diverged,n_failed\n";
    std::vector<std::pair<std::string, std::array<int, 3>>> tally;
    for (const auto& cell : result.cells) {
      std::string key = cell.config + "," + (cell.eta ? fmt_short(*cell.eta) : "");
      auto it = std::find_if(tally.begin(), tally.end(),
                             [&](const auto& t) { return t.first == key; });
      if (it == tally.end()) {
        tally.push_back({key, {0, 0, 0}});
        it = std::prev(tally.end());
      }
      ++it->second[0];
      if (cell.diverged) ++it->second[1];
      if (!cell.error.empty()) ++it->second[2];
    }
    for (const auto& [key, counts] : tally)
      stab << key << ',' << counts[0] << ',' << counts[1] << ',' << counts[2] << '\n';
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["spec_text"] = spec.raw_text;
  manifest["seeds"] = spec.seeds;
  manifest["stride"] = spec.stride;
  manifest["iters"] = spec.iters;
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(problem_fingerprint(*problem)));
  manifest["problem_fingerprint"] = fp;
  manifest["cells"] = json::array();
  for (const auto& cell : result.cells) {
    json c;
    c["config"] = cell.config;
    c["seed"] = cell.seed;
    if (cell.eta) c["eta"] = *cell.eta;
    c["csv"] = cell.csv_path;
    c["diverged"] = cell.diverged;
    if (!cell.error.empty()) c["error"] = cell.error;
    manifest["cells"].push_back(c);
  }
  manifest["summaries"] = result.summary_paths;

  result.manifest_path = (fs::path(opts.out_dir) / "manifest.json").string();
  std::ofstream mout(result.manifest_path);
  mout << manifest.dump(2) << '\n';
  return result;
}

std::vector<Cell> make_cells(const ExperimentSpec& spec, const RunOptions& opts,
                             const std::vector<double>& etas) {
  const auto problem = build_problem(spec.problem);
  const auto seeds = opts.seeds_override.value_or(spec.seeds);
  const long stride = opts.stride_override.value_or(spec.stride);

  std::vector<Cell> cells;
  for (const auto& nc : spec.configs) {
    OptimizerConfig base = resolve_config(nc, *problem, spec.iters, stride);
    if (etas.empty()) {
      for (auto seed : seeds) {
        Cell cell{nc.name, base, seed, std::nullopt};
        cell.cfg.seed = seed;
        cells.push_back(std::move(cell));
      }
    } else {
      for (double eta : etas)
        for (auto seed : seeds) {
          Cell cell{nc.name, base, seed, eta};
          cell.cfg.eta = eta;
          cell.cfg.seed = seed;
          cells.push_back(std::move(cell));
        }
    }
  }
  return cells;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  ExperimentSpec effective = spec;
  if (opts.seeds_override) effective.seeds = *opts.seeds_override;
  if (opts.stride_override) effective.stride = *opts.stride_override;
  return execute_cells(effective, make_cells(spec, opts, {}), opts, false);
}

ExperimentResult sweep_step_sizes(const ExperimentSpec& spec,
                                  const std::vector<double>& etas,
                                  const RunOptions& opts) {
  if (etas.size() < 2) throw InvalidInput("sweep: need at least 2 step sizes");
  ExperimentSpec effective = spec;
  if (opts.seeds_override) effective.seeds = *opts.seeds_override;
  if (opts.stride_override) effective.stride = *opts.stride_override;
  return execute_cells(effective, make_cells(spec, opts, etas), opts, true);
}

}  // namespace sqn::harness
