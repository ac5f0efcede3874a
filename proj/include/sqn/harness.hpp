#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sqn/optimizer.hpp"
#include "sqn/problems.hpp"

namespace sqn::harness {

struct ProblemSpec {
  std::string kind = "quadratic";  // "quadratic" or "logistic"
  // quadratic
  int dim = 20;
  double kappa = 1e6;
  double wishart_scale = 1e-2;
  std::uint64_t problem_seed = 1;
  std::string x0_mode = "gaussian";  // "gaussian" or "zero"
  // logistic
  std::string dataset;
  DatasetFormat format = DatasetFormat::csv;
  double lambda_lr = 1e-5;
};

/// One optimizer configuration from a spec file. eta / h0 / m_upper may be
/// given as the token "1/L" (resp. "L"), resolved against the problem's
/// smoothness constant once the problem is built.
struct NamedConfig {
  std::string name;
  OptimizerConfig cfg;
  bool eta_inv_smoothness = false;
  bool h0_inv_smoothness = false;
  bool m_upper_smoothness = false;
};

struct ExperimentSpec {
  ProblemSpec problem;
  std::vector<NamedConfig> configs;
  std::vector<std::uint64_t> seeds;
  long iters = 100;
  long stride = 10;
  std::string raw_text;  // spec text as loaded; embedded into the manifest
};

/// Parses the flat key-value spec format (see README for the schema).
ExperimentSpec parse_spec(const std::string& text);

/// Loads a spec file, or a manifest.json produced by a previous run (the
/// embedded spec text is re-parsed, giving bit-identical re-execution).
ExperimentSpec load_spec_file(const std::string& path);

struct RunOptions {
  std::string out_dir = "out";
  int jobs = 0;  // 0 = hardware concurrency
  std::optional<std::vector<std::uint64_t>> seeds_override;
  std::optional<long> stride_override;
};

struct CellResult {
  std::string config;
  std::uint64_t seed = 0;
  std::optional<double> eta;  // set for sweep cells
  std::string csv_path;
  bool diverged = false;
  std::string error;  // nonempty when the run failed outright
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::vector<std::string> summary_paths;
  std::string manifest_path;
};

/// Runs every (config, seed) cell, writes one run CSV per cell, a quantile
/// summary per config, and a JSON manifest.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts);

/// Appendix-style step-size sweep: one run per (config, eta, seed), a summary
/// per (config, eta), and a stability report marking diverged cells.
ExperimentResult sweep_step_sizes(const ExperimentSpec& spec,
                                  const std::vector<double>& etas,
                                  const RunOptions& opts);

struct SummaryRow {
  long iter = 0;
  double epoch = 0.0;
  double q05 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q95 = 0.0;
  int n_runs = 0;
  int n_diverged = 0;
};

/// Quantile bands (type-7 linear interpolation) over aligned run CSVs.
/// Divergent runs are excluded from the quantiles and counted separately.
std::vector<SummaryRow> summarize(const std::vector<std::string>& run_csv_paths);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

/// Type-7 quantile of a sample (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double q);

// Shared helpers used by the CLI and tests.
std::unique_ptr<StochasticProblem> build_problem(const ProblemSpec& spec);
Vec initial_point(const ProblemSpec& spec, Eigen::Index d);
void write_run_csv(const std::string& path, const RunRecord& record, long n_samples);
std::uint64_t problem_fingerprint(const StochasticProblem& problem);

}  // namespace sqn::harness
