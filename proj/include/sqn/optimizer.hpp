#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sqn/curvature.hpp"
#include "sqn/lsbfgs.hpp"
#include "sqn/problems.hpp"
#include "sqn/sbfgs_dense.hpp"

namespace sqn {

enum class PreconditionerKind { identity_sgd, sbfgs_dense, lsbfgs, bfgs_noisy };

PreconditionerKind preconditioner_from_string(const std::string& s);
std::string to_string(PreconditionerKind kind);

struct OptimizerConfig {
  double eta = 0.1;
  int batch_size = 10;  // N >= 2
  long max_iters = 100;
  PreconditionerKind kind = PreconditionerKind::identity_sgd;
  CurvatureConfig curvature;
  double rho = 1.0;
  std::size_t memory = 10;       // r, lsbfgs only
  double h0_scale = 1.0;         // H0 = h0_scale * I
  std::uint64_t seed = 0;
  std::optional<long> restart_interval;  // dense mode; default never

  long metric_stride = 10;       // eigen/psi sampling cadence
  bool record_snapshots = false;
  long snapshot_stride = 10;     // accepted updates between snapshots

  void validate() const;
};

/// Per-iteration metrics row. Fields that were not measured at this iteration
/// stay unset and serialize as empty CSV cells.
struct RunRow {
  long iter = 0;
  double gap = 0.0;
  long grad_evals = 0;   // cumulative gradient-sample evaluations
  bool accepted = false;
  std::optional<double> lambda_min;
  std::optional<double> lambda_max;
  std::optional<double> psi;
  std::int64_t wall_time_ns = 0;
};

/// Dense-mode state captured around one accepted update, for the post-hoc
/// bound checks.
struct UpdateSnapshot {
  long iter = 0;
  Mat h_before;
  Mat h_after;
  CurvaturePair pair;
  double rho = 0.0;
};

struct RunRecord {
  std::vector<RunRow> rows;
  bool diverged = false;
  long total_grad_evals = 0;
  std::vector<UpdateSnapshot> snapshots;  // dense modes with recording on
  Vec x_final;
};

/// Runs preconditioned SGD: x <- x - eta H v, with the preconditioner
/// maintained from filtered curvature pairs formed on the stepping batch
/// (two gradient evaluations per iteration in quasi-Newton modes).
/// Deterministic given (problem, cfg, x0).
RunRecord run(const StochasticProblem& problem, const OptimizerConfig& cfg,
              const Vec& x0);

/// Fixed-step bound: min(1/L_hat, (4/L_hat) / (sigma_sq / ((1-alpha) eps)
/// / (mu_hat mu_tilde) + 2)).
double step_size_bound(double l_hat, double mu_hat, double mu_tilde,
                       double sigma_sq, double eps, double alpha);

/// Epochs consumed at each recorded row: cumulative gradient-sample
/// evaluations divided by the dataset size.
std::vector<double> epoch_accounting(const RunRecord& record, long n_samples);

}  // namespace sqn
