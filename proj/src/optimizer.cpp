#include "sqn/optimizer.hpp"

#include <chrono>
#include <cmath>

namespace sqn {

PreconditionerKind preconditioner_from_string(const std::string& s) {
  if (s == "identity-sgd") return PreconditionerKind::identity_sgd;
  if (s == "sbfgs-dense") return PreconditionerKind::sbfgs_dense;
  if (s == "lsbfgs") return PreconditionerKind::lsbfgs;
  if (s == "bfgs-noisy") return PreconditionerKind::bfgs_noisy;
  throw InvalidInput("unknown preconditioner kind: " + s);
}

std::string to_string(PreconditionerKind kind) {
  switch (kind) {
    case PreconditionerKind::identity_sgd: return "identity-sgd";
    case PreconditionerKind::sbfgs_dense: return "sbfgs-dense";
    case PreconditionerKind::lsbfgs: return "lsbfgs";
    case PreconditionerKind::bfgs_noisy: return "bfgs-noisy";
  }
  throw std::logic_error("unreachable");
}

void OptimizerConfig::validate() const {
  if (eta <= 0.0) throw InvalidInput("config: eta must be positive");
  if (batch_size < 2) throw InvalidInput("config: batch size must be >= 2");
  if (max_iters < 1) throw InvalidInput("config: max_iters must be >= 1");
  if (rho <= 0.0) throw InvalidInput("config: rho must be positive");
  if (h0_scale <= 0.0) throw InvalidInput("config: h0_scale must be positive");
  if (memory == 0) throw InvalidInput("config: memory size must be positive");
  if (metric_stride < 1) throw InvalidInput("config: metric_stride must be >= 1");
  if (curvature.ceiling_enabled() && curvature.m_lower >= curvature.m_upper)
    throw InvalidInput("config: m_lower must be below m_upper");
}

namespace {

constexpr double kDivergenceGap = 1e12;

Vec mean_of(const std::vector<Vec>& grads) {
  Vec m = Vec::Zero(grads[0].size());
  for (const auto& g : grads) m += g;
  return m / static_cast<double>(grads.size());
}

/// Psi of the symmetrized preconditioned Hessian sqrt(H)' A sqrt(H), which
/// equals tr(HA) - log det(HA) and is SPD whenever H is. Returns nothing when
/// H is indefinite (possible for the unfiltered BFGS baseline), since Psi is
/// only defined for positive-definite arguments.
std::optional<double> preconditioned_psi(const Mat& h, const Mat& a) {
  auto l = linalg::cholesky(h);
  if (!l) return std::nullopt;
  const Mat m = l->transpose() * a * (*l);
  return linalg::psi(0.5 * (m + m.transpose()));
}

}  // namespace

RunRecord run(const StochasticProblem& problem, const OptimizerConfig& cfg,
              const Vec& x0) {
  cfg.validate();
  const Eigen::Index d = problem.dim();
  if (x0.size() != d) throw InvalidInput("run: x0 dimension mismatch");

  const auto* quad = dynamic_cast<const QuadraticProblem*>(&problem);
  const double f_star = problem.optimal_value().value_or(0.0);
  const bool dense_mode = cfg.kind == PreconditionerKind::sbfgs_dense ||
                          cfg.kind == PreconditionerKind::bfgs_noisy;

  std::mt19937_64 rng(cfg.seed);
  Vec x = x0;

  DensePreconditioner dense{Mat::Identity(d, d) * cfg.h0_scale, cfg.rho, 0};
  LimitedMemory mem(cfg.memory, Vec::Constant(d, cfg.h0_scale), cfg.rho);

  RunRecord rec;
  rec.rows.reserve(cfg.max_iters + 1);
  long evals = 0;
  long accepted_updates = 0;
  const auto t_start = std::chrono::steady_clock::now();

  auto elapsed_ns = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - t_start)
        .count();
  };

  auto emit_row = [&](long iter, double gap, bool accepted) {
    RunRow row;
    row.iter = iter;
    row.gap = gap;
    row.grad_evals = evals;
    row.accepted = accepted;
    if (dense_mode && iter % cfg.metric_stride == 0) {
      auto [lo, hi] = linalg::eig_extremes(dense.H);
      row.lambda_min = lo;
      row.lambda_max = hi;
      if (quad) row.psi = preconditioned_psi(dense.H, quad->hessian());
    }
    row.wall_time_ns = elapsed_ns();
    rec.rows.push_back(std::move(row));
  };

  emit_row(0, problem.true_objective(x) - f_star, false);

  for (long k = 0; k < cfg.max_iters; ++k) {
    const Batch batch = problem.sample_batch(rng, cfg.batch_size);
    const auto grads = problem.grad_per_sample(x, batch);
    evals += cfg.batch_size;
    const Vec upsilon = mean_of(grads);

    Vec direction;
    switch (cfg.kind) {
      case PreconditionerKind::identity_sgd: direction = upsilon; break;
      case PreconditionerKind::lsbfgs: direction = mem.apply_cached(upsilon); break;
      default: direction = dense.H * upsilon; break;
    }
    const Vec x_next = x - cfg.eta * direction;

    bool accepted = false;
    if (cfg.kind == PreconditionerKind::bfgs_noisy && x_next != x) {
      // Naive BFGS baseline: y is the difference of successive stochastic
      // gradient estimates, so its noise is independent of the noise already
      // in upsilon, and the update is applied without any curvature check.
      // Pairs with y's <= 0 make H indefinite; the resulting instability is
      // exactly the failure mode the filtered update avoids.
      const Batch batch_next = problem.sample_batch(rng, cfg.batch_size);
      const auto grads_next = problem.grad_per_sample(x_next, batch_next);
      evals += cfg.batch_size;
      const Vec s = x_next - x;
      const Vec y = mean_of(grads_next) - upsilon;
      const double sy = s.dot(y);
      if (sy != 0.0) {
        const double sigma = 1.0 / sy;
        const Mat v = Mat::Identity(d, d) - sigma * s * y.transpose();
        const Mat hp = v * dense.H * v.transpose() + sigma * s * s.transpose();
        dense.H = 0.5 * (hp + hp.transpose());
        ++dense.updates_applied;
        accepted = true;
      }
    } else if (cfg.kind != PreconditionerKind::identity_sgd && x_next != x) {
      const auto grads_next = problem.grad_per_sample(x_next, batch);
      evals += cfg.batch_size;
      std::vector<Vec> diffs(grads.size());
      for (std::size_t i = 0; i < grads.size(); ++i) diffs[i] = grads_next[i] - grads[i];
      CurvaturePair pair = curvature::make_pair(x, x_next, diffs, cfg.curvature.p_cap);

      if (curvature::accept(pair, cfg.curvature)) {
        accepted = true;
        ++accepted_updates;
        if (cfg.kind == PreconditionerKind::sbfgs_dense) {
          const bool snapshot =
              cfg.record_snapshots &&
              (accepted_updates - 1) % cfg.snapshot_stride == 0;
          Mat h_before;
          if (snapshot) h_before = dense.H;
          dense.H = sbfgs::apply_update(dense.H, pair, cfg.rho);
          ++dense.updates_applied;
          if (snapshot)
            rec.snapshots.push_back(
                {k + 1, std::move(h_before), dense.H, pair, cfg.rho});
        } else {
          mem.push(std::move(pair));
        }
      }
    }

    if (cfg.restart_interval && dense_mode &&
        (k + 1) % *cfg.restart_interval == 0)
      dense = sbfgs::reset(dense, Mat::Identity(d, d) * cfg.h0_scale);

    x = x_next;

    double gap;
    if (!x.allFinite()) {
      gap = std::numeric_limits<double>::quiet_NaN();
    } else {
      gap = problem.true_objective(x) - f_star;
    }
    if (!std::isfinite(gap) || gap > kDivergenceGap) {
      rec.diverged = true;
      RunRow row;
      row.iter = k + 1;
      row.gap = std::numeric_limits<double>::quiet_NaN();
      row.grad_evals = evals;
      row.accepted = accepted;
      row.wall_time_ns = elapsed_ns();
      rec.rows.push_back(std::move(row));
      break;
    }
    emit_row(k + 1, gap, accepted);
  }

  rec.total_grad_evals = evals;
  rec.x_final = std::move(x);
  return rec;
}

double step_size_bound(double l_hat, double mu_hat, double mu_tilde,
                       double sigma_sq, double eps, double alpha) {
  if (l_hat <= 0.0 || mu_hat <= 0.0 || mu_tilde <= 0.0 || sigma_sq < 0.0 ||
      eps <= 0.0 || alpha <= 0.0 || alpha >= 1.0)
    throw InvalidInput("step_size_bound: domain violation");
  const double noise_term = sigma_sq / ((1.0 - alpha) * eps) / (mu_hat * mu_tilde);
  return std::min(1.0 / l_hat, 4.0 / l_hat / (noise_term + 2.0));
}

std::vector<double> epoch_accounting(const RunRecord& record, long n_samples) {
  if (n_samples <= 0) throw InvalidInput("epoch_accounting: n_samples must be positive");
  std::vector<double> epochs;
  epochs.reserve(record.rows.size());
  for (const auto& row : record.rows)
    epochs.push_back(static_cast<double>(row.grad_evals) /
                     static_cast<double>(n_samples));
  return epochs;
}

}  // namespace sqn
