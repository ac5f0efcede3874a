#pragma once

#include <limits>
#include <vector>

#include "sqn/linalg.hpp"

namespace sqn {

/// A curvature pair: iterate displacement s, same-batch mean gradient
/// difference y, and the precision p of y (inverse covariance trace of the
/// batch-mean estimator).
struct CurvaturePair {
  Vec s;
  Vec y;
  double p = 0.0;
};

/// Acceptance thresholds for curvature pairs. The floor bounds the
/// preconditioner eigenvalues above; the optional ceiling bounds them below
/// and is typically set to the smoothness constant L when known.
struct CurvatureConfig {
  double m_lower = 0.0;
  double m_upper = std::numeric_limits<double>::infinity();  // infinity = disabled
  double p_cap = 1e12;

  bool ceiling_enabled() const { return std::isfinite(m_upper); }
};

enum class RejectReason { accepted, floor, ceiling };

struct AcceptResult {
  bool accepted = false;
  RejectReason reason = RejectReason::accepted;
  explicit operator bool() const { return accepted; }
};

namespace curvature {

/// Precision of the batch-mean gradient difference: the inverse of the
/// summed per-component variances of the mean estimator (unbiased per-sample
/// variance divided by N). Capped at p_cap; returns p_cap when the variance
/// underflows to zero. Requires N >= 2.
double estimate_precision(const std::vector<Vec>& per_sample_grad_diffs,
                          double p_cap = CurvatureConfig{}.p_cap);

/// Builds (s, y, p) from the two iterates and the per-sample gradient
/// differences evaluated on a shared batch.
CurvaturePair make_pair(const Vec& x_prev, const Vec& x_curr,
                        const std::vector<Vec>& per_sample_grad_diffs,
                        double p_cap = CurvatureConfig{}.p_cap);

/// Stochastic curvature conditions: y's >= m_lower ||s||^2 and, when the
/// ceiling is enabled, y's <= m_upper ||s||^2.
AcceptResult accept(const CurvaturePair& pair, const CurvatureConfig& cfg);

}  // namespace curvature
}  // namespace sqn
