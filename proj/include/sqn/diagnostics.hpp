#pragma once

#include <string>
#include <vector>

#include "sqn/optimizer.hpp"

namespace sqn::diagnostics {

struct BoundViolation {
  long iter = 0;
  std::string kind;  // "trace", "determinant", or "positive-definite"
  double value = 0.0;
  double bound = 0.0;
};

struct BoundReport {
  long checked = 0;
  std::vector<BoundViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every recorded update against the trace upper bound and the
/// determinant lower bound, using the curvature floor the run was filtered
/// with. Throws InvalidInput when the run carries no snapshots.
BoundReport verify_bounds_trace(const std::vector<UpdateSnapshot>& snapshots,
                                double m_lower);

/// Envelope of the preconditioner spectrum over a run: (min over k of
/// lambda_min(H_k), max over k of lambda_max(H_k)), H0 included.
std::pair<double, double> eigen_envelope(const std::vector<UpdateSnapshot>& snapshots,
                                         const Mat& h0);

struct PsiTrend {
  double early_median = 0.0;
  double late_median = 0.0;
  bool decreased() const { return late_median < early_median; }
};

/// Medians of the recorded Psi(sqrt(H)' A sqrt(H)) values over the first and
/// last quarter of the run. Requires a run on the quadratic problem with the
/// Psi column recorded.
PsiTrend psi_trend(const RunRecord& record);

double median(std::vector<double> values);

}  // namespace sqn::diagnostics
