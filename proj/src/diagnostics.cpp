#include "sqn/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace sqn::diagnostics {

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BoundReport verify_bounds_trace(const std::vector<UpdateSnapshot>& snapshots,
                                double m_lower) {
  if (snapshots.empty())
    throw InvalidInput("verify_bounds_trace: no snapshots recorded");
  BoundReport report;
  for (const auto& snap : snapshots) {
    ++report.checked;

    auto l_after = linalg::cholesky(snap.h_after);
    if (!l_after) {
      report.violations.push_back({snap.iter, "positive-definite", 0.0, 0.0});
      continue;
    }

    const double tr = snap.h_after.trace();
    const double tr_bound =
        sbfgs::trace_bound(snap.h_before, snap.pair, snap.rho, m_lower);
    if (tr > tr_bound + 1e-12 * std::max(1.0, std::abs(tr_bound)))
      report.violations.push_back({snap.iter, "trace", tr, tr_bound});

    // Compare in log space; det overflows at kappa = 1e6 scales.
    const double log_det = 2.0 * l_after->diagonal().array().log().sum();
    const double d_bound = sbfgs::det_bound(snap.h_before, snap.pair, snap.rho);
    if (!(log_det > std::log(d_bound)))
      report.violations.push_back({snap.iter, "determinant", log_det, std::log(d_bound)});
  }
  return report;
}

std::pair<double, double> eigen_envelope(const std::vector<UpdateSnapshot>& snapshots,
                                         const Mat& h0) {
  auto [lo, hi] = linalg::eig_extremes(h0);
  for (const auto& snap : snapshots) {
    auto [l, h] = linalg::eig_extremes(snap.h_after);
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

PsiTrend psi_trend(const RunRecord& record) {
  std::vector<double> psis;
  for (const auto& row : record.rows)
    if (row.psi) psis.push_back(*row.psi);
  if (psis.size() < 4)
    throw InvalidInput("psi_trend: run has no usable Psi column (not a quadratic dense run?)");
  const std::size_t quarter = std::max<std::size_t>(1, psis.size() / 4);
  PsiTrend trend;
  trend.early_median = median({psis.begin(), psis.begin() + quarter});
  trend.late_median = median({psis.end() - quarter, psis.end()});
  return trend;
}

}  // namespace sqn::diagnostics
