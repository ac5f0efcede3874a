#include "sqn/curvature.hpp"

namespace sqn::curvature {

double estimate_precision(const std::vector<Vec>& diffs, double p_cap) {
  const std::size_t n = diffs.size();
  if (n < 2) throw InvalidInput("estimate_precision: insufficient samples (N < 2)");
  const Eigen::Index d = diffs[0].size();

  // Two-pass: mean first, then squared deviations.
  Vec mean = Vec::Zero(d);
  for (const auto& v : diffs) {
    if (v.size() != d || !v.allFinite())
      throw InvalidInput("estimate_precision: bad sample");
    mean += v;
  }
  mean /= static_cast<double>(n);

  double ss = 0.0;
  for (const auto& v : diffs) ss += (v - mean).squaredNorm();
  // Unbiased per-sample variance trace, then the variance of the mean.
  const double var_trace = ss / (static_cast<double>(n - 1) * static_cast<double>(n));
  if (var_trace <= 0.0) return p_cap;
  return std::min(p_cap, 1.0 / var_trace);
}

CurvaturePair make_pair(const Vec& x_prev, const Vec& x_curr,
                        const std::vector<Vec>& diffs, double p_cap) {
  if (diffs.size() < 2) throw InvalidInput("make_pair: insufficient samples (N < 2)");
  Vec s = x_curr - x_prev;
  if (s.norm() == 0.0) throw InvalidInput("make_pair: degenerate step (s = 0)");

  Vec y = Vec::Zero(s.size());
  for (const auto& v : diffs) y += v;
  y /= static_cast<double>(diffs.size());

  return CurvaturePair{std::move(s), std::move(y), estimate_precision(diffs, p_cap)};
}

AcceptResult accept(const CurvaturePair& pair, const CurvatureConfig& cfg) {
  const double ys = pair.y.dot(pair.s);
  const double ss = pair.s.squaredNorm();
  if (ys < cfg.m_lower * ss) return {false, RejectReason::floor};
  if (cfg.ceiling_enabled() && ys > cfg.m_upper * ss)
    return {false, RejectReason::ceiling};
  return {true, RejectReason::accepted};
}

}  // namespace sqn::curvature
