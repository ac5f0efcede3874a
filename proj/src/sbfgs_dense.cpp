#include "sqn/sbfgs_dense.hpp"

namespace sqn::sbfgs {

UpdateCoefficients coefficients(const Mat& H, const CurvaturePair& pair, double rho) {
  const double sy = pair.s.dot(pair.y);
  const double rp = rho / pair.p;
  const double denom_b = sy + rp;
  if (denom_b <= 0.0) throw InvalidInput("coefficients: s'y + rho/p <= 0");
  const double yHy = pair.y.dot(H * pair.y);
  UpdateCoefficients c;
  c.a = (1.0 + yHy / denom_b) / (sy + 0.5 * rp);
  c.b = -1.0 / denom_b;
  return c;
}

Mat apply_update(const Mat& H, const CurvaturePair& pair, double rho) {
  const auto c = coefficients(H, pair, rho);
  const Vec hy = H * pair.y;
  Mat hp = H;
  const Eigen::Index d = H.rows();
  // Entry-wise so that symmetry is exact: (i,j) and (j,i) evaluate the same
  // sum of products.
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double delta = c.a * pair.s(i) * pair.s(j) +
                           c.b * (hy(i) * pair.s(j) + pair.s(i) * hy(j));
      hp(i, j) += delta;
      if (i != j) hp(j, i) = hp(i, j);
    }
  return hp;
}

DensePreconditioner update(const DensePreconditioner& pre, const CurvaturePair& pair) {
  DensePreconditioner out{apply_update(pre.H, pair, pre.rho), pre.rho,
                          pre.updates_applied + 1};
#ifndef NDEBUG
  if (!linalg::cholesky(out.H))
    throw std::runtime_error("sbfgs::update produced a non-PD matrix");
#endif
  return out;
}

Mat bfgs_update(const Mat& H, const CurvaturePair& pair) {
  const double sy = pair.s.dot(pair.y);
  if (sy <= 0.0) throw InvalidInput("bfgs_update: curvature violated (y's <= 0)");
  const double sigma = 1.0 / sy;
  const Eigen::Index d = H.rows();
  Mat v = Mat::Identity(d, d) - sigma * pair.s * pair.y.transpose();
  Mat hp = v * H * v.transpose() + sigma * pair.s * pair.s.transpose();
  return 0.5 * (hp + hp.transpose());
}

double trace_bound(const Mat& H, const CurvaturePair& pair, double rho, double m_lower) {
  const double ss = pair.s.squaredNorm();
  const double rp = rho / pair.p;
  const double floor = m_lower * ss;
  const double yHy = pair.y.dot(H * pair.y);
  const double sHy = pair.s.dot(H * pair.y);
  // The floor substitution enlarges the positive terms, so it preserves the
  // bound there. Substituting it into the cross term's denominator would
  // push the bound below the exact trace (the analysis implicitly uses the
  // ceiling constant there), so the cross term keeps the exact s'y.
  return H.trace() + (1.0 + yHy / (floor + rp)) / (floor + 0.5 * rp) * ss -
         2.0 * sHy / (pair.s.dot(pair.y) + rp);
}

double det_bound(const Mat& H, const CurvaturePair& pair, double rho) {
  auto l = linalg::cholesky(H);
  if (!l) throw NotPositiveDefinite();
  const double sy = pair.s.dot(pair.y);
  const double rp = rho / pair.p;
  // H = LL', so s'H^{-1}s = ||L^{-1}s||^2.
  const Vec w = l->triangularView<Eigen::Lower>().solve(pair.s);
  const double sBs = w.squaredNorm();
  const double det_h = std::exp(2.0 * l->diagonal().array().log().sum());
  return det_h * (rp * rp / ((sy + rp) * (sy + rp)) + sBs / (sy + rp));
}

DensePreconditioner reset(const DensePreconditioner& pre, const Mat& H0) {
  if (!linalg::cholesky(H0)) throw NotPositiveDefinite();
  return DensePreconditioner{H0, pre.rho, 0};
}

}  // namespace sqn::sbfgs
