#pragma once

#include "sqn/curvature.hpp"
#include "sqn/linalg.hpp"

namespace sqn {

/// Rank-update scalars of the stochastic BFGS step.
struct UpdateCoefficients {
  double a = 0.0;
  double b = 0.0;  // always negative for accepted pairs
};

/// Dense inverse-Hessian approximation maintained by the stochastic BFGS
/// update. rho weighs the secant likelihood against the prior: large rho
/// keeps H close to its previous value, rho -> 0 recovers plain BFGS.
struct DensePreconditioner {
  Mat H;
  double rho = 1.0;
  long updates_applied = 0;
};

namespace sbfgs {

/// a = (1 + y'Hy / (s'y + rho/p)) / (s'y + rho/(2p)), b = -1 / (s'y + rho/p).
UpdateCoefficients coefficients(const Mat& H, const CurvaturePair& pair, double rho);

/// One stochastic BFGS update:
///   H' = H + a s s' + b (H y s' + s y' H),
/// the closed-form solution of H'(y s' + (rho/2p) I) + (s y' + (rho/2p) I) H'
/// = 2 s s' + (rho/p) H. The pair must have passed the curvature filter.
DensePreconditioner update(const DensePreconditioner& pre, const CurvaturePair& pair);

/// Same rank-3 correction applied in place to a raw matrix.
Mat apply_update(const Mat& H, const CurvaturePair& pair, double rho);

/// Textbook BFGS inverse update, the p -> infinity (rho -> 0) limit:
///   H' = (I - sigma s y') H (I - sigma y s') + sigma s s', sigma = 1/(y's).
/// Throws InvalidInput when y's <= 0.
Mat bfgs_update(const Mat& H, const CurvaturePair& pair);

/// Trace upper bound from the curvature-condition analysis, with s'y replaced
/// by m_lower ||s||^2 in the positive terms' denominators. The cross term
/// keeps the exact s'y: substituting the floor there would flip the bound
/// direction (the analysis implicitly uses the ceiling constant for it).
double trace_bound(const Mat& H, const CurvaturePair& pair, double rho, double m_lower);

/// Determinant lower bound: det(H) * (rho^2 / (p^2 (s'y + rho/p)^2)
/// + s'Bs / (s'y + rho/p)) with B = H^{-1} computed by Cholesky solve.
double det_bound(const Mat& H, const CurvaturePair& pair, double rho);

/// Restart: H <- H0, counter cleared. H0 must be positive definite.
DensePreconditioner reset(const DensePreconditioner& pre, const Mat& H0);

}  // namespace sbfgs
}  // namespace sqn
