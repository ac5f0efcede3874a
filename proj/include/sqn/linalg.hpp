#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>

namespace sqn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when an operation requires a positive-definite matrix and the
/// argument fails the Cholesky test.
struct NotPositiveDefinite : std::runtime_error {
  NotPositiveDefinite() : std::runtime_error("matrix is not positive definite") {}
};

/// Thrown on non-finite or structurally invalid input.
struct InvalidInput : std::invalid_argument {
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

namespace linalg {

bool all_finite(const Mat& m);
bool all_finite(const Vec& v);

/// Lower-triangular Cholesky factor of a symmetric matrix, or nullopt if the
/// matrix is not numerically positive definite. Throws InvalidInput on
/// non-finite entries.
std::optional<Mat> cholesky(const Mat& m);

/// Smallest and largest eigenvalue of a symmetric matrix.
std::pair<double, double> eig_extremes(const Mat& m);

/// Psi(M) = tr(M) - log det(M), minimized at M = I where it equals d.
/// The log-determinant comes from the Cholesky diagonal. Throws
/// NotPositiveDefinite when M is not SPD.
double psi(const Mat& m);

/// log det(M) for SPD M, via 2 * sum(log diag(chol(M))).
double log_det_spd(const Mat& m);

/// Solves X P^T + P X = Q by vectorizing into a d^2 x d^2 Kronecker system.
/// O(d^6); intended as a test oracle for d <= 16. Throws InvalidInput when the
/// vectorized system has no unique solution.
Mat solve_lyapunov_bruteforce(const Mat& p, const Mat& q);

}  // namespace linalg
}  // namespace sqn
