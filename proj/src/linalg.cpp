#include "sqn/linalg.hpp"

#include <cmath>

namespace sqn::linalg {

bool all_finite(const Mat& m) { return m.allFinite(); }
bool all_finite(const Vec& v) { return v.allFinite(); }

std::optional<Mat> cholesky(const Mat& m) {
  if (!m.allFinite()) throw InvalidInput("cholesky: non-finite entries");
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Mat l = llt.matrixL();
  // LLT can report success on borderline matrices with a non-positive pivot.
  if ((l.diagonal().array() <= 0.0).any()) return std::nullopt;
  return l;
}

std::pair<double, double> eig_extremes(const Mat& m) {
  if (!m.allFinite()) throw InvalidInput("eig_extremes: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_extremes: eigensolver failed");
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

double log_det_spd(const Mat& m) {
  auto l = cholesky(m);
  if (!l) throw NotPositiveDefinite();
  return 2.0 * l->diagonal().array().log().sum();
}

double psi(const Mat& m) { return m.trace() - log_det_spd(m); }

Mat solve_lyapunov_bruteforce(const Mat& p, const Mat& q) {
  if (!p.allFinite() || !q.allFinite())
    throw InvalidInput("solve_lyapunov_bruteforce: non-finite entries");
  const Eigen::Index d = p.rows();
  if (p.cols() != d || q.rows() != d || q.cols() != d)
    throw InvalidInput("solve_lyapunov_bruteforce: dimension mismatch");

  // vec(X P^T) = (P kron I) vec(X), vec(P X) = (I kron P) vec(X).
  Mat sys = Mat::Zero(d * d, d * d);
  const Mat eye = Mat::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      sys.block(i * d, j * d, d, d) += p(i, j) * eye;  // P kron I
      if (i == j) sys.block(i * d, j * d, d, d) += p;  // I kron P
    }

  Eigen::FullPivLU<Mat> lu(sys);
  if (!lu.isInvertible())
    throw InvalidInput("solve_lyapunov_bruteforce: no unique solution");
  Vec qv = Eigen::Map<const Vec>(q.data(), d * d);
  Vec xv = lu.solve(qv);
  return Eigen::Map<const Mat>(xv.data(), d, d);
}

}  // namespace sqn::linalg
