#include <doctest.h>

#include "sqn/linalg.hpp"
#include "test_support.hpp"

using namespace sqn;
using namespace sqn::testing;

TEST_CASE("cholesky of identity is identity") {
  auto l = linalg::cholesky(Mat::Identity(3, 3));
  REQUIRE(l);
  CHECK(rel_frob(*l, Mat::Identity(3, 3)) == doctest::Approx(0.0));
}

TEST_CASE("cholesky of diagonal takes square roots") {
  Mat m = Vec{{4.0, 9.0}}.asDiagonal();
  auto l = linalg::cholesky(m);
  REQUIRE(l);
  CHECK((*l)(0, 0) == doctest::Approx(2.0));
  CHECK((*l)(1, 1) == doctest::Approx(3.0));
  CHECK((*l)(0, 1) == 0.0);
}

TEST_CASE("cholesky reconstructs a random SPD matrix") {
  std::mt19937_64 rng(7);
  const Mat m = random_spd(rng, 6);
  auto l = linalg::cholesky(m);
  REQUIRE(l);
  CHECK(rel_frob(Mat(*l * l->transpose()), m) <= 1e-12);
}

TEST_CASE("cholesky reports non-PD instead of crashing") {
  Mat m = Vec{{1.0, -1.0}}.asDiagonal();
  CHECK(!linalg::cholesky(m));
}

TEST_CASE("cholesky rejects NaN input") {
  Mat m = Mat::Identity(2, 2);
  m(0, 1) = m(1, 0) = std::nan("");
  CHECK_THROWS_AS(linalg::cholesky(m), InvalidInput);
}

TEST_CASE("eig_extremes on diagonal and identity") {
  Mat m = Vec{{1.0, 5.0, 3.0}}.asDiagonal();
  auto [lo, hi] = linalg::eig_extremes(m);
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(5.0));

  auto [ilo, ihi] = linalg::eig_extremes(Mat::Identity(4, 4));
  CHECK(ilo == doctest::Approx(1.0));
  CHECK(ihi == doctest::Approx(1.0));
}

TEST_CASE("eig_extremes recovers a constructed spectrum") {
  std::mt19937_64 rng(42);
  const int d = 10;
  const Mat q = Eigen::HouseholderQR<Mat>(random_gaussian(rng, d, d)).householderQ();
  Vec lambda(d);
  for (int i = 0; i < d; ++i) lambda(i) = 0.5 + 3.0 * i;
  Mat m = q * lambda.asDiagonal() * q.transpose();
  m = 0.5 * (m + m.transpose()).eval();
  auto [lo, hi] = linalg::eig_extremes(m);
  CHECK(std::abs(lo - lambda.minCoeff()) <= 1e-8 * lambda.maxCoeff());
  CHECK(std::abs(hi - lambda.maxCoeff()) <= 1e-8 * lambda.maxCoeff());
}

TEST_CASE("eig_extremes scales linearly") {
  std::mt19937_64 rng(3);
  const Mat m = random_spd(rng, 7);
  auto [lo, hi] = linalg::eig_extremes(m);
  for (double alpha : {0.25, 4.0, 1e3}) {
    auto [slo, shi] = linalg::eig_extremes(Mat(alpha * m));
    CHECK(slo == doctest::Approx(alpha * lo).epsilon(1e-10));
    CHECK(shi == doctest::Approx(alpha * hi).epsilon(1e-10));
  }
}

TEST_CASE("psi known values") {
  CHECK(linalg::psi(Mat::Identity(20, 20)) == doctest::Approx(20.0));
  CHECK(linalg::psi(Vec{{2.0, 0.5}}.asDiagonal()) == doctest::Approx(2.5));
  const double e = std::exp(1.0);
  CHECK(linalg::psi(Vec{{e, 1.0}}.asDiagonal()) == doctest::Approx(e));
}

TEST_CASE("psi rejects non-PD input") {
  CHECK_THROWS_AS(linalg::psi(Vec{{1.0, -2.0}}.asDiagonal()), NotPositiveDefinite);
}

TEST_CASE("psi >= d with equality only at identity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 7);
    const Mat m = random_spd(rng, d);
    CHECK(linalg::psi(m) - d >= -1e-12);
  }
}

TEST_CASE("lyapunov scalar case") {
  Mat p(1, 1), q(1, 1);
  p << 1.5;
  q << 3.0;
  CHECK(linalg::solve_lyapunov_bruteforce(p, q)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("lyapunov with P = I returns Q/2") {
  std::mt19937_64 rng(5);
  const Mat m = random_spd(rng, 4);
  const Mat x = linalg::solve_lyapunov_bruteforce(Mat::Identity(4, 4), Mat(2.0 * m));
  CHECK(rel_frob(x, m) <= 1e-12);
}

TEST_CASE("lyapunov residual on a secant-shaped instance") {
  std::mt19937_64 rng(9);
  const int d = 5;
  const Vec s = random_vec(rng, d);
  const Mat w = random_spd(rng, d);
  const Vec y = w * s;
  const double rho_over_2p = 0.3;
  const Mat p = y * s.transpose() + rho_over_2p * Mat::Identity(d, d);
  const Mat h = random_spd(rng, d);
  const Mat q = 2.0 * s * s.transpose() + 2.0 * rho_over_2p * h;
  const Mat x = linalg::solve_lyapunov_bruteforce(p, q);
  const Mat residual = x * p.transpose() + p * x - q;
  CHECK(residual.norm() / q.norm() <= 1e-10);
}

TEST_CASE("lyapunov singular system is rejected") {
  // P = diag(1, -1): P kron I + I kron P is singular.
  Mat p = Vec{{1.0, -1.0}}.asDiagonal();
  CHECK_THROWS_AS(linalg::solve_lyapunov_bruteforce(p, Mat::Identity(2, 2)),
                  InvalidInput);
}
