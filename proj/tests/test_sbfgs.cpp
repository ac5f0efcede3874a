#include <doctest.h>

#include "sqn/sbfgs_dense.hpp"
#include "test_support.hpp"

using namespace sqn;
using namespace sqn::testing;

namespace {

// Lyapunov left/right operands of the update equation. The solver computes
// X from P X + X P' = Q, so P carries s y' (its transpose supplies y s').
Mat lyap_p(const CurvaturePair& pair, double rho) {
  const double rp2 = 0.5 * rho / pair.p;
  return pair.s * pair.y.transpose() + rp2 * Mat::Identity(pair.s.size(), pair.s.size());
}

Mat lyap_q(const Mat& h, const CurvaturePair& pair, double rho) {
  return 2.0 * pair.s * pair.s.transpose() + (rho / pair.p) * h;
}

}  // namespace

TEST_CASE("coefficients scalar worked case") {
  // d=1, H=1, s=y=1, rho/p = 1.
  Mat h(1, 1);
  h << 1.0;
  CurvaturePair pair{Vec{{1.0}}, Vec{{1.0}}, 1.0};
  const auto c = sbfgs::coefficients(h, pair, 1.0);
  CHECK(c.a == doctest::Approx(1.0));
  CHECK(c.b == doctest::Approx(-0.5));
}

TEST_CASE("coefficients in the rho -> 0 limit give BFGS scalars") {
  Mat h = Mat::Identity(3, 3);
  CurvaturePair pair{Vec::Unit(3, 0), Vec::Unit(3, 0), 1.0};
  const auto c = sbfgs::coefficients(h, pair, 0.0);
  CHECK(c.a == doctest::Approx(2.0));
  CHECK(c.b == doctest::Approx(-1.0));
}

TEST_CASE("coefficients satisfy the PD key scalar a - b^2 y'Hy > 0") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat h = random_spd(rng, 5);
    const auto pair = random_accepted_pair(rng, 5, 2.0);
    const auto c = sbfgs::coefficients(h, pair, 0.7);
    CHECK(c.b < 0.0);
    CHECK(c.a - c.b * c.b * pair.y.dot(h * pair.y) > 0.0);
  }
}

TEST_CASE("update scalar worked case keeps H = 1") {
  Mat h(1, 1);
  h << 1.0;
  CurvaturePair pair{Vec{{1.0}}, Vec{{1.0}}, 1.0};
  CHECK(sbfgs::apply_update(h, pair, 1.0)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("update fixed point when Hy = s and rho -> 0") {
  Mat h = Mat::Identity(4, 4);
  CurvaturePair pair{Vec::Unit(4, 0), Vec::Unit(4, 0), 1.0};
  CHECK(rel_frob(sbfgs::apply_update(h, pair, 1e-300), h) <= 1e-12);
}

TEST_CASE("update solves the Lyapunov equation (oracle check)") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 5;
    const Mat h = random_spd(rng, d);
    const auto pair = random_accepted_pair(rng, d, 1.5);
    const double rho = 0.8;
    const Mat hp = sbfgs::apply_update(h, pair, rho);
    const Mat oracle = linalg::solve_lyapunov_bruteforce(lyap_p(pair, rho),
                                                         lyap_q(h, pair, rho));
    CHECK(rel_frob(hp, oracle) <= 1e-10);
  }
}

TEST_CASE("update result is exactly symmetric and PD") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat h = random_spd(rng, 6);
    const auto pair = random_accepted_pair(rng, 6, 3.0);
    const Mat hp = sbfgs::apply_update(h, pair, 1.0);
    CHECK((hp - hp.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(linalg::eig_extremes(hp).first > 0.0);
  }
}

TEST_CASE("bfgs_update basics") {
  Mat h = Mat::Identity(3, 3);
  CurvaturePair pair{Vec::Unit(3, 0), Vec::Unit(3, 0), 1.0};
  CHECK(rel_frob(sbfgs::bfgs_update(h, pair), h) <= 1e-14);

  CurvaturePair bad{Vec::Unit(3, 0), -Vec::Unit(3, 0), 1.0};
  CHECK_THROWS_AS(sbfgs::bfgs_update(h, bad), InvalidInput);
}

TEST_CASE("bfgs_update satisfies the secant equation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat h = random_spd(rng, 6);
    const auto pair = random_accepted_pair(rng, 6, 1.0);
    const Mat hp = sbfgs::bfgs_update(h, pair);
    CHECK((hp * pair.y - pair.s).norm() <= 1e-12 * std::max(1.0, pair.s.norm()));
  }
}

TEST_CASE("update equals bfgs_update in the rho -> 0 limit") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 9);
    const Mat h = random_spd(rng, d);
    const auto pair = random_accepted_pair(rng, d, 1.0);
    const Mat limit = sbfgs::apply_update(h, pair, 0.0);
    const Mat bfgs = sbfgs::bfgs_update(h, pair);
    CHECK(rel_frob(limit, bfgs) <= 1e-12);
  }
}

TEST_CASE("BFGS limit is approached monotonically in rho") {
  std::mt19937_64 rng(6);
  const Mat h = random_spd(rng, 5);
  const auto pair = random_accepted_pair(rng, 5, 1.0);
  const Mat bfgs = sbfgs::bfgs_update(h, pair);
  double prev = std::numeric_limits<double>::infinity();
  for (int t : {2, 4, 6, 8}) {
    const double dist = (sbfgs::apply_update(h, pair, std::pow(10.0, -t)) - bfgs).norm();
    CHECK(dist <= prev);
    prev = dist;
  }
}

TEST_CASE("secant residual is nondecreasing in rho") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat h = random_spd(rng, 5);
    const auto pair = random_accepted_pair(rng, 5, 1.0);
    double prev = -1.0;
    for (double rho : {1e-6, 1e-3, 1.0, 1e3}) {
      const Mat hp = sbfgs::apply_update(h, pair, rho);
      const double resid = (hp * pair.y - pair.s).norm();
      CHECK(resid >= prev - 1e-12);
      prev = resid;
    }
  }
}

TEST_CASE("trace_bound scalar worked case") {
  Mat h(1, 1);
  h << 1.0;
  CurvaturePair pair{Vec{{1.0}}, Vec{{1.0}}, 1.0};
  // tr(H') = 1; with m_lower ||s||^2 = s'y the bound is tight-ish but >= 1.
  CHECK(sbfgs::trace_bound(h, pair, 1.0, 1.0) >= 1.0);
}

TEST_CASE("trace_bound dominates the achieved trace") {
  std::mt19937_64 rng(8);
  const double m_lower = 0.5, rho = 0.7;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 7);
    const Mat h = random_spd(rng, d);
    const auto pair = random_accepted_pair(rng, d, 2.0, m_lower);
    const Mat hp = sbfgs::apply_update(h, pair, rho);
    const double bound = sbfgs::trace_bound(h, pair, rho, m_lower);
    CHECK(hp.trace() <= bound + 1e-12 * std::abs(bound));
  }
}

TEST_CASE("trace_bound is finite with positive floor or rho/p") {
  Mat h = Mat::Identity(2, 2);
  CurvaturePair pair{Vec::Unit(2, 0), Vec::Unit(2, 0), 1.0};
  CHECK(std::isfinite(sbfgs::trace_bound(h, pair, 0.0, 0.5)));
  CHECK(std::isfinite(sbfgs::trace_bound(h, pair, 1.0, 0.0)));
}

TEST_CASE("det_bound scalar worked case") {
  Mat h(1, 1);
  h << 1.0;
  CurvaturePair pair{Vec{{1.0}}, Vec{{1.0}}, 1.0};
  CHECK(sbfgs::det_bound(h, pair, 1.0) == doctest::Approx(0.75));
}

TEST_CASE("det_bound strictly below the achieved determinant") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 7);
    const Mat h = random_spd(rng, d);
    const auto pair = random_accepted_pair(rng, d, 2.0);
    const double rho = 0.7;
    const Mat hp = sbfgs::apply_update(h, pair, rho);
    const double log_det = linalg::log_det_spd(hp);
    CHECK(log_det > std::log(sbfgs::det_bound(h, pair, rho)));
  }
}

TEST_CASE("det_bound rho -> 0 reduces to the BFGS determinant direction") {
  std::mt19937_64 rng(10);
  const Mat h = random_spd(rng, 4);
  const auto pair = random_accepted_pair(rng, 4, 1.0);
  const Vec bs = Eigen::LLT<Mat>(h).solve(pair.s);
  const double expected =
      std::exp(linalg::log_det_spd(h)) * pair.s.dot(bs) / pair.s.dot(pair.y);
  CHECK(sbfgs::det_bound(h, pair, 0.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("preconditioner update counting and reset") {
  DensePreconditioner pre{Mat::Identity(3, 3), 0.5, 0};
  std::mt19937_64 rng(11);
  pre = sbfgs::update(pre, random_accepted_pair(rng, 3, 1.0));
  pre = sbfgs::update(pre, random_accepted_pair(rng, 3, 1.0));
  CHECK(pre.updates_applied == 2);

  const double inv_l = 1e-6;
  pre = sbfgs::reset(pre, Mat(inv_l * Mat::Identity(3, 3)));
  CHECK(pre.updates_applied == 0);
  CHECK(pre.H(0, 0) == inv_l);
  CHECK(pre.H(0, 1) == 0.0);

  CHECK_THROWS_AS(sbfgs::reset(pre, Mat(-Mat::Identity(3, 3))), NotPositiveDefinite);
}

TEST_CASE("coefficients guard invalid pairs") {
  Mat h = Mat::Identity(2, 2);
  CurvaturePair bad{Vec::Unit(2, 0), -Vec::Unit(2, 0), 1e12};
  CHECK_THROWS_AS(sbfgs::coefficients(h, bad, 1e-12), InvalidInput);
}
