#include "sqn/lsbfgs.hpp"

namespace sqn {

LimitedMemory::LimitedMemory(std::size_t r, Vec h0_diag, double rho)
    : r_(r), h0_diag_(std::move(h0_diag)), rho_(rho) {
  if (r_ == 0) throw InvalidInput("LimitedMemory: r must be positive");
  if ((h0_diag_.array() <= 0.0).any())
    throw InvalidInput("LimitedMemory: h0 diagonal must be positive");
  if (rho_ <= 0.0) throw InvalidInput("LimitedMemory: rho must be positive");
}

void LimitedMemory::push(CurvaturePair pair) {
  if (pair.s.size() != h0_diag_.size())
    throw InvalidInput("LimitedMemory::push: dimension mismatch");
  if (pairs_.size() == r_) pairs_.pop_front();
  pairs_.push_back(std::move(pair));
  cache_valid_ = false;
}

void LimitedMemory::set_h0_diag(Vec h0_diag) {
  if (h0_diag.size() != h0_diag_.size())
    throw InvalidInput("LimitedMemory::set_h0_diag: dimension mismatch");
  h0_diag_ = std::move(h0_diag);
  cache_valid_ = false;
}

void LimitedMemory::rebuild_cache() const {
  const std::size_t n = pairs_.size();
  cache_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = pairs_[i];
    Vec v = h0_diag_.cwiseProduct(pi.y);
    for (std::size_t j = 0; j < i; ++j) {
      const auto& pj = pairs_[j];
      const auto& cj = cache_[j];
      const double sj_yi = pj.s.dot(pi.y);
      const double vj_yi = cj.v.dot(pi.y);
      dot_count_ += 2;
      v += (cj.a * sj_yi) * pj.s + cj.b * (sj_yi * cj.v + vj_yi * pj.s);
    }
    const double sy = pi.s.dot(pi.y);
    const double yv = pi.y.dot(v);
    dot_count_ += 2;
    const double rp = rho_ / pi.p;
    const double denom_b = sy + rp;
    if (denom_b <= 0.0) throw InvalidInput("LimitedMemory: s'y + rho/p <= 0");
    cache_[i].v = std::move(v);
    cache_[i].a = (1.0 + yv / denom_b) / (sy + 0.5 * rp);
    cache_[i].b = -1.0 / denom_b;
  }
  cache_valid_ = true;
}

Vec LimitedMemory::apply_cached(const Vec& z) const {
  if (z.size() != h0_diag_.size())
    throw InvalidInput("LimitedMemory::apply: dimension mismatch");
  if (!cache_valid_) rebuild_cache();
  Vec w = h0_diag_.cwiseProduct(z);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& pi = pairs_[i];
    const auto& ci = cache_[i];
    const double si_z = pi.s.dot(z);
    const double vi_z = ci.v.dot(z);
    dot_count_ += 2;
    w += (ci.a * si_z) * pi.s + ci.b * (si_z * ci.v + vi_z * pi.s);
  }
  return w;
}

Vec LimitedMemory::apply(const Vec& z) const {
  cache_valid_ = false;
  return apply_cached(z);
}

}  // namespace sqn
