#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "sqn/curvature.hpp"
#include "sqn/sbfgs_dense.hpp"

namespace sqn {

/// Limited-memory stochastic BFGS operator. Holds a FIFO window of at most r
/// accepted curvature pairs and a diagonal H0, and computes H z by replaying
/// the rank-3 corrections without assembling any matrix. Cost O(d r^2) per
/// fresh apply; the per-pair (v_i, a_i, b_i) triples are cached so repeated
/// applies on an unchanged window cost O(d r).
class LimitedMemory {
 public:
  LimitedMemory(std::size_t r, Vec h0_diag, double rho);

  /// Appends an accepted pair, evicting the oldest once the window is full.
  void push(CurvaturePair pair);

  /// H z, recomputing the inner recursion from scratch.
  Vec apply(const Vec& z) const;

  /// H z using (and refreshing) the cached per-pair state.
  Vec apply_cached(const Vec& z) const;

  void set_h0_diag(Vec h0_diag);

  std::size_t size() const { return pairs_.size(); }
  std::size_t capacity() const { return r_; }
  const std::deque<CurvaturePair>& pairs() const { return pairs_; }
  const Vec& h0_diag() const { return h0_diag_; }
  double rho() const { return rho_; }

  /// Inner products computed since construction; exposed for cost assertions.
  std::size_t dot_count() const { return dot_count_; }

 private:
  struct PairState {
    Vec v;  // H_i y_i with H_i built from all older pairs
    double a = 0.0;
    double b = 0.0;
  };

  void rebuild_cache() const;

  std::size_t r_;
  Vec h0_diag_;
  double rho_;
  std::deque<CurvaturePair> pairs_;  // oldest first

  mutable std::vector<PairState> cache_;
  mutable bool cache_valid_ = false;
  mutable std::size_t dot_count_ = 0;
};

}  // namespace sqn
