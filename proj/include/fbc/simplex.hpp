#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "fbc/channel.hpp"
#include "fbc/core.hpp"

namespace fbc {

// Visits every probability vector with denominator `resolution` on the
// (dim-1)-simplex, in lexicographic order of the count vectors.
template <typename S, typename F>
void for_each_simplex_point(Index dim, int resolution, F&& visit) {
  std::vector<int> counts(static_cast<std::size_t>(dim), 0);
  Vector<S> p(dim);
  auto rec = [&](auto&& self, Index i, int remaining) -> void {
    if (i == dim - 1) {
      counts[static_cast<std::size_t>(i)] = remaining;
      for (Index j = 0; j < dim; ++j) p(j) = S(counts[static_cast<std::size_t>(j)]) / S(resolution);
      visit(p);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      counts[static_cast<std::size_t>(i)] = k;
      self(self, i + 1, remaining - k);
    }
  };
  rec(rec, 0, resolution);
}

// Deterministic pattern search on the simplex: proposes mass transfers
// between coordinate pairs with a shrinking step, optionally restricted by a
// feasibility predicate. Maximizes `f`.
template <typename S>
Vector<S> simplex_pattern_search(const Vector<S>& start, const std::function<S(const Vector<S>&)>& f,
                                 const std::function<bool(const Vector<S>&)>& feasible, S initial_step,
                                 S min_step = S(1e-12)) {
  Vector<S> best = start;
  S best_val = f(best);
  const Index d = start.size();
  S step = initial_step;
  while (step >= min_step) {
    bool improved = false;
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) {
        if (i == j) continue;
        S t = std::min(step, best(j));
        if (t <= S(0)) continue;
        Vector<S> cand = best;
        cand(j) -= t;
        cand(i) += t;
        if (!feasible(cand)) continue;
        S v = f(cand);
        if (v > best_val) {
          best_val = v;
          best = cand;
          improved = true;
        }
      }
    }
    if (!improved) step /= S(2);
  }
  return best;
}

}  // namespace fbc
