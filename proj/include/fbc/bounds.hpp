#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fbc/channel.hpp"
#include "fbc/core.hpp"
#include "fbc/exactdist.hpp"
#include "fbc/measures.hpp"
#include "fbc/normal.hpp"
#include "fbc/simplex.hpp"

namespace fbc {

// Closed-form bound on the tilted sum E[1{S_n <= r} e^{-(r-S_n)}]:
// 1/sqrt(2 pi m2_n) + c m3_n / m2_n^{3/2}, c = 1 i.i.d., 2 independent.
// m2/m3 are per-letter moments; m2_n = n m2, m3_n = n m3.
template <typename S>
S tilted_sum_bound(S m2, S m3, long n, bool iid) {
  if (!(m2 > S(0))) fail(errc::bad_parameter, "tilted_sum_bound: m2 must be positive");
  S m2n = S(n) * m2, m3n = S(n) * m3;
  S c = iid ? S(1) : S(2);
  return S(1) / std::sqrt(S(2) * S(M_PI) * m2n) + c * m3n / std::pow(m2n, S(1.5));
}

template <typename S>
struct Bracket {
  S lower, upper;
};

// Berry-Esseen bracket for P(S_n <= threshold) with constant 1 (independent)
// or 1/2 (i.i.d.).
template <typename S>
Bracket<S> berry_esseen_bracket(S m1, S m2, S m3, long n, S threshold, bool iid) {
  if (!(m2 > S(0))) fail(errc::bad_parameter, "berry_esseen_bracket: m2 must be positive");
  S z = (threshold - S(n) * m1) / std::sqrt(S(n) * m2);
  S width = (iid ? S(0.5) : S(1)) * m3 / (std::sqrt(S(n)) * std::pow(m2, S(1.5)));
  S center = normal_cdf(z);
  return {std::max(center - width, S(0)), std::min(center + width, S(1))};
}

// ---- converse for symmetric singular channels ----

template <typename S>
struct SymmetricConverseConstants {
  S eps;
  S capacity;  // = I(U;W), uniform achieves capacity for symmetric channels
  S v;         // V(W) = V_eps(W)
  S m3;        // third absolute moment at the reference input
  S k_ratio;   // m3 / V^{3/2}
  S K;
  long n_o;
};

// The reference input x_o is index 0; the MGF-constancy property makes the
// choice immaterial for symmetric singular channels.
inline constexpr Index kReferenceInput = 0;

template <typename S>
SymmetricConverseConstants<S> symmetric_converse_constants(const Channel<S>& ch, S eps,
                                                           std::uint64_t sym_budget = 1000000) {
  if (!(eps > S(0) && eps < S(1))) fail(errc::bad_parameter, "eps must be in (0,1)");
  auto cls = classify(ch, sym_budget);
  if (!cls.symmetric) fail(errc::not_applicable, "channel is not symmetric");
  if (!cls.singular) fail(errc::not_applicable, "channel is not singular");

  Vector<S> u = uniform_input(ch);
  SymmetricConverseConstants<S> k;
  k.eps = eps;
  k.capacity = mutual_information(ch, u);
  k.v = dispersion(ch, u);
  if (!(k.v > S(1e-14))) fail(errc::not_applicable, "channel has zero dispersion");
  auto tm = third_moments(ch, u);
  k.m3 = tm.m3_x(kReferenceInput);
  k.k_ratio = k.m3 / std::pow(k.v, S(1.5));

  S z = normal_quantile(eps);
  S f = normal_pdf(z);
  k.K = k.k_ratio * std::sqrt(k.v) / f + (S(2) / f) * (S(1) / std::sqrt(S(2) * S(M_PI)) + k.m3 / k.v);

  // least n with 1 - K / (2 f sqrt(n V)) > 1/2, solved directly then fixed
  // up by integer checks
  auto cond = [&](long n) {
    return S(1) - k.K / (S(2) * f * std::sqrt(S(n) * k.v)) > S(0.5);
  };
  S x = (k.K / f) * (k.K / f) / k.v;
  long n0 = static_cast<long>(std::floor(x)) + 1;
  if (n0 < 1) n0 = 1;
  while (n0 > 1 && cond(n0 - 1)) --n0;
  while (!cond(n0)) ++n0;
  k.n_o = n0;
  return k;
}

// ---- converse for asymmetric singular channels, constant composition ----

template <typename S>
struct CCConverseConstants {
  S eps;
  S capacity;
  Vector<S> caid;
  S v_eps;
  S delta;       // L2 radius splitting near/far compositions
  S nu;          // dispersion floor for the near region
  S gamma;       // capacity gap outside the delta-ball
  S v_max;       // max of V over the simplex
  S kappa;       // alphabet bound on the third moment
  S k_s1;        // near-region constant
  S beta1;       // quadratic capacity-drop coefficient on the near region
  S beta2;       // sqrt-dispersion Lipschitz coefficient on the near region
  S a = S(0);            // only meaningful for eps > 1/2
  S extra_log_term = S(0);  // -ln(1 - eps - 2/a), eps > 1/2
  S quad_term;   // (beta2 |z|)^2 / (4 beta1)
  S K_total;
  long n_o;         // far-composition threshold
  long n_tilde_o;   // near-composition threshold
  int net_resolution;
  std::size_t net_ball_points;
  bool net_verified = true;  // delta conditions checked on a net, not proven
};

template <typename S>
struct CCOptions {
  int net_resolution = 100;   // simplex net density for the delta conditions and beta estimates
  int gamma_resolution = 200; // grid for the capacity-gap search
  S delta_init = S(0.25);
  int max_delta_shrinks = 24;
  std::uint64_t sym_budget = 1000000;
};

// C(W) - max I(Q;W) over compositions at L2 distance >= delta from the CAID;
// grid search followed by pattern search restricted to the region.
template <typename S>
S capacity_gap(const Channel<S>& ch, S delta, int resolution = 200, const CaidProbe<S>* probe_in = nullptr) {
  if (ch.input_size() > 6) fail(errc::dimension_too_large, "capacity_gap: |X| > 6");
  CaidProbe<S> local;
  const CaidProbe<S>* probe = probe_in;
  if (!probe) {
    local = unique_caid(ch);
    probe = &local;
  }
  S best = -std::numeric_limits<S>::infinity();
  Vector<S> best_q;
  for_each_simplex_point<S>(ch.input_size(), resolution, [&](const Vector<S>& p) {
    if ((p - probe->caid).norm() < delta) return;
    S v = mutual_information(ch, p);
    if (v > best) {
      best = v;
      best_q = p;
    }
  });
  if (!best_q.size()) fail(errc::bad_parameter, "capacity_gap: no grid point outside the delta ball");
  std::function<S(const Vector<S>&)> f = [&](const Vector<S>& p) { return mutual_information(ch, p); };
  std::function<bool(const Vector<S>&)> feas = [&](const Vector<S>& p) {
    return p.minCoeff() >= S(0) && (p - probe->caid).norm() >= delta - S(1e-15);
  };
  Vector<S> refined = simplex_pattern_search<S>(best_q, f, feas, S(1) / S(resolution), S(1e-12));
  best = std::max(best, f(refined));
  S cap = std::max(probe->capacity, best);
  return cap - best;
}

enum class CompositionRegion { near_high_var, near_low_var, far };

template <typename S>
CompositionRegion region_classify(const Channel<S>& ch, const Vector<S>& q_in, S delta, S nu,
                                  const CaidProbe<S>* probe_in = nullptr) {
  CaidProbe<S> local;
  const CaidProbe<S>* probe = probe_in;
  if (!probe) {
    local = unique_caid(ch);
    probe = &local;
  }
  check_input_dist(ch, q_in);
  S d = (q_in - probe->caid).norm();
  if (d > delta) return CompositionRegion::far;
  return dispersion(ch, q_in) >= nu ? CompositionRegion::near_high_var : CompositionRegion::near_low_var;
}

namespace detail {

// Net over the delta-ball around the CAID (grid points of the given
// resolution whose L2 distance to the CAID is <= delta).
template <typename S, typename F>
std::size_t for_each_ball_point(const Channel<S>& ch, const Vector<S>& caid, S delta, int resolution, F&& visit) {
  std::size_t count = 0;
  for_each_simplex_point<S>(ch.input_size(), resolution, [&](const Vector<S>& p) {
    if ((p - caid).norm() <= delta) {
      ++count;
      visit(p);
    }
  });
  return count;
}

}  // namespace detail

template <typename S>
CCConverseConstants<S> cc_converse_constants(const Channel<S>& ch, S eps, const CCOptions<S>& opt = {}) {
  if (!(eps > S(0) && eps < S(1))) fail(errc::bad_parameter, "eps must be in (0,1)");
  if (std::abs(eps - S(0.5)) < S(1e-15))
    fail(errc::not_applicable, "eps = 1/2 is outside the hypothesis of the constant-composition bound");
  auto cls = classify(ch, opt.sym_budget);
  if (!cls.singular) fail(errc::not_applicable, "channel is not singular");
  if (cls.symmetric) fail(errc::not_applicable, "channel is symmetric; use the symmetric-channel bound");
  if (ch.input_size() > 6) fail(errc::dimension_too_large, "|X| > 6");

  auto probe = unique_caid(ch);
  CCConverseConstants<S> c;
  c.eps = eps;
  c.capacity = probe.capacity;
  c.caid = probe.caid;
  c.v_eps = dispersion(ch, probe.caid);
  if (!(c.v_eps > S(0)))
    fail(errc::not_applicable, "zero dispersion at the capacity-achieving input is not covered");
  c.net_resolution = opt.net_resolution;

  S z = normal_quantile(eps);
  S f = normal_pdf(z);

  if (eps < S(0.5)) {
    c.nu = c.v_eps / S(2);
  } else {
    c.a = S(2) / (S(1) - eps) + S(1);
    c.nu = c.v_eps * z * z / c.a;
    if (!(c.nu > S(0))) fail(errc::not_applicable, "dispersion floor vanished (eps too close to 1/2)");
    c.extra_log_term = -std::log(S(1) - eps - S(2) / c.a);
  }

  // delta: geometric shrink from delta_init until, on the net,
  // (a) q_Q has full support for every Q in the ball, and
  // (b) for eps < 1/2 no ball point has V below nu.
  S delta = opt.delta_init;
  bool found = false;
  for (int s = 0; s < opt.max_delta_shrinks; ++s) {
    bool ok = true;
    std::size_t pts = detail::for_each_ball_point(ch, probe.caid, delta, opt.net_resolution, [&](const Vector<S>& p) {
      if (!ok) return;
      Vector<S> q = output_dist(ch, p);
      if (q.minCoeff() <= S(0)) ok = false;
      if (ok && eps < S(0.5) && dispersion(ch, p) < c.nu) ok = false;
    });
    if (ok && pts >= 2) {  // need at least one non-CAID point for the beta estimates
      c.delta = delta;
      c.net_ball_points = pts;
      found = true;
      break;
    }
    delta /= S(2);
  }
  if (!found) fail(errc::net_too_coarse, "no delta satisfied the net conditions");

  // beta1, beta2 and the near-region constant from the net restricted to
  // S1(delta, nu)
  S beta1 = std::numeric_limits<S>::infinity();
  S beta2 = S(0);
  S max_ratio = S(0);
  S cap_used = c.capacity;
  std::vector<Vector<S>> ball;
  detail::for_each_ball_point(ch, probe.caid, c.delta, opt.net_resolution,
                              [&](const Vector<S>& p) { ball.push_back(p); });
  for (const auto& p : ball) cap_used = std::max(cap_used, mutual_information(ch, p));
  S sqrt_v_star = std::sqrt(c.v_eps);
  for (const auto& p : ball) {
    S vp = dispersion(ch, p);
    if (vp < c.nu) continue;  // outside S1(delta, nu)
    auto tm3 = third_moments(ch, p);
    max_ratio = std::max(max_ratio, tm3.m3_avg / vp);
    S d = (p - probe.caid).norm();
    if (d > S(1e-9)) {
      beta1 = std::min(beta1, (cap_used - mutual_information(ch, p)) / (d * d));
      beta2 = std::max(beta2, std::abs(std::sqrt(vp) - sqrt_v_star) / d);
    }
  }
  if (!(beta1 > S(0)) || !std::isfinite(beta1) || !(beta2 > S(0)))
    fail(errc::net_too_coarse, "degenerate beta estimates on the net");
  c.beta1 = beta1;
  c.beta2 = beta2;

  c.kappa = kappa_bound<S>(ch.input_size(), ch.output_size());
  c.k_s1 = (S(2) / f) * (max_ratio + S(1) / std::sqrt(S(2) * S(M_PI)) + c.kappa / c.nu);

  // V_max over the whole simplex (grid + refinement)
  S vbest = S(0);
  Vector<S> vq;
  for_each_simplex_point<S>(ch.input_size(), opt.net_resolution, [&](const Vector<S>& p) {
    S v = dispersion(ch, p);
    if (v > vbest) {
      vbest = v;
      vq = p;
    }
  });
  std::function<S(const Vector<S>&)> vf = [&](const Vector<S>& p) { return dispersion(ch, p); };
  std::function<bool(const Vector<S>&)> vfeas = [](const Vector<S>&) { return true; };
  Vector<S> vref = simplex_pattern_search<S>(vq, vf, vfeas, S(1) / S(opt.net_resolution), S(1e-10));
  c.v_max = std::max(vbest, vf(vref));

  c.gamma = capacity_gap(ch, c.delta, opt.gamma_resolution, &probe);
  if (!(c.gamma > S(0))) fail(errc::net_too_coarse, "capacity gap is not positive");

  // far-composition threshold: least n with
  // 1 - e^{-(n gamma/2 + sqrt(n v_eps) z)} - 4 v_max / (n gamma^2) > eps
  auto far_cond = [&](long n) {
    S expo = S(n) * c.gamma / S(2) + std::sqrt(S(n) * c.v_eps) * z;
    return S(1) - std::exp(-expo) - S(4) * c.v_max / (S(n) * c.gamma * c.gamma) > eps;
  };
  long n = 1;
  const long scan_limit = 200000;
  while (n <= scan_limit && !far_cond(n)) ++n;
  if (n > scan_limit) {
    long lo = scan_limit, hi = scan_limit;
    while (!far_cond(hi)) {
      if (hi > (std::numeric_limits<long>::max() >> 2)) fail(errc::no_convergence, "far threshold out of range");
      lo = hi;
      hi *= 2;
    }
    while (lo + 1 < hi) {
      long mid = lo + (hi - lo) / 2;
      (far_cond(mid) ? hi : lo) = mid;
    }
    n = hi;
  }
  c.n_o = n;

  // near-composition threshold: least n with sqrt(n) > 2 K_s1 / (f sqrt(nu))
  S rhs = S(2) * c.k_s1 / (f * std::sqrt(c.nu));
  long nt = static_cast<long>(std::floor(rhs * rhs)) + 1;
  if (nt < 1) nt = 1;
  while (nt > 1 && std::sqrt(S(nt - 1)) > rhs) --nt;
  while (!(std::sqrt(S(nt)) > rhs)) ++nt;
  c.n_tilde_o = nt;

  c.quad_term = (c.beta2 * std::abs(z)) * (c.beta2 * std::abs(z)) / (S(4) * c.beta1);
  c.K_total = c.quad_term + c.k_s1 + c.extra_log_term;
  return c;
}

// Left side of the far-composition threshold condition, exposed for audits.
template <typename S>
S cc_far_condition_lhs(const CCConverseConstants<S>& c, long n) {
  S z = normal_quantile(c.eps);
  S expo = S(n) * c.gamma / S(2) + std::sqrt(S(n) * c.v_eps) * z;
  return S(1) - std::exp(-expo) - S(4) * c.v_max / (S(n) * c.gamma * c.gamma);
}

// ---- assembled reports ----

template <typename S>
struct ConverseReport {
  long n;
  S eps;
  S bound_nats;  // upper bound on ln M* (or ln M*_c)
  std::string regime;
  long valid_from;
  bool trivial;            // true when n < valid_from and the trivial bound was substituted
  S capacity_term, normal_term, third_term;
  bool third_order_exact;  // false when the third-order term is order-only
  std::optional<SymmetricConverseConstants<S>> sym_constants;
  std::optional<CCConverseConstants<S>> cc_constants;
};

template <typename S>
S trivial_bound(const Channel<S>& ch, long n) {
  return S(n) * std::log(S(std::min(ch.input_size(), ch.output_size())));
}

template <typename S>
ConverseReport<S> symmetric_converse(const Channel<S>& ch, S eps, long n,
                                     const SymmetricConverseConstants<S>* pre = nullptr) {
  SymmetricConverseConstants<S> local;
  if (!pre) {
    local = symmetric_converse_constants(ch, eps);
    pre = &local;
  }
  ConverseReport<S> r;
  r.n = n;
  r.eps = eps;
  r.regime = "symmetric-singular";
  r.valid_from = pre->n_o;
  r.third_order_exact = true;
  r.sym_constants = *pre;
  S z = normal_quantile(eps);
  r.capacity_term = S(n) * pre->capacity;
  r.normal_term = std::sqrt(S(n) * pre->v) * z;
  r.third_term = pre->K;
  if (n >= pre->n_o) {
    r.trivial = false;
    r.bound_nats = r.capacity_term + r.normal_term + r.third_term;
  } else {
    r.trivial = true;
    r.bound_nats = trivial_bound(ch, n);
  }
  return r;
}

// Normal-approximation series for symmetric channels: the third-order term
// is +ln sqrt(n) (nonsingular, V>0), a computed constant (singular, V>0), or
// order-one (V=0).
template <typename S>
ConverseReport<S> theorem_series(const Channel<S>& ch, S eps, long n, std::uint64_t sym_budget = 1000000) {
  auto cls = classify(ch, sym_budget);
  if (!cls.symmetric) fail(errc::not_symmetric, "series expansion requires a symmetric channel");
  Vector<S> u = uniform_input(ch);
  S cap = mutual_information(ch, u);
  S v = dispersion(ch, u);
  S z = normal_quantile(eps);

  ConverseReport<S> r;
  r.n = n;
  r.eps = eps;
  r.valid_from = 1;
  r.trivial = false;
  r.capacity_term = S(n) * cap;
  if (v <= S(1e-14)) {
    r.regime = "zero-dispersion";
    r.normal_term = S(0);
    r.third_term = S(0);
    r.third_order_exact = false;  // O(1), constant not computed
    r.bound_nats = r.capacity_term;
    return r;
  }
  r.normal_term = std::sqrt(S(n) * v) * z;
  if (cls.singular) {
    auto k = symmetric_converse_constants(ch, eps, sym_budget);
    r.regime = "symmetric-singular";
    r.third_term = k.K;
    r.third_order_exact = true;
    r.valid_from = k.n_o;
    r.sym_constants = k;
  } else {
    r.regime = "symmetric-nonsingular";
    r.third_term = std::log(std::sqrt(S(n)));
    r.third_order_exact = false;  // +ln sqrt(n) plus an order-one remainder
  }
  r.bound_nats = r.capacity_term + r.normal_term + r.third_term;
  return r;
}

template <typename S>
ConverseReport<S> cc_converse(const Channel<S>& ch, S eps, long n, const CCConverseConstants<S>* pre = nullptr,
                              const CCOptions<S>& opt = {}) {
  CCConverseConstants<S> local;
  if (!pre) {
    local = cc_converse_constants(ch, eps, opt);
    pre = &local;
  }
  ConverseReport<S> r;
  r.n = n;
  r.eps = eps;
  r.regime = "cc-asymmetric-singular";
  r.valid_from = std::max(pre->n_o, pre->n_tilde_o);
  r.third_order_exact = true;
  r.cc_constants = *pre;
  S z = normal_quantile(eps);
  r.capacity_term = S(n) * pre->capacity;
  r.normal_term = std::sqrt(S(n) * pre->v_eps) * z;
  r.third_term = pre->K_total;
  if (n >= r.valid_from) {
    r.trivial = false;
    r.bound_nats = r.capacity_term + r.normal_term + r.third_term;
  } else {
    r.trivial = true;
    r.bound_nats = trivial_bound(ch, n);
  }
  return r;
}

// ---- the singular-channel lower bound on the error probability ----

template <typename S>
struct LowerBoundReport {
  S value;        // cdf_term - tilted_term
  S cdf_term;     // W(S_R | z^n) for a word z^n of the composition
  S tilted_term;  // sum over S_R of q(y^n) e^{-n[R - .]}
  S rate;
  long n;
  std::uint64_t enumerated;
};

// Exact evaluation of the error lower bound for constant-composition
// codebooks on singular channels: both terms via the exact engine.
template <typename S>
LowerBoundReport<S> singular_cc_lower_bound(const Channel<S>& ch, const Vector<S>& q_in,
                                            const std::vector<long>& composition, S rate,
                                            std::uint64_t budget = 10000000) {
  if (!is_singular_wrt(ch, q_in)) fail(errc::not_singular, "lower bound requires a singular channel");
  long n = 0;
  for (long kx : composition) n += kx;
  if (n < 1) fail(errc::bad_parameter, "empty composition");

  Vector<S> q = output_dist(ch, q_in);
  for (Index x = 0; x < ch.input_size(); ++x) {
    if (composition[static_cast<std::size_t>(x)] == 0) continue;
    for (Index y = 0; y < ch.output_size(); ++y)
      if (ch.w(x, y) > S(0) && q(y) <= S(0))
        fail(errc::domination_failure, "q_Q does not dominate a used row");
  }

  S threshold = S(n) * rate;
  auto word_sum = word_sum_distribution(ch, q_in, composition, budget);
  auto first = tail_from_sum(word_sum, n, threshold);
  auto dec_q = decompose<S>(ch, q_in, {});
  auto second = exact_tail(dec_q, n, threshold, budget);

  LowerBoundReport<S> r;
  r.cdf_term = first.cdf;
  r.tilted_term = second.tilted;
  r.value = r.cdf_term - r.tilted_term;
  r.rate = rate;
  r.n = n;
  r.enumerated = first.enumerated + second.enumerated;
  return r;
}

}  // namespace fbc
