#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fbc/bounds.hpp"
#include "fbc/channel.hpp"
#include "fbc/core.hpp"
#include "fbc/exactdist.hpp"

namespace fbc {

// Exact Neyman-Pearson evaluation against the non-product output
// distribution supported on the threshold set S_R. All word sums collapse to
// type-class sums, which is what makes the evaluation exact and cheap.

template <typename S>
struct MinimaxReport {
  long n;
  S eps;
  S rate;             // the R defining S_R and the weight normalization
  S tau;              // randomization parameter of the threshold test
  S w_sr;             // W(S_R | x_o^n)
  S tilted;           // sum over S_R of q(y^n) e^{-n[R - .]}
  S log_beta;         // ln beta_{1-eps}
  S beta;             // exp(log_beta); may underflow to 0 for large n
  S rate_bound_nats;  // -ln beta, the bound on ln M*
  bool strict_check;  // w_sr - tilted > eps
  std::uint64_t enumerated;
};

namespace detail {

template <typename S>
void require_symmetric_singular(const Channel<S>& ch, std::uint64_t sym_budget = 1000000) {
  auto cls = classify(ch, sym_budget);
  if (!cls.symmetric || !cls.singular)
    fail(errc::not_applicable, "minimax evaluation requires a symmetric singular channel");
}

}  // namespace detail

// Unnormalized log-weight of an output word under the S_R-supported output
// distribution: sum_i ln delta_{y_i} if the word's statistic is within the
// threshold, nothing otherwise.
template <typename S>
std::optional<S> qstar_logweight(const Channel<S>& ch, const std::vector<Index>& y_word, S rate,
                                 std::uint64_t sym_budget = 1000000) {
  detail::require_symmetric_singular(ch, sym_budget);
  Vector<S> u = uniform_input(ch);
  auto deltas = column_constants(ch);
  const long n = static_cast<long>(y_word.size());
  S stat{0}, logw{0};
  for (Index y : y_word) {
    if (y < 0 || y >= ch.output_size()) fail(errc::bad_parameter, "output symbol out of range");
    S a = alpha(ch, u, y);
    stat += -std::log(a);
    logw += std::log(deltas[static_cast<std::size_t>(y)]);
  }
  if (stat <= S(n) * rate + tie_slack<S>(n)) return logw;
  return std::nullopt;
}

// ln of the normalization constant of the S_R-supported output distribution,
// i.e. ln sum_{y^n in S_R} prod_i delta_{y_i} = nR + ln(tilted sum).
template <typename S>
S qstar_log_normalizer(const Channel<S>& ch, long n, S rate, std::uint64_t budget = 10000000) {
  detail::require_symmetric_singular(ch);
  Vector<S> u = uniform_input(ch);
  auto dec_q = decompose<S>(ch, u, {});
  auto t = exact_tail(dec_q, n, S(n) * rate, budget);
  return S(n) * rate + std::log(t.tilted);
}

// The randomized threshold test: tau solves tau W(S_R|x_o^n) = eps; beta is
// assembled exactly from the two tail quantities.
template <typename S>
MinimaxReport<S> np_tau_beta(const Channel<S>& ch, S eps, long n, S rate, std::uint64_t budget = 10000000) {
  if (!(eps > S(0) && eps < S(1))) fail(errc::bad_parameter, "eps must be in (0,1)");
  detail::require_symmetric_singular(ch);
  Vector<S> u = uniform_input(ch);

  auto dec_row = decompose(ch, u, kReferenceInput);
  auto dec_q = decompose<S>(ch, u, {});
  S threshold = S(n) * rate;
  auto row_tail = exact_tail(dec_row, n, threshold, budget);
  auto q_tail = exact_tail(dec_q, n, threshold, budget);

  MinimaxReport<S> r;
  r.n = n;
  r.eps = eps;
  r.rate = rate;
  r.w_sr = row_tail.cdf;
  r.tilted = q_tail.tilted;
  r.enumerated = row_tail.enumerated + q_tail.enumerated;
  if (!(r.w_sr > eps))
    fail(errc::tau_out_of_range, "W(S_R|x_o^n) <= eps: rate too low or blocklength too small");
  r.tau = eps / r.w_sr;
  // beta = (1 - tau) w_sr / (e^{nR} tilted), kept in log form
  r.log_beta = std::log(r.w_sr - eps) - threshold - std::log(r.tilted);
  r.beta = std::exp(r.log_beta);
  r.rate_bound_nats = -r.log_beta;
  r.strict_check = r.w_sr - r.tilted > eps;
  return r;
}

// Independent check: enumerate output type classes, sort by likelihood
// ratio, fill the error budget under W(.|x_o^n), randomize on the boundary
// class, and return the Q*-measure of the acceptance region.
template <typename S>
S np_oracle(const Channel<S>& ch, S eps, long n, S rate, std::uint64_t budget = 10000000) {
  if (!(eps > S(0) && eps < S(1))) fail(errc::bad_parameter, "eps must be in (0,1)");
  detail::require_symmetric_singular(ch);
  Vector<S> u = uniform_input(ch);
  auto deltas = column_constants(ch);
  const Index ysz = ch.output_size();

  std::vector<S> value(static_cast<std::size_t>(ysz)), log_delta(static_cast<std::size_t>(ysz)),
      log_row(static_cast<std::size_t>(ysz));
  for (Index y = 0; y < ysz; ++y) {
    value[static_cast<std::size_t>(y)] = -std::log(alpha(ch, u, y));
    log_delta[static_cast<std::size_t>(y)] = std::log(deltas[static_cast<std::size_t>(y)]);
    S w = ch.w(kReferenceInput, y);
    log_row[static_cast<std::size_t>(y)] = w > S(0) ? std::log(w) : -std::numeric_limits<S>::infinity();
  }

  struct TypeClass {
    S log_p;      // P-mass of the class under W(.|x_o^n)
    S log_qu;     // unnormalized Q*-mass (before dividing by the normalizer)
    S ratio_key;  // log p - log q*, +inf when q* = 0 and p > 0
    std::uint64_t index;
  };
  std::vector<TypeClass> classes;

  const S slack = tie_slack<S>(n);
  const S threshold = S(n) * rate;
  auto lf = detail::log_factorial_table(n);
  std::vector<long> counts(static_cast<std::size_t>(ysz), 0);
  std::uint64_t visited = 0;

  // k * (-inf) must stay 0 for k = 0 (zero count on an unreachable symbol)
  auto kmul = [](long k, S logv) { return k == 0 ? S(0) : S(k) * logv; };

  auto rec = [&](auto&& self, Index y, long remaining, S log_mult, S stat, S lp, S lq) -> void {
    if (y == ysz - 1) {
      counts[static_cast<std::size_t>(y)] = remaining;
      if (++visited > budget) fail(errc::enumeration_budget_exceeded, "type enumeration budget exhausted");
      S lm = log_mult - S(lf[static_cast<std::size_t>(remaining)]);
      S st = stat + S(remaining) * value[static_cast<std::size_t>(y)];
      S lpp = lp + kmul(remaining, log_row[static_cast<std::size_t>(y)]);
      S lqq = lq + kmul(remaining, log_delta[static_cast<std::size_t>(y)]);
      bool in_sr = st <= threshold + slack;
      TypeClass tc;
      tc.log_p = lm + lpp;
      tc.log_qu = in_sr ? lm + lqq : -std::numeric_limits<S>::infinity();
      if (tc.log_p == -std::numeric_limits<S>::infinity() && tc.log_qu == -std::numeric_limits<S>::infinity())
        return;
      if (tc.log_qu == -std::numeric_limits<S>::infinity())
        tc.ratio_key = std::numeric_limits<S>::infinity();
      else if (tc.log_p == -std::numeric_limits<S>::infinity())
        tc.ratio_key = -std::numeric_limits<S>::infinity();
      else
        tc.ratio_key = tc.log_p - tc.log_qu;
      tc.index = visited;
      classes.push_back(tc);
      return;
    }
    for (long k = 0; k <= remaining; ++k) {
      counts[static_cast<std::size_t>(y)] = k;
      self(self, y + 1, remaining - k, log_mult - S(lf[static_cast<std::size_t>(k)]),
           stat + S(k) * value[static_cast<std::size_t>(y)], lp + kmul(k, log_row[static_cast<std::size_t>(y)]),
           lq + kmul(k, log_delta[static_cast<std::size_t>(y)]));
    }
  };
  rec(rec, 0, n, S(lf[static_cast<std::size_t>(n)]), S(0), S(0), S(0));

  // normalizer of Q* via logsumexp over in-S_R classes
  S max_lq = -std::numeric_limits<S>::infinity();
  for (const auto& c : classes) max_lq = std::max(max_lq, c.log_qu);
  if (max_lq == -std::numeric_limits<S>::infinity())
    fail(errc::tau_out_of_range, "S_R is empty at this rate");
  Kahan<S> zacc;
  for (const auto& c : classes)
    if (c.log_qu > -std::numeric_limits<S>::infinity()) zacc.add(std::exp(c.log_qu - max_lq));
  S log_z = max_lq + std::log(zacc.value());

  std::sort(classes.begin(), classes.end(), [](const TypeClass& a, const TypeClass& b) {
    if (a.ratio_key != b.ratio_key) return a.ratio_key > b.ratio_key;
    return a.index < b.index;
  });

  // Greedy fill: accept classes in decreasing ratio order until the accept
  // probability under P reaches 1 - eps; randomize on the boundary class.
  S need = S(1) - eps;
  Kahan<S> p_acc, beta_acc;
  for (const auto& c : classes) {
    S p = c.log_p == -std::numeric_limits<S>::infinity() ? S(0) : std::exp(c.log_p);
    S qn = c.log_qu == -std::numeric_limits<S>::infinity() ? S(0) : std::exp(c.log_qu - log_z);
    S have = p_acc.value();
    if (have + p < need - S(1e-15) * need) {
      p_acc.add(p);
      beta_acc.add(qn);
      continue;
    }
    S frac = p > S(0) ? (need - have) / p : S(0);
    frac = std::min(std::max(frac, S(0)), S(1));
    beta_acc.add(frac * qn);
    return beta_acc.value();
  }
  return beta_acc.value();
}

// The bound optimized over its free rate parameter. Between jumps of the
// statistic lattice, e^{nR} * tilted is constant and so is beta; the
// optimum is therefore a scan over the support of the n-fold sum.
template <typename S>
MinimaxReport<S> np_best(const Channel<S>& ch, S eps, long n, std::uint64_t budget = 10000000) {
  if (!(eps > S(0) && eps < S(1))) fail(errc::bad_parameter, "eps must be in (0,1)");
  detail::require_symmetric_singular(ch);
  Vector<S> u = uniform_input(ch);
  auto dec_row = decompose(ch, u, kReferenceInput);
  auto dec_q = decompose<S>(ch, u, {});
  auto sum_row = sum_distribution_log(dec_row, n, budget);
  auto sum_q = sum_distribution_log(dec_q, n, budget);

  // Walk both supports jointly in log domain (atoms can underflow a double
  // while their exponential weights stay order one). The class values are
  // built from the same per-letter values, so the supports align exactly.
  std::size_t iq = 0;
  Kahan<S> w_acc;
  S z_shift = -std::numeric_limits<S>::infinity();  // streaming logsumexp of ln q_prob + value
  Kahan<S> z_acc;
  S best_obj = std::numeric_limits<S>::infinity();
  S best_r = S(0);
  bool found = false;

  for (const auto& c : sum_row) {
    w_acc.add(std::exp(c.log_prob));
    while (iq < sum_q.size() && sum_q[iq].value <= c.value + static_cast<S>(tol::value_merge)) {
      S term = sum_q[iq].log_prob + sum_q[iq].value;
      if (term > z_shift) {
        if (z_shift > -std::numeric_limits<S>::infinity()) {
          S scale = std::exp(z_shift - term);
          Kahan<S> rescaled;
          rescaled.add(z_acc.value() * scale);
          z_acc = rescaled;
        }
        z_shift = term;
      }
      z_acc.add(std::exp(term - z_shift));
      ++iq;
    }
    S w = w_acc.value();
    if (!(w > eps) || z_acc.value() <= S(0)) continue;
    S log_z = z_shift + std::log(z_acc.value());
    S obj = log_z - std::log(w - eps);  // -ln beta at threshold r = c.value
    if (obj < best_obj) {
      best_obj = obj;
      best_r = c.value;
      found = true;
    }
  }
  if (!found) fail(errc::tau_out_of_range, "no threshold with W(S_R|x_o^n) > eps");
  return np_tau_beta(ch, eps, n, best_r / S(n), budget);
}

}  // namespace fbc
