#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "fbc/channel.hpp"
#include "fbc/core.hpp"
#include "fbc/simplex.hpp"

namespace fbc {

// I(Q;W) in nats. Terms with zero joint mass are dropped before any log.
template <typename S>
S mutual_information(const Channel<S>& ch, const Vector<S>& q_in) {
  Vector<S> q = output_dist(ch, q_in);
  Kahan<S> acc;
  for (Index x = 0; x < ch.input_size(); ++x) {
    if (q_in(x) <= S(0)) continue;
    for (Index y = 0; y < ch.output_size(); ++y) {
      S w = ch.w(x, y);
      if (w <= S(0)) continue;
      acc.add(q_in(x) * w * std::log(w / q(y)));
    }
  }
  return acc.value();
}

// D(W(.|x) || q) for a fixed output distribution q.
template <typename S>
S row_divergence(const Channel<S>& ch, const Vector<S>& q, Index x) {
  Kahan<S> acc;
  for (Index y = 0; y < ch.output_size(); ++y) {
    S w = ch.w(x, y);
    if (w <= S(0)) continue;
    acc.add(w * std::log(w / q(y)));
  }
  return acc.value();
}

template <typename S>
struct CapacityOptions {
  S gap_tol = S(1e-10);
  int max_iterations = 100000;
};

template <typename S>
struct CapacityResult {
  S capacity;
  Vector<S> caid;
  S gap;         // final upper-lower sandwich width
  int iterations;
};

// Alternating (Blahut-Arimoto) capacity solver. Stops when the standard
// sandwich max_x D(W(.|x)||q) - I(Q;W) falls below gap_tol.
template <typename S>
CapacityResult<S> capacity(const Channel<S>& ch, const CapacityOptions<S>& opt = {},
                           const Vector<S>* start = nullptr) {
  Vector<S> q_in = start ? *start : uniform_input(ch);
  check_input_dist(ch, q_in);
  const S floor_mass = S(1e-300);
  for (Index x = 0; x < q_in.size(); ++x)
    if (q_in(x) < floor_mass) q_in(x) = floor_mass;
  q_in /= q_in.sum();

  Vector<S> d(ch.input_size());
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Vector<S> q = ch.w.transpose() * q_in;
    S ub = S(0), lb = S(0);
    for (Index x = 0; x < ch.input_size(); ++x) {
      d(x) = row_divergence(ch, q, x);
      if (x == 0 || d(x) > ub) ub = d(x);
      lb += q_in(x) * d(x);
    }
    if (ub - lb < opt.gap_tol) return {lb, q_in, ub - lb, it};
    S dmax = d.maxCoeff();
    for (Index x = 0; x < ch.input_size(); ++x) {
      q_in(x) *= std::exp(d(x) - dmax);
      if (q_in(x) < floor_mass) q_in(x) = floor_mass;
    }
    q_in /= q_in.sum();
  }
  fail(errc::no_convergence, "capacity solver did not reach the requested gap");
}

template <typename S>
struct CaidProbe {
  S capacity;
  Vector<S> caid;
  bool unique;
  S max_pairwise_l2;
};

// Multi-start uniqueness probe: 20 seeded Dirichlet(1) starts; the CAID is
// declared unique when all converged inputs agree within L2 distance 1e-6.
// Starts run independently and merge deterministically (best value, then
// lexicographically smallest input).
template <typename S>
CaidProbe<S> probe_caid(const Channel<S>& ch, int starts = 20, std::uint64_t seed = 0x5eedf00du) {
  CapacityOptions<S> opt;
  opt.gap_tol = S(1e-13);
  opt.max_iterations = 200000;

  std::vector<CapacityResult<S>> results;
  {
    CapacityOptions<S> first = opt;
    results.push_back(capacity(ch, first));
  }
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ed(1.0);
  for (int s = 1; s < starts; ++s) {
    Vector<S> p(ch.input_size());
    for (Index x = 0; x < ch.input_size(); ++x) p(x) = S(ed(rng));
    p /= p.sum();
    results.push_back(capacity(ch, opt, &p));
  }

  S max_d = S(0);
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      S d = (results[i].caid - results[j].caid).norm();
      if (d > max_d) max_d = d;
    }

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].capacity > results[best].capacity) {
      best = i;
    } else if (results[i].capacity == results[best].capacity) {
      for (Index x = 0; x < ch.input_size(); ++x) {
        if (results[i].caid(x) == results[best].caid(x)) continue;
        if (results[i].caid(x) < results[best].caid(x)) best = i;
        break;
      }
    }
  }
  return {results[best].capacity, results[best].caid, max_d <= S(1e-6), max_d};
}

template <typename S>
CaidProbe<S> unique_caid(const Channel<S>& ch) {
  auto probe = probe_caid(ch);
  if (!probe.unique)
    fail(errc::multi_caid_unsupported,
         "capacity-achieving input distribution is not unique (probe spread " +
             std::to_string(static_cast<double>(probe.max_pairwise_l2)) + ")");
  return probe;
}

// V(P,W): conditional variance of the information density.
template <typename S>
S dispersion(const Channel<S>& ch, const Vector<S>& p) {
  Vector<S> q = output_dist(ch, p);
  Kahan<S> acc;
  for (Index x = 0; x < ch.input_size(); ++x) {
    if (p(x) <= S(0)) continue;
    S mean = row_divergence(ch, q, x);
    for (Index y = 0; y < ch.output_size(); ++y) {
      S w = ch.w(x, y);
      if (w <= S(0)) continue;
      S t = std::log(w / q(y)) - mean;
      acc.add(p(x) * w * t * t);
    }
  }
  return acc.value();
}

// V^r(P,W): variance around the output-conditional mean; vanishes exactly on
// channels that are singular relative to the support of P.
template <typename S>
S reverse_dispersion(const Channel<S>& ch, const Vector<S>& p) {
  Vector<S> q = output_dist(ch, p);
  Vector<S> cond_mean(ch.output_size());
  for (Index y = 0; y < ch.output_size(); ++y) {
    S m{0};
    if (q(y) > S(0)) {
      for (Index x = 0; x < ch.input_size(); ++x) {
        S w = ch.w(x, y);
        if (p(x) <= S(0) || w <= S(0)) continue;
        m += p(x) * w / q(y) * std::log(w / q(y));
      }
    }
    cond_mean(y) = m;
  }
  Kahan<S> acc;
  for (Index x = 0; x < ch.input_size(); ++x) {
    if (p(x) <= S(0)) continue;
    for (Index y = 0; y < ch.output_size(); ++y) {
      S w = ch.w(x, y);
      if (w <= S(0)) continue;
      S t = std::log(w / q(y)) - cond_mean(y);
      acc.add(p(x) * w * t * t);
    }
  }
  return acc.value();
}

// U(Q,W): variance of the information density centered at I(Q;W).
template <typename S>
S cond_info_variance(const Channel<S>& ch, const Vector<S>& q_in) {
  Vector<S> q = output_dist(ch, q_in);
  S mi = mutual_information(ch, q_in);
  Kahan<S> acc;
  for (Index x = 0; x < ch.input_size(); ++x) {
    if (q_in(x) <= S(0)) continue;
    for (Index y = 0; y < ch.output_size(); ++y) {
      S w = ch.w(x, y);
      if (w <= S(0)) continue;
      S t = std::log(w / q(y)) - mi;
      acc.add(q_in(x) * w * t * t);
    }
  }
  return acc.value();
}

// V_eps(W): min (eps < 1/2) or max (eps >= 1/2) of V over the CAID set.
// Requires the uniqueness probe to pass; both branches then coincide.
template <typename S>
S eps_dispersion(const Channel<S>& ch, S eps) {
  if (!(eps > S(0) && eps < S(1))) fail(errc::bad_parameter, "eps_dispersion: eps must be in (0,1)");
  auto probe = unique_caid(ch);
  return dispersion(ch, probe.caid);
}

template <typename S>
struct ThirdMoments {
  Vector<S> m3_x;  // per input, centered at that input's conditional mean
  S m3_avg;        // sum_x Q(x) m3(x)
  S m3_tilde;      // centered at I(Q;W)
  S kappa;         // alphabet-size bound on m3_tilde
};

template <typename S>
S kappa_bound(Index in_size, Index out_size) {
  S xs = std::cbrt(S(in_size)), ys = std::cbrt(S(out_size));
  S base = S(3) * (xs + ys) / std::exp(S(1)) + std::log(S(std::min(in_size, out_size)));
  return base * base * base;
}

template <typename S>
ThirdMoments<S> third_moments(const Channel<S>& ch, const Vector<S>& q_in) {
  Vector<S> q = output_dist(ch, q_in);
  S mi = mutual_information(ch, q_in);
  ThirdMoments<S> tm;
  tm.m3_x.resize(ch.input_size());
  Kahan<S> avg, tilde;
  for (Index x = 0; x < ch.input_size(); ++x) {
    S mean = row_divergence(ch, q, x);
    Kahan<S> mx;
    for (Index y = 0; y < ch.output_size(); ++y) {
      S w = ch.w(x, y);
      if (w <= S(0)) continue;
      S dens = std::log(w / q(y));
      mx.add(w * std::pow(std::abs(dens - mean), S(3)));
      if (q_in(x) > S(0)) tilde.add(q_in(x) * w * std::pow(std::abs(dens - mi), S(3)));
    }
    tm.m3_x(x) = mx.value();
    if (q_in(x) > S(0)) avg.add(q_in(x) * tm.m3_x(x));
  }
  tm.m3_avg = avg.value();
  tm.m3_tilde = tilde.value();
  tm.kappa = kappa_bound<S>(ch.input_size(), ch.output_size());
  return tm;
}

// M_x(lambda) = E_{W(.|x)} (W(Y|x)/q(Y))^lambda.
template <typename S>
S mgf(const Channel<S>& ch, const Vector<S>& q_in, Index x, S lambda) {
  Vector<S> q = output_dist(ch, q_in);
  Kahan<S> acc;
  for (Index y = 0; y < ch.output_size(); ++y) {
    S w = ch.w(x, y);
    if (w <= S(0)) continue;
    acc.add(w * std::exp(lambda * std::log(w / q(y))));
  }
  return acc.value();
}

// ---- sphere-packing exponent ----

template <typename S>
struct SpOptions {
  S rho_max = S(100);
  S rho_tol = S(1e-10);
  int q_resolution = 50;  // simplex grid density for the maximization over Q
};

template <typename S>
S gallager_e0(const Channel<S>& ch, const Vector<S>& q_in, S rho) {
  S expo = S(1) / (S(1) + rho);
  Kahan<S> outer;
  for (Index y = 0; y < ch.output_size(); ++y) {
    S inner{0};
    for (Index x = 0; x < ch.input_size(); ++x) {
      S w = ch.w(x, y);
      if (w <= S(0) || q_in(x) <= S(0)) continue;
      inner += q_in(x) * std::pow(w, expo);
    }
    if (inner > S(0)) outer.add(std::pow(inner, S(1) + rho));
  }
  return -std::log(outer.value());
}

// E_sp(R,Q,W) by golden-section search on the concave objective
// E0(rho,Q) - rho R over [0, rho_max].
template <typename S>
S sp_exponent_q(const Channel<S>& ch, S rate, const Vector<S>& q_in, const SpOptions<S>& opt = {}) {
  if (rate < S(0)) fail(errc::bad_parameter, "sp_exponent: rate must be >= 0");
  check_input_dist(ch, q_in);
  auto f = [&](S rho) { return gallager_e0(ch, q_in, rho) - rho * rate; };
  const S gr = (std::sqrt(S(5)) - S(1)) / S(2);
  S a = S(0), b = opt.rho_max;
  S x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  S f1 = f(x1), f2 = f(x2);
  while (b - a > opt.rho_tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  S v = std::max(f((a + b) / S(2)), std::max(f(S(0)), S(0)));
  return v;
}

// E_sp(R,W): grid over the input simplex followed by pattern-search
// refinement from the best grid point.
template <typename S>
S sp_exponent(const Channel<S>& ch, S rate, const SpOptions<S>& opt = {}) {
  Vector<S> best;
  S best_val = S(-1);
  for_each_simplex_point<S>(ch.input_size(), opt.q_resolution, [&](const Vector<S>& p) {
    S v = sp_exponent_q(ch, rate, p, opt);
    if (v > best_val) {
      best_val = v;
      best = p;
    }
  });
  std::function<S(const Vector<S>&)> f = [&](const Vector<S>& p) { return sp_exponent_q(ch, rate, p, opt); };
  std::function<bool(const Vector<S>&)> feas = [](const Vector<S>&) { return true; };
  Vector<S> refined = simplex_pattern_search<S>(best, f, feas, S(1) / S(opt.q_resolution), S(1e-9));
  return std::max(best_val, f(refined));
}

// Bundle of per-channel scalars commonly reported together.
template <typename S>
struct MomentProfile {
  S capacity;
  Vector<S> caid;
  S v;        // V(caid, W)
  S v_eps;    // V_eps(W)
  S v_rev;    // V^r(caid, W)
  S u;        // U(caid, W)
  Vector<S> m3_x;
  S m3_avg;
  S m3_tilde;
  S kappa;
};

template <typename S>
MomentProfile<S> compute_profile(const Channel<S>& ch, S eps) {
  auto probe = unique_caid(ch);
  MomentProfile<S> mp;
  mp.capacity = probe.capacity;
  mp.caid = probe.caid;
  mp.v = dispersion(ch, probe.caid);
  mp.v_eps = mp.v;  // unique CAID: both branches coincide
  (void)eps;
  mp.v_rev = reverse_dispersion(ch, probe.caid);
  mp.u = cond_info_variance(ch, probe.caid);
  auto tm = third_moments(ch, probe.caid);
  mp.m3_x = tm.m3_x;
  mp.m3_avg = tm.m3_avg;
  mp.m3_tilde = tm.m3_tilde;
  mp.kappa = tm.kappa;
  return mp;
}

}  // namespace fbc
