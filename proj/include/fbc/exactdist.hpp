#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbc/channel.hpp"
#include "fbc/core.hpp"

namespace fbc {

// Per-letter law of the statistic -ln alpha_Y(Q) under a chosen measure,
// grouped by value. Values are strictly increasing; probabilities sum to 1.
template <typename S>
struct ValueClass {
  S value;
  S prob;
};

template <typename S>
struct Decomposition {
  std::vector<ValueClass<S>> classes;
  std::string measure;  // "q" or "W(.|x=<k>)"
};

template <typename S>
struct TailResult {
  S cdf;        // P(S_n <= threshold)
  S tilted;     // E[ 1{S_n <= r} e^{-(r - S_n)} ]
  S threshold;  // r
  long n;
  std::uint64_t enumerated;  // composition vectors (or words) visited
};

// Boundary atoms are included: S_n <= r + slack(n). The slack keeps lattice
// atoms stable across summation orders.
template <typename S>
S tie_slack(long n) {
  return S(1e-12) * S(n);
}

namespace detail {

template <typename S>
void merge_sorted_classes(std::vector<ValueClass<S>>& cls) {
  std::sort(cls.begin(), cls.end(), [](const ValueClass<S>& a, const ValueClass<S>& b) { return a.value < b.value; });
  std::vector<ValueClass<S>> out;
  for (const auto& c : cls) {
    if (!out.empty() && std::abs(c.value - out.back().value) <= static_cast<S>(tol::value_merge))
      out.back().prob += c.prob;
    else
      out.push_back(c);
  }
  cls = std::move(out);
}

}  // namespace detail

// Decomposes the per-letter statistic under q_Q (given_input empty) or under
// W(.|x) (given_input = x). Requires singularity relative to q_in.
template <typename S>
Decomposition<S> decompose(const Channel<S>& ch, const Vector<S>& q_in, std::optional<Index> given_input = {}) {
  if (!is_singular_wrt(ch, q_in))
    fail(errc::not_singular, "decompose: channel is not singular relative to the input distribution");
  Vector<S> q = output_dist(ch, q_in);

  Decomposition<S> dec;
  dec.measure = given_input ? ("W(.|x=" + std::to_string(*given_input) + ")") : std::string("q");
  for (Index y = 0; y < ch.output_size(); ++y) {
    S mass = given_input ? ch.w(*given_input, y) : q(y);
    if (mass <= S(0)) continue;
    S a = alpha(ch, q_in, y);
    if (a <= S(0)) fail(errc::domination_failure, "decompose: output with mass has zero alpha");
    dec.classes.push_back({-std::log(a), mass});
  }
  detail::merge_sorted_classes(dec.classes);
  return dec;
}

namespace detail {

inline std::vector<double> log_factorial_table(long n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  t[0] = 0.0;
  for (long k = 1; k <= n; ++k) t[static_cast<std::size_t>(k)] = t[static_cast<std::size_t>(k - 1)] + std::log(static_cast<double>(k));
  return t;
}

// Enumerates count vectors (k_1..k_L), sum n, visiting each with the
// multinomial log-weight and statistic value accumulated incrementally.
// visit(log_prob, value). Throws when the budget is exhausted.
template <typename S, typename F>
std::uint64_t for_each_composition(const std::vector<ValueClass<S>>& cls, long n, std::uint64_t budget, F&& visit) {
  const std::size_t L = cls.size();
  auto lf = log_factorial_table(n);
  std::vector<S> logp(L);
  for (std::size_t j = 0; j < L; ++j) logp[j] = std::log(cls[j].prob);
  std::uint64_t count = 0;

  auto rec = [&](auto&& self, std::size_t j, long remaining, S logw, S value) -> void {
    if (j == L - 1) {
      if (++count > budget) fail(errc::enumeration_budget_exceeded, "composition enumeration budget exhausted");
      S lw = logw + S(remaining) * logp[j] - S(lf[static_cast<std::size_t>(remaining)]);
      S v = value + S(remaining) * cls[j].value;
      visit(lw, v);
      return;
    }
    for (long k = 0; k <= remaining; ++k)
      self(self, j + 1, remaining - k, logw + S(k) * logp[j] - S(lf[static_cast<std::size_t>(k)]),
           value + S(k) * cls[j].value);
  };

  S base = S(lf[static_cast<std::size_t>(n)]);
  rec(rec, 0, n, base, S(0));
  return count;
}

}  // namespace detail

// Exact tail and tilted sum of the n-fold i.i.d. sum of the decomposition.
template <typename S>
TailResult<S> exact_tail(const Decomposition<S>& dec, long n, S threshold, std::uint64_t budget = 10000000) {
  if (n < 1) fail(errc::bad_parameter, "exact_tail: n must be >= 1");
  if (dec.classes.empty()) fail(errc::bad_parameter, "exact_tail: empty decomposition");
  const S slack = tie_slack<S>(n);
  Kahan<S> cdf, tilted;
  std::uint64_t count = detail::for_each_composition(dec.classes, n, budget, [&](S logw, S value) {
    if (value <= threshold + slack) {
      S p = std::exp(logw);
      cdf.add(p);
      tilted.add(std::exp(logw - (threshold - value)));
    }
  });
  return {cdf.value(), tilted.value(), threshold, n, count};
}

template <typename S>
S exact_cdf(const Decomposition<S>& dec, long n, S threshold, std::uint64_t budget = 10000000) {
  return exact_tail(dec, n, threshold, budget).cdf;
}

template <typename S>
S tilted_sum(const Decomposition<S>& dec, long n, S threshold, std::uint64_t budget = 10000000) {
  return exact_tail(dec, n, threshold, budget).tilted;
}

// Law of the n-fold sum as a merged (value, prob) list.
template <typename S>
std::vector<ValueClass<S>> sum_distribution(const Decomposition<S>& dec, long n, std::uint64_t budget = 10000000) {
  if (n < 1) fail(errc::bad_parameter, "sum_distribution: n must be >= 1");
  std::vector<ValueClass<S>> out;
  detail::for_each_composition(dec.classes, n, budget, [&](S logw, S value) {
    out.push_back({value, std::exp(logw)});
  });
  detail::merge_sorted_classes(out);
  return out;
}

// Same law with log-domain probabilities; needed when atoms underflow a
// double but still matter through exponential weights.
template <typename S>
struct LogValueClass {
  S value;
  S log_prob;
};

template <typename S>
std::vector<LogValueClass<S>> sum_distribution_log(const Decomposition<S>& dec, long n,
                                                   std::uint64_t budget = 10000000) {
  if (n < 1) fail(errc::bad_parameter, "sum_distribution_log: n must be >= 1");
  std::vector<LogValueClass<S>> raw;
  detail::for_each_composition(dec.classes, n, budget, [&](S logw, S value) {
    raw.push_back({value, logw});
  });
  std::sort(raw.begin(), raw.end(),
            [](const LogValueClass<S>& a, const LogValueClass<S>& b) { return a.value < b.value; });
  std::vector<LogValueClass<S>> out;
  for (const auto& c : raw) {
    if (!out.empty() && std::abs(c.value - out.back().value) <= static_cast<S>(tol::value_merge)) {
      S hi = std::max(out.back().log_prob, c.log_prob);
      S lo = std::min(out.back().log_prob, c.log_prob);
      out.back().log_prob = hi + std::log1p(std::exp(lo - hi));
    } else {
      out.push_back(c);
    }
  }
  return out;
}

template <typename S>
std::vector<ValueClass<S>> convolve(const std::vector<ValueClass<S>>& a, const std::vector<ValueClass<S>>& b,
                                    std::uint64_t budget = 10000000) {
  if (a.size() * b.size() > budget) fail(errc::enumeration_budget_exceeded, "convolution budget exhausted");
  std::vector<ValueClass<S>> out;
  out.reserve(a.size() * b.size());
  for (const auto& ca : a)
    for (const auto& cb : b) out.push_back({ca.value + cb.value, ca.prob * cb.prob});
  detail::merge_sorted_classes(out);
  return out;
}

// Law of the statistic sum conditional on an input word of the given
// composition (counts per input letter): the per-letter laws differ by
// letter, so the enumeration is the product over per-input-letter groups.
template <typename S>
std::vector<ValueClass<S>> word_sum_distribution(const Channel<S>& ch, const Vector<S>& q_in,
                                                 const std::vector<long>& counts,
                                                 std::uint64_t budget = 10000000) {
  if (static_cast<Index>(counts.size()) != ch.input_size())
    fail(errc::bad_parameter, "composition has wrong dimension");
  std::vector<ValueClass<S>> acc;
  bool first = true;
  for (Index x = 0; x < ch.input_size(); ++x) {
    long nx = counts[static_cast<std::size_t>(x)];
    if (nx < 0) fail(errc::bad_parameter, "negative composition count");
    if (nx == 0) continue;
    auto dec = decompose(ch, q_in, x);
    auto part = sum_distribution(dec, nx, budget);
    acc = first ? std::move(part) : convolve(acc, part, budget);
    first = false;
  }
  if (first) fail(errc::bad_parameter, "empty composition");
  return acc;
}

template <typename S>
TailResult<S> tail_from_sum(const std::vector<ValueClass<S>>& sum, long n, S threshold) {
  const S slack = tie_slack<S>(n);
  Kahan<S> cdf, tilted;
  for (const auto& c : sum) {
    if (c.value <= threshold + slack) {
      cdf.add(c.prob);
      tilted.add(c.prob * std::exp(-(threshold - c.value)));
    }
  }
  return {cdf.value(), tilted.value(), threshold, n, static_cast<std::uint64_t>(sum.size())};
}

// ---- brute-force oracle ----

// Full |Y|^n enumeration of output words; ground truth for the exact engine.
// The measure is W(.|x_word) when a word is given, q_Q otherwise.
template <typename S>
TailResult<S> brute_force_tail(const Channel<S>& ch, const Vector<S>& q_in, long n, S threshold,
                               const std::vector<Index>* x_word = nullptr, std::uint64_t word_limit = 10000000) {
  if (n < 1) fail(errc::bad_parameter, "brute_force_tail: n must be >= 1");
  if (x_word && static_cast<long>(x_word->size()) != n) fail(errc::bad_parameter, "x_word length mismatch");
  const Index ysz = ch.output_size();
  double total = std::pow(static_cast<double>(ysz), static_cast<double>(n));
  if (total > static_cast<double>(word_limit)) fail(errc::too_large, "brute force would enumerate too many words");

  Vector<S> q = output_dist(ch, q_in);
  std::vector<S> value(static_cast<std::size_t>(ysz));
  for (Index y = 0; y < ysz; ++y) {
    S a = alpha(ch, q_in, y);
    value[static_cast<std::size_t>(y)] = a > S(0) ? -std::log(a) : std::numeric_limits<S>::infinity();
  }

  const S slack = tie_slack<S>(n);
  Kahan<S> cdf, tilted;
  std::vector<Index> word(static_cast<std::size_t>(n), 0);
  std::uint64_t visited = 0;
  while (true) {
    ++visited;
    S prob = S(1);
    S stat = S(0);
    for (long i = 0; i < n; ++i) {
      Index y = word[static_cast<std::size_t>(i)];
      S m = x_word ? ch.w((*x_word)[static_cast<std::size_t>(i)], y) : q(y);
      prob *= m;
      stat += value[static_cast<std::size_t>(y)];
    }
    if (prob > S(0) && stat <= threshold + slack) {
      cdf.add(prob);
      tilted.add(prob * std::exp(-(threshold - stat)));
    }
    long i = n - 1;
    while (i >= 0 && ++word[static_cast<std::size_t>(i)] == ysz) {
      word[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return {cdf.value(), tilted.value(), threshold, n, visited};
}

}  // namespace fbc
