#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fbc/bounds.hpp"
#include "fbc/channel.hpp"
#include "fbc/core.hpp"

namespace fbc {

struct Codebook {
  long n = 0;
  std::vector<std::vector<Index>> words;
  std::optional<std::vector<long>> composition;  // common type, present iff constant composition
};

template <typename S>
Codebook make_codebook(const Channel<S>& ch, std::vector<std::vector<Index>> words) {
  if (words.empty()) fail(errc::bad_parameter, "codebook must contain at least one codeword");
  Codebook cb;
  cb.n = static_cast<long>(words[0].size());
  for (const auto& w : words) {
    if (static_cast<long>(w.size()) != cb.n) fail(errc::bad_parameter, "codeword lengths differ");
    for (Index x : w)
      if (x < 0 || x >= ch.input_size()) fail(errc::bad_parameter, "codeword symbol out of range");
  }
  auto type_of = [&](const std::vector<Index>& w) {
    std::vector<long> t(static_cast<std::size_t>(ch.input_size()), 0);
    for (Index x : w) ++t[static_cast<std::size_t>(x)];
    return t;
  };
  auto t0 = type_of(words[0]);
  bool constant = true;
  for (const auto& w : words)
    if (type_of(w) != t0) {
      constant = false;
      break;
    }
  cb.words = std::move(words);
  if (constant) cb.composition = t0;
  return cb;
}

// Exact average error probability under maximum-likelihood decoding, ties
// broken toward the lowest message index. Full summation over output words.
template <typename S>
S ml_error_exact(const Channel<S>& ch, const Codebook& cb, std::uint64_t word_limit = 10000000) {
  const Index ysz = ch.output_size();
  const long n = cb.n;
  double total = std::pow(static_cast<double>(ysz), static_cast<double>(n));
  if (total > static_cast<double>(word_limit)) fail(errc::too_large, "output space too large for exact decoding");
  const std::size_t m_count = cb.words.size();

  Matrix<S> logw(ch.input_size(), ysz);
  for (Index x = 0; x < ch.input_size(); ++x)
    for (Index y = 0; y < ysz; ++y)
      logw(x, y) = ch.w(x, y) > S(0) ? std::log(ch.w(x, y)) : -std::numeric_limits<S>::infinity();

  Kahan<S> correct;
  std::vector<Index> word(static_cast<std::size_t>(n), 0);
  while (true) {
    S best = -std::numeric_limits<S>::infinity();
    std::size_t decoded = 0;
    for (std::size_t m = 0; m < m_count; ++m) {
      S lp{0};
      for (long i = 0; i < n; ++i) lp += logw(cb.words[m][static_cast<std::size_t>(i)], word[static_cast<std::size_t>(i)]);
      if (lp == -std::numeric_limits<S>::infinity()) continue;
      // ties within relative 1e-12 keep the earlier message
      if (best == -std::numeric_limits<S>::infinity() || lp > best + S(1e-12) * std::abs(best)) {
        best = lp;
        decoded = m;
      }
    }
    if (best > -std::numeric_limits<S>::infinity()) {
      S lp{0};
      for (long i = 0; i < n; ++i)
        lp += logw(cb.words[decoded][static_cast<std::size_t>(i)], word[static_cast<std::size_t>(i)]);
      correct.add(std::exp(lp) / S(m_count));
    }
    long i = n - 1;
    while (i >= 0 && ++word[static_cast<std::size_t>(i)] == ysz) {
      word[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return std::min(std::max(S(1) - correct.value(), S(0)), S(1));
}

template <typename S>
struct AuditResult {
  S ml_error;
  S lower_bound;
  S rate;
  bool pass;  // ml_error >= lower_bound
  LowerBoundReport<S> detail;
};

// Checks the singular-channel lower bound against the exact ML error of a
// constant-composition codebook. rate defaults to ln M / n.
template <typename S>
AuditResult<S> audit_lower_bound(const Channel<S>& ch, const Codebook& cb, std::optional<S> rate = {},
                                 std::optional<Vector<S>> q_in = {}, std::uint64_t budget = 10000000) {
  if (!cb.composition) fail(errc::hypothesis_failure, "codebook is not constant composition");
  if (!is_singular(ch)) fail(errc::hypothesis_failure, "channel is not singular");
  Vector<S> q = q_in ? *q_in : [&] {
    Vector<S> p(ch.input_size());
    for (Index x = 0; x < ch.input_size(); ++x)
      p(x) = S((*cb.composition)[static_cast<std::size_t>(x)]) / S(cb.n);
    return p;
  }();
  S r = rate ? *rate : std::log(S(cb.words.size())) / S(cb.n);

  AuditResult<S> res;
  res.detail = singular_cc_lower_bound(ch, q, *cb.composition, r, budget);
  res.lower_bound = res.detail.value;
  res.ml_error = ml_error_exact(ch, cb);
  res.rate = r;
  res.pass = res.ml_error >= res.lower_bound - S(1e-12);
  return res;
}

// Deterministic counter-based sampler: sample i derives its stream from
// (seed, i) alone, so results do not depend on any worker layout.
template <typename S>
std::pair<S, S> mc_estimate(const Channel<S>& ch, const Vector<S>& q_in, const std::vector<Index>& x_word,
                            S threshold, std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1000) fail(errc::bad_parameter, "mc_estimate: need at least 1e3 samples");
  const long n = static_cast<long>(x_word.size());
  check_input_dist(ch, q_in);

  std::vector<S> value(static_cast<std::size_t>(ch.output_size()));
  for (Index y = 0; y < ch.output_size(); ++y) {
    S a = alpha(ch, q_in, y);
    value[static_cast<std::size_t>(y)] = a > S(0) ? -std::log(a) : std::numeric_limits<S>::infinity();
  }
  // per-row cumulative laws
  Matrix<S> cum(ch.input_size(), ch.output_size());
  for (Index x = 0; x < ch.input_size(); ++x) {
    S c{0};
    for (Index y = 0; y < ch.output_size(); ++y) {
      c += ch.w(x, y);
      cum(x, y) = c;
    }
  }

  const S slack = tie_slack<S>(n);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    std::uint64_t state = splitmix64(seed ^ (i * 0x9e3779b97f4a7c15ull));
    S stat{0};
    for (long j = 0; j < n; ++j) {
      state = splitmix64(state);
      S u = S(state >> 11) * S(0x1.0p-53);
      Index x = x_word[static_cast<std::size_t>(j)];
      Index y = 0;
      while (y + 1 < ch.output_size() && u >= cum(x, y)) ++y;
      stat += value[static_cast<std::size_t>(y)];
    }
    if (stat <= threshold + slack) ++hits;
  }
  S est = S(hits) / S(samples);
  S half = S(1.959963984540054) * std::sqrt(est * (S(1) - est) / S(samples));
  return {est, half};
}

}  // namespace fbc
