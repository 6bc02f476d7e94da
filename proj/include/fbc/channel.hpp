#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbc/core.hpp"

namespace fbc {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// A discrete memoryless channel: row-stochastic matrix w(x, y) = W(y|x).
// All-zero output columns are stripped at validation; kept_columns maps the
// surviving column index back to the original output index.
template <typename S = double>
struct Channel {
  Matrix<S> w;
  std::vector<Index> kept_columns;

  Index input_size() const { return w.rows(); }
  Index output_size() const { return w.cols(); }
};

template <typename S>
Channel<S> validate(const Matrix<S>& raw) {
  if (raw.rows() == 0 || raw.cols() == 0) fail(errc::empty_alphabet, "channel matrix is empty");
  for (Index x = 0; x < raw.rows(); ++x)
    for (Index y = 0; y < raw.cols(); ++y)
      if (raw(x, y) < S(0)) fail(errc::negative_entry, "negative transition probability");
  for (Index x = 0; x < raw.rows(); ++x) {
    S rs = raw.row(x).sum();
    if (std::abs(rs - S(1)) > static_cast<S>(tol::row_sum))
      fail(errc::non_stochastic, "row " + std::to_string(x) + " sums to " + std::to_string(static_cast<double>(rs)));
  }
  Channel<S> ch;
  std::vector<Index> kept;
  for (Index y = 0; y < raw.cols(); ++y)
    if (raw.col(y).maxCoeff() > S(0)) kept.push_back(y);
  if (kept.empty()) fail(errc::empty_alphabet, "all output columns are zero");
  ch.w.resize(raw.rows(), static_cast<Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) ch.w.col(static_cast<Index>(j)) = raw.col(kept[j]);
  ch.kept_columns = std::move(kept);
  return ch;
}

template <typename S>
void check_input_dist(const Channel<S>& ch, const Vector<S>& p) {
  if (p.size() != ch.input_size()) fail(errc::bad_parameter, "input distribution has wrong dimension");
  if (p.minCoeff() < S(0)) fail(errc::negative_entry, "input distribution has a negative entry");
  if (std::abs(p.sum() - S(1)) > static_cast<S>(tol::dist_sum))
    fail(errc::bad_parameter, "input distribution does not sum to 1");
}

template <typename S>
Vector<S> uniform_input(const Channel<S>& ch) {
  return Vector<S>::Constant(ch.input_size(), S(1) / S(ch.input_size()));
}

// q_Q(y) = sum_x Q(x) W(y|x).
template <typename S>
Vector<S> output_dist(const Channel<S>& ch, const Vector<S>& q_in) {
  check_input_dist(ch, q_in);
  return ch.w.transpose() * q_in;
}

// alpha_y(Q) = sum of Q over inputs whose row reaches output y.
template <typename S>
S alpha(const Channel<S>& ch, const Vector<S>& q_in, Index y) {
  check_input_dist(ch, q_in);
  S a{0};
  for (Index x = 0; x < ch.input_size(); ++x)
    if (ch.w(x, y) > S(0)) a += q_in(x);
  return a;
}

template <typename S>
bool is_singular(const Channel<S>& ch) {
  for (Index y = 0; y < ch.output_size(); ++y) {
    S ref = S(-1);
    for (Index x = 0; x < ch.input_size(); ++x) {
      S v = ch.w(x, y);
      if (v <= S(0)) continue;
      if (ref < S(0))
        ref = v;
      else if (!prob_equal(ref, v))
        return false;
    }
  }
  return true;
}

template <typename S>
bool is_singular_wrt(const Channel<S>& ch, const Vector<S>& p) {
  check_input_dist(ch, p);
  for (Index y = 0; y < ch.output_size(); ++y) {
    S ref = S(-1);
    for (Index x = 0; x < ch.input_size(); ++x) {
      if (p(x) <= S(0)) continue;
      S v = ch.w(x, y);
      if (v <= S(0)) continue;
      if (ref < S(0))
        ref = v;
      else if (!prob_equal(ref, v))
        return false;
    }
  }
  return true;
}

// Column constants delta_y of a singular channel (first positive entry per column).
template <typename S>
std::vector<S> column_constants(const Channel<S>& ch) {
  std::vector<S> d(static_cast<std::size_t>(ch.output_size()), S(0));
  for (Index y = 0; y < ch.output_size(); ++y)
    for (Index x = 0; x < ch.input_size(); ++x)
      if (ch.w(x, y) > S(0)) {
        d[static_cast<std::size_t>(y)] = ch.w(x, y);
        break;
      }
  return d;
}

template <typename S>
struct SymmetryResult {
  bool symmetric = false;
  std::vector<std::vector<Index>> partition;  // witnessing output partition when symmetric
};

namespace detail {

template <typename S>
bool multisets_equal(std::vector<S>& a, std::vector<S>& b) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!prob_equal(a[i], b[i]) && std::abs(a[i] - b[i]) > static_cast<S>(tol::prob_eq_rel)) return false;
  return true;
}

// A candidate part is valid iff every row restricted to it has the same
// multiset of entries as row 0 restricted to it (the column condition holds
// automatically inside a coarse group).
template <typename S>
bool part_valid(const Channel<S>& ch, const std::vector<Index>& cols) {
  std::vector<S> ref, cur;
  for (Index y : cols) ref.push_back(ch.w(0, y));
  std::sort(ref.begin(), ref.end());
  for (Index x = 1; x < ch.input_size(); ++x) {
    cur.clear();
    for (Index y : cols) cur.push_back(ch.w(x, y));
    std::sort(cur.begin(), cur.end());
    bool same = true;
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (!prob_equal(ref[i], cur[i]) && std::abs(ref[i] - cur[i]) > static_cast<S>(tol::prob_eq_rel)) {
        same = false;
        break;
      }
    if (!same) return false;
  }
  return true;
}

// Exact-cover search over one coarse group: partition `cols` into valid
// parts. Subset enumeration order is deterministic (increasing bitmask), so
// the first witness found is stable run to run.
template <typename S>
bool cover_group(const Channel<S>& ch, const std::vector<Index>& cols, std::uint64_t& budget,
                 std::vector<std::vector<Index>>& out) {
  const std::size_t g = cols.size();
  if (g == 0) return true;
  if (g > 63) fail(errc::search_budget_exceeded, "symmetry search: coarse group too large");
  std::uint64_t full = (1ull << g) - 1;

  std::vector<std::vector<Index>> chosen;
  std::vector<Index> scratch;

  // Recursive lambda over the unassigned mask.
  auto rec = [&](auto&& self, std::uint64_t unassigned) -> bool {
    if (unassigned == 0) return true;
    // lowest unassigned column anchors every candidate subset
    std::uint64_t low = unassigned & (~unassigned + 1);
    std::uint64_t rest = unassigned ^ low;
    // enumerate subsets of `rest`, adding `low`
    std::uint64_t sub = 0;
    while (true) {
      std::uint64_t mask = sub | low;
      if (budget == 0) fail(errc::search_budget_exceeded, "symmetry search: node budget exhausted");
      --budget;
      scratch.clear();
      for (std::size_t i = 0; i < g; ++i)
        if (mask & (1ull << i)) scratch.push_back(cols[i]);
      if (part_valid(ch, scratch)) {
        chosen.push_back(scratch);
        if (self(self, unassigned & ~mask)) return true;
        chosen.pop_back();
      }
      if (sub == rest) break;
      sub = (sub - rest) & rest;  // next subset of rest
    }
    return false;
  };

  if (!rec(rec, full)) return false;
  for (auto& p : chosen) out.push_back(std::move(p));
  return true;
}

}  // namespace detail

// Decides Gallager symmetry by exhaustive search for a witnessing output
// partition. Columns are first grouped by their sorted-entry multiset (a
// necessary condition for sharing a part); each group is then covered by
// valid parts independently.
template <typename S>
SymmetryResult<S> detect_symmetry(const Channel<S>& ch, std::uint64_t node_budget = 1000000) {
  // coarse grouping by sorted column multiset
  std::vector<std::vector<Index>> groups;
  std::vector<S> a, b;
  for (Index y = 0; y < ch.output_size(); ++y) {
    bool placed = false;
    for (auto& gr : groups) {
      a.assign(ch.w.col(gr[0]).data(), ch.w.col(gr[0]).data() + ch.input_size());
      b.assign(ch.w.col(y).data(), ch.w.col(y).data() + ch.input_size());
      if (detail::multisets_equal(a, b)) {
        gr.push_back(y);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({y});
  }

  SymmetryResult<S> res;
  std::uint64_t budget = node_budget;
  for (const auto& gr : groups) {
    if (!detail::cover_group(ch, gr, budget, res.partition)) {
      res.symmetric = false;
      res.partition.clear();
      return res;
    }
  }
  std::sort(res.partition.begin(), res.partition.end(),
            [](const auto& p, const auto& q) { return p.front() < q.front(); });
  res.symmetric = true;
  return res;
}

// Per-part structure of a symmetric singular channel: the common column
// constant delta_l, alpha_l under the uniform input, and the number nu_l of
// positive entries a row has inside the part.
template <typename S>
struct SingularClass {
  S delta;
  S alpha;
  Index nu;
};

template <typename S>
struct Classification {
  bool symmetric = false;
  std::vector<std::vector<Index>> partition;
  bool singular = false;
  std::vector<S> deltas;                   // per kept column, iff singular
  std::vector<SingularClass<S>> per_class;  // iff symmetric && singular
};

template <typename S>
Classification<S> classify(const Channel<S>& ch, std::uint64_t node_budget = 1000000) {
  Classification<S> c;
  auto sym = detect_symmetry(ch, node_budget);
  c.symmetric = sym.symmetric;
  c.partition = std::move(sym.partition);
  c.singular = is_singular(ch);
  if (c.singular) c.deltas = column_constants(ch);
  if (c.singular && c.symmetric) {
    Vector<S> u = uniform_input(ch);
    for (const auto& part : c.partition) {
      SingularClass<S> sc;
      sc.delta = c.deltas[static_cast<std::size_t>(part.front())];
      sc.alpha = alpha(ch, u, part.front());
      sc.nu = 0;
      for (Index y : part)
        if (ch.w(0, y) > S(0)) ++sc.nu;
      c.per_class.push_back(sc);
    }
  }
  return c;
}

// ---- builtin channels ----

template <typename S = double>
Channel<S> bec(S delta) {
  if (!(delta >= S(0) && delta <= S(1))) fail(errc::bad_parameter, "bec: delta must be in [0,1]");
  Matrix<S> m(2, 3);
  m << S(1) - delta, S(0), delta, S(0), S(1) - delta, delta;
  return validate(m);
}

template <typename S = double>
Channel<S> bsc(S p) {
  if (!(p >= S(0) && p <= S(1))) fail(errc::bad_parameter, "bsc: p must be in [0,1]");
  Matrix<S> m(2, 2);
  m << S(1) - p, p, p, S(1) - p;
  return validate(m);
}

template <typename S = double>
Channel<S> identity_channel(Index k) {
  if (k < 1) fail(errc::bad_parameter, "identity: size must be >= 1");
  Matrix<S> m = Matrix<S>::Identity(k, k);
  return validate(m);
}

// The 3x4 singular channel with no symmetric output partition; entries are
// 2/3, 1/6 and 5/6.
template <typename S = double>
Channel<S> asym_example() {
  Matrix<S> m(3, 4);
  S t = S(2) / S(3), s = S(1) / S(6), f = S(5) / S(6);
  m << t, s, S(0), s,
      S(0), S(0), f, s,
      S(0), s, f, S(0);
  return validate(m);
}

// Ternary erasure channel: three inputs, outputs {0,1,2,e}.
template <typename S = double>
Channel<S> tec(S delta) {
  if (!(delta >= S(0) && delta <= S(1))) fail(errc::bad_parameter, "tec: delta must be in [0,1]");
  Matrix<S> m(3, 4);
  m.setZero();
  for (Index x = 0; x < 3; ++x) {
    m(x, x) = S(1) - delta;
    m(x, 3) = delta;
  }
  return validate(m);
}

// Builtin channel lookup for the CLI: "name" or "name:p1,p2".
template <typename S = double>
Channel<S> builtin(const std::string& name, const std::vector<S>& params) {
  auto want = [&](std::size_t k) {
    if (params.size() != k)
      fail(errc::bad_parameter, "builtin " + name + ": expected " + std::to_string(k) + " parameter(s)");
  };
  if (name == "bec") {
    want(1);
    return bec<S>(params[0]);
  }
  if (name == "bsc") {
    want(1);
    return bsc<S>(params[0]);
  }
  if (name == "identity") {
    want(1);
    S k = params[0];
    if (k != std::floor(k)) fail(errc::bad_parameter, "identity: size must be an integer");
    return identity_channel<S>(static_cast<Index>(k));
  }
  if (name == "tec") {
    want(1);
    return tec<S>(params[0]);
  }
  if (name == "asym_example") {
    want(0);
    return asym_example<S>();
  }
  fail(errc::bad_parameter, "unknown builtin channel: " + name);
}

}  // namespace fbc
