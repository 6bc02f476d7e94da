#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fbc {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. Categories drive the CLI exit codes:
//   validation -> 2, inapplicable -> 3, budget -> 4.
enum class errc {
  non_stochastic,
  negative_entry,
  empty_alphabet,
  bad_parameter,
  search_budget_exceeded,
  no_convergence,
  multi_caid_unsupported,
  not_singular,
  not_symmetric,
  not_applicable,
  domination_failure,
  enumeration_budget_exceeded,
  too_large,
  tau_out_of_range,
  hypothesis_failure,
  net_too_coarse,
  dimension_too_large,
};

enum class err_category { validation, inapplicable, budget };

inline err_category category(errc c) {
  switch (c) {
    case errc::non_stochastic:
    case errc::negative_entry:
    case errc::empty_alphabet:
    case errc::bad_parameter:
    case errc::hypothesis_failure:
      return err_category::validation;
    case errc::multi_caid_unsupported:
    case errc::not_singular:
    case errc::not_symmetric:
    case errc::not_applicable:
    case errc::domination_failure:
    case errc::tau_out_of_range:
      return err_category::inapplicable;
    default:
      return err_category::budget;
  }
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

// Tolerances shared across the library.
namespace tol {
inline constexpr double row_sum = 1e-9;        // channel rows must sum to 1 within this
inline constexpr double dist_sum = 1e-12;      // probability vectors
inline constexpr double prob_eq_rel = 1e-12;   // equality of transition probabilities
inline constexpr double value_merge = 1e-12;   // merging statistic values
}  // namespace tol

// Relative equality for (non-negative) probabilities.
template <typename S>
bool prob_equal(S a, S b) {
  S m = a > b ? a : b;
  S d = a > b ? a - b : b - a;
  return d <= static_cast<S>(tol::prob_eq_rel) * m;
}

// Neumaier compensated accumulator; keeps tail sums exact enough for the
// 1e-12 agreement contracts against the brute-force oracles.
template <typename S>
struct Kahan {
  S sum{0};
  S comp{0};
  void add(S x) {
    S t = sum + x;
    S as = sum < 0 ? -sum : sum;
    S ax = x < 0 ? -x : x;
    if (as >= ax)
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  S value() const { return sum + comp; }
};

// FNV-1a 64-bit, used to fingerprint channels in reports.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace fbc
