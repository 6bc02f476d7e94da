#include <doctest.h>

#include <cmath>
#include <random>

#include "fbc/verify.hpp"

using namespace fbc;

namespace {

// Random constant-composition codebook: a base word of the given composition
// plus random permutations of it.
Codebook random_cc_codebook(const Channel<double>& ch, std::mt19937_64& rng, long n, int m) {
  std::vector<Index> base(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = static_cast<Index>(rng() % static_cast<std::uint64_t>(ch.input_size()));
  std::vector<std::vector<Index>> words;
  for (int k = 0; k < m; ++k) {
    auto w = base;
    std::shuffle(w.begin(), w.end(), rng);
    words.push_back(std::move(w));
  }
  return make_codebook(ch, std::move(words));
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("ml decoding oracle basics") {
    auto e = bec(0.5);
    CHECK(ml_error_exact(e, make_codebook(e, {{0, 1, 0}})) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ml_error_exact(e, make_codebook(e, {{0, 1}, {0, 1}})) == doctest::Approx(0.5).epsilon(1e-14));
    // regression value pinned from this oracle's own exhaustive run
    CHECK(ml_error_exact(e, make_codebook(e, {{0, 0, 0}, {1, 1, 1}})) == doctest::Approx(1.0 / 16).epsilon(1e-12));
  }

  TEST_CASE("ml oracle guards") {
    auto e = bec(0.5);
    std::vector<Index> longword(16, 0);
    CHECK_THROWS_AS(ml_error_exact(e, make_codebook(e, {longword})), Error);
    CHECK_THROWS_AS(make_codebook(e, {}), Error);
    CHECK_THROWS_AS(make_codebook(e, {{0, 1}, {0, 1, 1}}), Error);
  }

  TEST_CASE("ml error is invariant under output relabeling") {
    auto a = asym_example();
    auto cb = make_codebook(a, {{0, 1, 2, 0}, {1, 2, 0, 0}, {2, 0, 1, 0}});
    double base = ml_error_exact(a, cb);
    // relabel outputs by a permutation
    std::vector<Index> perm{3, 0, 2, 1};
    Matrix<double> m(a.input_size(), a.output_size());
    for (Index x = 0; x < a.input_size(); ++x)
      for (Index y = 0; y < a.output_size(); ++y) m(x, perm[static_cast<std::size_t>(y)]) = a.w(x, y);
    CHECK(ml_error_exact(validate(m), cb) == doctest::Approx(base).epsilon(1e-13));
  }

  TEST_CASE("reordering codewords changes nothing without ties") {
    auto e = bec(0.3);
    auto cb1 = make_codebook(e, {{0, 0, 1}, {1, 1, 0}});
    auto cb2 = make_codebook(e, {{1, 1, 0}, {0, 0, 1}});
    CHECK(ml_error_exact(e, cb1) == doctest::Approx(ml_error_exact(e, cb2)).epsilon(1e-13));
  }

  TEST_CASE("composition detection") {
    auto e = bec(0.5);
    auto cc = make_codebook(e, {{0, 1, 0}, {1, 0, 0}});
    REQUIRE(cc.composition.has_value());
    CHECK(*cc.composition == std::vector<long>{2, 1});
    auto mixed = make_codebook(e, {{0, 0, 0}, {1, 1, 1}});
    CHECK_FALSE(mixed.composition.has_value());
  }

  TEST_CASE("audit rejects non-constant-composition codebooks") {
    auto e = bec(0.5);
    auto mixed = make_codebook(e, {{0, 0, 0}, {1, 1, 1}});
    CHECK_THROWS_AS(audit_lower_bound(e, mixed), Error);
    auto b = bsc(0.1);
    auto cc = make_codebook(b, {{0, 1}, {1, 0}});
    CHECK_THROWS_AS(audit_lower_bound(b, cc), Error);  // nonsingular channel
  }

  TEST_CASE("size-one codebook audit") {
    auto e = bec(0.5);
    auto cb = make_codebook(e, {{0, 1, 0, 1}});
    auto res = audit_lower_bound(e, cb);
    CHECK(res.pass);
    CHECK(res.ml_error == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(res.lower_bound <= 1e-13);
  }

  TEST_CASE("randomized audits never violate the lower bound") {
    std::mt19937_64 rng(2024);
    for (const auto& ch : {bec(0.5), asym_example()}) {
      for (int trial = 0; trial < 40; ++trial) {
        long n = 2 + static_cast<long>(rng() % 5);
        int m = 1 + static_cast<int>(rng() % 6);
        auto cb = random_cc_codebook(ch, rng, n, m);
        auto res = audit_lower_bound(ch, cb);
        CHECK(res.pass);
      }
    }
  }

  TEST_CASE("monte-carlo estimate is consistent with the exact tail") {
    auto e = bec(0.5);
    auto u = uniform_input(e);
    long n = 200;
    auto dq = decompose(e, u, 0);
    double C = 0.5 * std::log(2.0);
    double threshold = n * C;
    double exact = exact_cdf(dq, n, threshold);
    std::vector<Index> word(static_cast<std::size_t>(n), 0);
    auto [est, half] = mc_estimate(e, u, word, threshold, 100000, 42);
    CHECK(std::abs(est - exact) <= 3 * half);
    CHECK(half < 0.01);
  }

  TEST_CASE("monte-carlo determinism and edge cases") {
    auto e = bec(0.5);
    auto u = uniform_input(e);
    std::vector<Index> word(50, 0);
    auto a = mc_estimate(e, u, word, 10.0, 2000, 7);
    auto b = mc_estimate(e, u, word, 10.0, 2000, 7);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    auto inf = mc_estimate(e, u, word, std::numeric_limits<double>::infinity(), 2000, 7);
    CHECK(inf.first == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(inf.second == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(mc_estimate(e, u, word, 1.0, 10, 7), Error);
  }
}
