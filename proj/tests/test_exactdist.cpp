#include <doctest.h>

#include <cmath>

#include "fbc/exactdist.hpp"
#include "fbc/measures.hpp"

using namespace fbc;

namespace {
const double kLn2 = std::log(2.0);
}

TEST_SUITE("exactdist") {
  TEST_CASE("decomposition of textbook channels") {
    auto e = bec(0.5);
    auto u = uniform_input(e);
    auto dq = decompose<double>(e, u, {});
    REQUIRE(dq.classes.size() == 2);
    CHECK(dq.classes[0].value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(dq.classes[0].prob == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(dq.classes[1].value == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(dq.classes[1].prob == doctest::Approx(0.5).epsilon(1e-15));

    auto drow = decompose(e, u, 0);
    REQUIRE(drow.classes.size() == 2);
    CHECK(drow.classes[0].prob == doctest::Approx(dq.classes[0].prob).epsilon(1e-15));
    CHECK(drow.classes[1].prob == doctest::Approx(dq.classes[1].prob).epsilon(1e-15));

    auto id2 = identity_channel<double>(2);
    auto di = decompose<double>(id2, uniform_input(id2), {});
    REQUIRE(di.classes.size() == 1);
    CHECK(di.classes[0].value == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(di.classes[0].prob == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(decompose<double>(bsc(0.1), uniform_input(bsc(0.1)), {}), Error);
  }

  TEST_CASE("decomposition reproduces capacity, dispersion and third moment") {
    for (const auto& ch : {bec(0.3), bec(0.5), tec(0.5)}) {
      auto u = uniform_input(ch);
      auto dq = decompose<double>(ch, u, {});
      double mean = 0, var = 0, m3 = 0;
      for (const auto& c : dq.classes) mean += c.prob * c.value;
      for (const auto& c : dq.classes) {
        var += c.prob * (c.value - mean) * (c.value - mean);
        m3 += c.prob * std::pow(std::abs(c.value - mean), 3);
      }
      CHECK(mean == doctest::Approx(mutual_information(ch, u)).epsilon(1e-10));
      CHECK(var == doctest::Approx(dispersion(ch, u)).epsilon(1e-10));
      CHECK(m3 == doctest::Approx(third_moments(ch, u).m3_x(0)).epsilon(1e-10));
    }
  }

  TEST_CASE("binomial tail example") {
    auto e = bec(0.5);
    auto dq = decompose<double>(e, uniform_input(e), {});
    CHECK(exact_cdf(dq, 4, 2 * kLn2) == doctest::Approx(11.0 / 16).epsilon(1e-14));
  }

  TEST_CASE("single-class distributions") {
    auto id2 = identity_channel<double>(2);
    auto di = decompose<double>(id2, uniform_input(id2), {});
    CHECK(exact_cdf(di, 5, 5 * kLn2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(exact_cdf(di, 5, 5 * kLn2 - 0.01) == doctest::Approx(0.0).epsilon(1e-14));
  }

  TEST_CASE("tilted sum examples") {
    auto e = bec(0.5);
    auto dq = decompose<double>(e, uniform_input(e), {});
    CHECK(tilted_sum(dq, 1, 0.5 * kLn2) == doctest::Approx(0.5 * std::exp(-0.5 * kLn2)).epsilon(1e-14));
    // below the support minimum the event is empty
    CHECK(tilted_sum(dq, 3, -1.0) == doctest::Approx(0.0).epsilon(1e-15));
    // at r = nC the i.i.d. closed-form bound applies
    double V = 0.25 * kLn2 * kLn2, m3 = std::pow(0.5 * kLn2, 3);
    double bound = 1.0 / std::sqrt(2 * M_PI * 100 * V) + m3 / (std::sqrt(100.0) * std::pow(V, 1.5));
    double t = tilted_sum(dq, 100, 100 * 0.5 * kLn2);
    CHECK(t <= bound);
    CHECK(bound == doctest::Approx(0.21511040990721624).epsilon(1e-12));
  }

  TEST_CASE("tilted sum never exceeds the cdf") {
    auto e = bec(0.3);
    auto dq = decompose<double>(e, uniform_input(e), {});
    for (long n : {1L, 5L, 20L})
      for (double f : {0.1, 0.5, 0.9, 1.3}) {
        auto t = exact_tail(dq, n, f * n * kLn2);
        CHECK(t.tilted <= t.cdf + 1e-15);
      }
  }

  TEST_CASE("cdf is nondecreasing in the threshold and includes boundary atoms") {
    auto e = bec(0.5);
    auto dq = decompose<double>(e, uniform_input(e), {});
    long n = 6;
    double prev = -1;
    for (double r = 0; r <= n * kLn2 + 0.1; r += 0.05) {
      double c = exact_cdf(dq, n, r);
      CHECK(c >= prev - 1e-15);
      prev = c;
    }
    // atoms sit at k ln2; exact threshold includes, threshold just below excludes
    double at = exact_cdf(dq, n, 3 * kLn2);
    double below = exact_cdf(dq, n, 3 * kLn2 - 3 * tie_slack<double>(n));
    CHECK(at > below);
    CHECK(at == doctest::Approx(42.0 / 64).epsilon(1e-13));     // P(B6 <= 3)
    CHECK(below == doctest::Approx(22.0 / 64).epsilon(1e-13));  // P(B6 <= 2)
  }

  TEST_CASE("exact engine agrees with brute force on i.i.d. sums") {
    for (const auto& ch : {bec(0.5), identity_channel<double>(2), asym_example()}) {
      auto u = uniform_input(ch);
      auto dq = decompose<double>(ch, u, {});
      for (long n = 1; n <= 6; ++n) {
        for (double f : {0.25, 0.5, 0.75, 1.0}) {
          double r = f * n * kLn2;
          auto exact = exact_tail(dq, n, r);
          auto brute = brute_force_tail(ch, u, n, r);
          CHECK(std::abs(exact.cdf - brute.cdf) <= 1e-12);
          CHECK(std::abs(exact.tilted - brute.tilted) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("constant-composition path agrees with brute force") {
    auto a = asym_example();
    auto u = uniform_input(a);
    for (long n = 2; n <= 5; ++n) {
      std::vector<long> comp(3, 0);
      std::vector<Index> word;
      for (long i = 0; i < n; ++i) {
        auto x = static_cast<Index>(i % 3);
        comp[static_cast<std::size_t>(x)]++;
        word.push_back(x);
      }
      for (double f : {0.3, 0.6, 1.0}) {
        double r = f * n * kLn2;
        auto sum = word_sum_distribution(a, u, comp);
        auto exact = tail_from_sum(sum, n, r);
        auto brute = brute_force_tail(a, u, n, r, &word);
        CHECK(std::abs(exact.cdf - brute.cdf) <= 1e-12);
        CHECK(std::abs(exact.tilted - brute.tilted) <= 1e-12);
      }
    }
  }

  TEST_CASE("word order within a composition does not matter") {
    auto a = asym_example();
    auto u = uniform_input(a);
    std::vector<Index> w1{0, 1, 2, 0}, w2{0, 0, 1, 2};
    double r = 4 * 0.4;
    auto b1 = brute_force_tail(a, u, 4, r, &w1);
    auto b2 = brute_force_tail(a, u, 4, r, &w2);
    CHECK(b1.cdf == doctest::Approx(b2.cdf).epsilon(1e-14));
    CHECK(b1.tilted == doctest::Approx(b2.tilted).epsilon(1e-14));
  }

  TEST_CASE("budgets and preconditions") {
    auto e = bec(0.5);
    auto dq = decompose<double>(e, uniform_input(e), {});
    CHECK_THROWS_AS(exact_tail(dq, 100, 1.0, 50), Error);  // budget
    CHECK_THROWS_AS(exact_tail(dq, 0, 1.0), Error);        // n >= 1
    CHECK_THROWS_AS(brute_force_tail(e, uniform_input(e), 0, 1.0), Error);
    CHECK_THROWS_AS(brute_force_tail(e, uniform_input(e), 20, 1.0), Error);  // |Y|^n too large
  }

  TEST_CASE("enumeration size is reported") {
    auto e = bec(0.5);
    auto dq = decompose<double>(e, uniform_input(e), {});
    auto t = exact_tail(dq, 10, 3.0);
    CHECK(t.enumerated == 11);  // compositions of 10 into 2 classes
  }
}
