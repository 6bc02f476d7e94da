#include <doctest.h>

#include <cmath>
#include <random>

#include "fbc/measures.hpp"

using namespace fbc;

namespace {

const double kLn2 = std::log(2.0);

Channel<double> uniform_rows_channel() {
  Matrix<double> m(3, 4);
  m.setConstant(0.25);
  return validate(m);
}

Channel<double> random_channel(std::mt19937_64& rng, int max_in = 5, int max_out = 6) {
  std::uniform_int_distribution<int> di(2, max_in), dj(2, max_out);
  int in = di(rng), out = dj(rng);
  std::gamma_distribution<double> gd(1.0, 1.0);
  Matrix<double> m(in, out);
  for (int x = 0; x < in; ++x) {
    double s = 0;
    for (int y = 0; y < out; ++y) {
      m(x, y) = gd(rng) + 1e-3;
      s += m(x, y);
    }
    for (int y = 0; y < out; ++y) m(x, y) /= s;
  }
  return validate(m);
}

Vector<double> random_dist(std::mt19937_64& rng, Index k) {
  std::gamma_distribution<double> gd(1.0, 1.0);
  Vector<double> p(k);
  for (Index i = 0; i < k; ++i) p(i) = gd(rng) + 1e-3;
  p /= p.sum();
  return p;
}

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("mutual information closed forms") {
    auto id2 = identity_channel<double>(2);
    CHECK(mutual_information(id2, uniform_input(id2)) == doctest::Approx(kLn2).epsilon(1e-14));
    auto ur = uniform_rows_channel();
    CHECK(mutual_information(ur, uniform_input(ur)) == doctest::Approx(0.0).epsilon(1e-14));
    auto e = bec(0.5);
    CHECK(mutual_information(e, uniform_input(e)) == doctest::Approx(0.5 * kLn2).epsilon(1e-14));
  }

  TEST_CASE("capacity of textbook channels") {
    auto id2 = identity_channel<double>(2);
    auto r = capacity(id2);
    CHECK(r.capacity == doctest::Approx(kLn2).epsilon(1e-10));
    CHECK(r.caid(0) == doctest::Approx(0.5).epsilon(1e-8));

    auto e = bec(0.5);
    auto re = capacity(e);
    CHECK(re.capacity == doctest::Approx(0.5 * kLn2).epsilon(1e-10));
    CHECK(re.caid(0) == doctest::Approx(0.5).epsilon(1e-8));
  }

  TEST_CASE("capacity of the asymmetric example satisfies the optimality conditions") {
    auto a = asym_example();
    auto r = capacity(a);
    CHECK(r.capacity > 0.0);
    Vector<double> q = output_dist(a, r.caid);
    for (Index x = 0; x < a.input_size(); ++x)
      CHECK(row_divergence(a, q, x) <= r.capacity + 1e-8);
    CHECK(mutual_information(a, r.caid) == doctest::Approx(r.capacity).epsilon(1e-10));
  }

  TEST_CASE("caid uniqueness probe") {
    CHECK(probe_caid(bec(0.5)).unique);
    CHECK(probe_caid(asym_example()).unique);
    // duplicated row => CAID polytope is nontrivial
    Matrix<double> m(3, 2);
    m << 0.9, 0.1, 0.9, 0.1, 0.1, 0.9;
    CHECK_FALSE(probe_caid(validate(m)).unique);
    CHECK_THROWS_AS(eps_dispersion(validate(m), 0.1), Error);
  }

  TEST_CASE("dispersion closed forms") {
    auto id2 = identity_channel<double>(2);
    CHECK(dispersion(id2, uniform_input(id2)) == doctest::Approx(0.0).epsilon(1e-15));

    auto e = bec(0.5);
    CHECK(dispersion(e, uniform_input(e)) == doctest::Approx(0.25 * kLn2 * kLn2).epsilon(1e-14));

    double p = 0.11;
    auto b = bsc(p);
    double hand = p * (1 - p) * std::pow(std::log((1 - p) / p), 2);
    CHECK(dispersion(b, uniform_input(b)) == doctest::Approx(hand).epsilon(1e-12));
  }

  TEST_CASE("eps-dispersion branches coincide for unique caid") {
    auto e = bec(0.5);
    double lo = eps_dispersion(e, 0.1), hi = eps_dispersion(e, 0.9);
    CHECK(lo == doctest::Approx(0.25 * kLn2 * kLn2).epsilon(1e-9));
    CHECK(lo == doctest::Approx(hi).epsilon(1e-12));
    CHECK(eps_dispersion(identity_channel<double>(2), 0.3) == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("reverse dispersion vanishes exactly on singular channels") {
    for (double d : {0.1, 0.3, 0.5, 0.8}) {
      auto e = bec(d);
      CHECK(std::abs(reverse_dispersion(e, uniform_input(e))) < 1e-12);
    }
    auto id2 = identity_channel<double>(2);
    CHECK(std::abs(reverse_dispersion(id2, uniform_input(id2))) < 1e-15);
    auto b = bsc(0.1);
    CHECK(reverse_dispersion(b, uniform_input(b)) > 1e-3);
  }

  TEST_CASE("singularity equivalence via reverse dispersion on random channels") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
      auto ch = random_channel(rng);
      auto p = random_dist(rng, ch.input_size());
      bool vr_zero = reverse_dispersion(ch, p) < 1e-12;
      CHECK(vr_zero == is_singular_wrt(ch, p));
    }
  }

  TEST_CASE("U dominates V") {
    auto e = bec(0.5);
    CHECK(cond_info_variance(e, uniform_input(e)) == doctest::Approx(0.25 * kLn2 * kLn2).epsilon(1e-14));
    auto id2 = identity_channel<double>(2);
    CHECK(cond_info_variance(id2, uniform_input(id2)) == doctest::Approx(0.0).epsilon(1e-15));
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 100; ++trial) {
      auto ch = random_channel(rng);
      auto p = random_dist(rng, ch.input_size());
      CHECK(cond_info_variance(ch, p) >= dispersion(ch, p) - 1e-12);
    }
  }

  TEST_CASE("third moments") {
    auto e = bec(0.5);
    auto tm = third_moments(e, uniform_input(e));
    double expect = std::pow(0.5 * kLn2, 3);
    CHECK(tm.m3_x(0) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(tm.m3_x(1) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(tm.m3_avg == doctest::Approx(expect).epsilon(1e-13));

    double kap = std::pow(3 * (std::cbrt(2.0) + std::cbrt(3.0)) / std::exp(1.0) + kLn2, 3);
    CHECK(tm.kappa == doctest::Approx(kap).epsilon(1e-14));
    CHECK(tm.m3_tilde <= tm.kappa);

    auto id2 = identity_channel<double>(2);
    auto tmi = third_moments(id2, uniform_input(id2));
    CHECK(tmi.m3_avg == doctest::Approx(0.0).epsilon(1e-15));

    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
      auto ch = random_channel(rng);
      auto p = random_dist(rng, ch.input_size());
      CHECK(third_moments(ch, p).m3_tilde <= kappa_bound<double>(ch.input_size(), ch.output_size()) + 1e-12);
    }
  }

  TEST_CASE("moment generating function") {
    auto e = bec(0.5);
    auto u = uniform_input(e);
    CHECK(mgf(e, u, 0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mgf(e, u, 0, 1.0) == doctest::Approx(1.5).epsilon(1e-14));
    for (double lam : {-2.0, -1.0, 0.5, 3.0})
      CHECK(mgf(e, u, 0, lam) == doctest::Approx(mgf(e, u, 1, lam)).epsilon(1e-12));
  }

  TEST_CASE("mgf matches the per-class closed form on symmetric singular channels") {
    for (const auto& ch : {bec(0.3), bec(0.5), tec(0.5)}) {
      auto cls = classify(ch);
      REQUIRE(cls.symmetric);
      REQUIRE(cls.singular);
      auto u = uniform_input(ch);
      for (double lam : {-2.0, -1.0, 0.5, 3.0}) {
        double closed = 0;
        for (const auto& sc : cls.per_class) closed += double(sc.nu) * sc.delta * std::pow(sc.alpha, -lam);
        CHECK(mgf(ch, u, 0, lam) == doctest::Approx(closed).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("sphere-packing exponent") {
    auto b = bsc(0.11);
    auto u = uniform_input(b);
    double cap = mutual_information(b, u);
    CHECK(sp_exponent_q(b, cap, u) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sp_exponent_q(b, cap * 1.5, u) == doctest::Approx(0.0).epsilon(1e-9));

    // dense-grid oracle at R = 0.9 C
    double rate = 0.9 * cap;
    double best = 0;
    for (double rho = 0.0; rho <= 4.0; rho += 1e-5) {
      double v = gallager_e0(b, u, rho) - rho * rate;
      if (v > best) best = v;
    }
    CHECK(sp_exponent_q(b, rate, u) == doctest::Approx(best).epsilon(1e-6));
    CHECK(best > 0.0);

    // nonincreasing in R over the full maximization
    SpOptions<double> opt;
    opt.q_resolution = 40;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20; ++i) {
      double r = cap * (0.3 + 0.7 * i / 20.0);
      double v = sp_exponent(b, r, opt);
      CHECK(v <= prev + 1e-9);
      prev = v;
    }
    CHECK(sp_exponent(b, cap, opt) == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("moment profile bundles the per-channel scalars") {
    auto mp = compute_profile(bec(0.5), 0.1);
    CHECK(mp.capacity == doctest::Approx(0.5 * kLn2).epsilon(1e-10));
    CHECK(mp.v == doctest::Approx(0.25 * kLn2 * kLn2).epsilon(1e-9));
    CHECK(std::abs(mp.v_rev) < 1e-12);
    CHECK(mp.u == doctest::Approx(mp.v).epsilon(1e-9));
    CHECK(mp.m3_tilde <= mp.kappa);
  }
}
