#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "chisq/admissibility.hpp"
#include "chisq/catalog.hpp"

using namespace chisq;

namespace {

TrendFunction identity_trend() {
  TrendFunction g;
  g.g = [](const Point& p) { return p.t; };
  g.name = "t";
  return g;
}

// stationary correlation with 1 - r ~ |lag|^{1/2}, too rough for K^2(t) = t
Correlation rough_correlation() {
  Correlation c;
  c.r = [](double s, double t) { return std::exp(-std::sqrt(std::abs(t - s))); };
  return c;
}

}  // namespace

TEST_CASE("scenario classification", "[admissibility]") {
  CHECK(classify_scenario(catalog::bridge().c, 1) == Scenario::i);
  CHECK(classify_scenario(catalog::fbm_normalized(0.3).c, 0.6) == Scenario::ii);
  CHECK(classify_scenario(catalog::bm_normalized().c, 1) == Scenario::ii);
  CHECK(classify_scenario(catalog::ou(1).c, 1) == Scenario::iv);
  // mirrored bm: infinite only at 1
  CHECK(classify_scenario(catalog::bm_normalized().c.density(1).mirrored()) == Scenario::iii);
}

TEST_CASE("condition A", "[admissibility]") {
  for (double nu : {0.1, 1.0, 4.0}) {
    CHECK(check_A(trends::gnu_plain(nu), 0).verdict == Verdict::pass);
    CHECK(check_A(trends::gnu_plain(nu), 1).verdict == Verdict::pass);
  }
  CHECK(check_A(trends::constant(1), 0).verdict == Verdict::fail);
  CHECK(check_A(trends::lnln(2), 0).verdict == Verdict::pass);
  CHECK(check_A(identity_trend(), 0).verdict == Verdict::fail);
  CHECK(check_A(identity_trend(), 1).verdict == Verdict::pass);
}

TEST_CASE("condition B", "[admissibility]") {
  SECTION("bridge at 0 is bounded by 8") {
    const auto b = catalog::bridge();
    const auto e = check_B(b.correlation, b.kernel, b.c, 1, 0, 1.0, 200);
    CHECK(e.verdict == Verdict::pass);
    REQUIRE(e.evidence.size() >= 100);
    for (double m : e.evidence) CHECK(m <= 8);
  }
  SECTION("normalized fbm at 0 is bounded by 2^{2H}") {
    for (double h : {0.3, 0.5, 0.8}) {
      const auto f = catalog::fbm_normalized(h);
      const auto e = check_B(f.correlation, f.kernel, f.c, 2 * h, 0, 1.0, 60);
      INFO("H=" << h << " " << e.note);
      CHECK(e.verdict == Verdict::pass);
      for (double m : e.evidence) CHECK(m <= std::pow(2.0, 2 * h) * (1 + 1e-9));
    }
  }
  SECTION("a correlation rougher than the kernel fails") {
    const auto b = catalog::bridge();
    const auto e = check_B(rough_correlation(), b.kernel, b.c, 1, 0, 1.0, 40);
    INFO(e.note);
    CHECK(e.verdict == Verdict::fail);
  }
  SECTION("finite side is reported, not checked") {
    const auto f = catalog::fbm_normalized(0.5);
    CHECK(check_B(f.correlation, f.kernel, f.c, 1, 1).verdict == Verdict::inconclusive);
  }
}

TEST_CASE("condition C boundaries", "[admissibility]") {
  const auto b = catalog::bridge();

  SECTION("bridge with 2 g_nu: boundary at nu = 3/4") {
    double last_fail = 0;
    double first_pass = 2;
    for (int i = 50; i <= 100; ++i) {
      const double nu = i / 100.0;
      const auto v = check_C(trends::gnu(nu), b.c, 1, 1, 0, 0).verdict;
      REQUIRE(v != Verdict::inconclusive);
      if (v == Verdict::fail) last_fail = nu;
      if (v == Verdict::pass && nu < first_pass) first_pass = nu;
    }
    CHECK(last_fail >= 0.74);
    CHECK(first_pass <= 0.76);
    CHECK(last_fail < first_pass);
    CHECK(check_C(trends::gnu(0.74), b.c, 1, 1, 0, 0).verdict == Verdict::fail);
    CHECK(check_C(trends::gnu(0.75), b.c, 1, 1, 0, 0).verdict == Verdict::fail);
    CHECK(check_C(trends::gnu(0.76), b.c, 1, 1, 0, 0).verdict == Verdict::pass);
    // symmetric at the other end
    CHECK(check_C(trends::gnu(0.76), b.c, 1, 1, 1, 0).verdict == Verdict::pass);
    CHECK(check_C(trends::gnu(0.74), b.c, 1, 1, 1, 0).verdict == Verdict::fail);
  }

  SECTION("Bessel with g_rho: pass iff rho > 1 + n/2") {
    const auto w = catalog::bm_normalized();
    for (int n : {1, 2, 3}) {
      const double crit = 1 + n / 2.0;
      for (double d : {-0.5, -0.05}) CHECK(check_C(trends::grho(crit + d), w.c, 1, n, 0, 0).verdict == Verdict::fail);
      CHECK(check_C(trends::grho(crit), w.c, 1, n, 0, 0).verdict == Verdict::fail);
      for (double d : {0.05, 0.5}) CHECK(check_C(trends::grho(crit + d), w.c, 1, n, 0, 0).verdict == Verdict::pass);
    }
  }

  SECTION("strictness: J finite while C fails for rho in (1, 1 + n/2]") {
    const auto w = catalog::bm_normalized();
    const SingularFunction h = w.c.density(1);
    for (int n : {1, 2, 3})
      for (double rho : {1.05, 1 + n / 4.0, 1 + n / 2.0}) {
        INFO("n=" << n << " rho=" << rho);
        CHECK(check_J(trends::grho(rho), h, 0).verdict == Verdict::pass);
        CHECK(check_C(trends::grho(rho), w.c, 1, n, 0, 0).verdict == Verdict::fail);
      }
    CHECK(check_J(trends::grho(0.9), h, 0).verdict == Verdict::fail);
  }

  SECTION("constant trend on an integrable side") {
    CHECK(check_C(trends::constant(3), catalog::ou(1).c, 1, 2, 0, 0).verdict == Verdict::pass);
  }
}

TEST_CASE("C implies J across the catalog", "[admissibility]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0, 1);
  const std::vector<ChiSquareModel> models{catalog::bridge_model(),  catalog::bessel_model(1),
                                           catalog::bessel_model(3), catalog::fbm_model(0.3),
                                           catalog::fbm_model(0.8),  catalog::bridge_bm_fbm_model(0.7)};
  int c_passes = 0;
  for (int i = 0; i < 20; ++i) {
    TrendFunction g;
    switch (i % 3) {
      case 0: g = trends::gnu(0.5 + 2.5 * unif(rng)); break;
      case 1: g = trends::grho(0.5 + 3.5 * unif(rng)); break;
      default: g = trends::lnln(1 + 5 * unif(rng));
    }
    for (const auto& m : models) {
      const SingularFunction h = c_star(m);
      const int mult = m.is_heterogeneous() ? m.n() : m.k();
      const auto c = check_C(g, h, mult / 2.0 - 1 + 1 / m.alpha(), 0, 0);
      if (c.verdict != Verdict::pass) continue;
      ++c_passes;
      INFO(m.name << " " << g.name);
      CHECK(check_J(g, h, 0).verdict == Verdict::pass);
    }
  }
  CHECK(c_passes > 20);
}

TEST_CASE("condition D", "[admissibility]") {
  const auto f = catalog::fbm_normalized(0.5);
  const auto d1 = check_D(f.correlation, f.kernel, f.c, 1, 1);
  INFO(d1.note);
  CHECK(d1.verdict == Verdict::pass);
  const auto o = catalog::ou(1);
  CHECK(check_D(o.correlation, o.kernel, o.c, 1, 0).verdict == Verdict::pass);
  CHECK(check_D(o.correlation, o.kernel, o.c, 1, 1).verdict == Verdict::pass);
  CHECK(check_D(rough_correlation(), o.kernel, o.c, 1, 0).verdict == Verdict::fail);
}

TEST_CASE("Bessel integral test", "[admissibility]") {
  for (double rho : {1.5, 1.99, 2.0})
    CHECK(bessel_integral_test(trends::grho(rho), 2).status == Finiteness::infinite);
  for (double rho : {2.01, 2.5}) CHECK(bessel_integral_test(trends::grho(rho), 2).status == Finiteness::finite);
  CHECK(bessel_integral_test(trends::grho(1.6), 1).status == Finiteness::finite);
  CHECK(bessel_integral_test(trends::grho(1.5), 1).status == Finiteness::infinite);
  CHECK_THROWS_AS(bessel_integral_test(identity_trend(), 2), NotApplicable);
  CHECK_THROWS_AS(bessel_integral_test(trends::constant(5), 2), NotApplicable);
}

TEST_CASE("reports", "[admissibility]") {
  SECTION("bridge with 2 g_1 is applicable and coherent") {
    const auto r = run_admissibility(catalog::bridge_model(), trends::gnu(1));
    CHECK(r.scenario == Scenario::i);
    CHECK(r.overall == Overall::applicable);
    for (const auto& c : r.conditions) CHECK(c.verdict == Verdict::pass);
    CHECK(r.find("C", 0) != nullptr);
    CHECK(r.find("C", 1) != nullptr);
    CHECK(r.find("B", 1) != nullptr);
  }
  SECTION("bridge with 2 g_{0.7} is not applicable because of C") {
    const auto r = run_admissibility(catalog::bridge_model(), trends::gnu(0.7));
    CHECK(r.overall == Overall::not_applicable);
    REQUIRE(r.find("C", 0) != nullptr);
    CHECK(r.find("C", 0)->verdict == Verdict::fail);
    CHECK(r.find("J", 0)->verdict == Verdict::pass);
  }
  SECTION("fbm on (0,1] checks only the left end") {
    const auto r = run_admissibility(catalog::fbm_model(0.5), trends::grho(3));
    CHECK(r.scenario == Scenario::ii);
    CHECK(r.overall == Overall::applicable);
    for (const auto& c : r.conditions) CHECK(c.side == 0);
  }
  SECTION("mixed model uses the primed conditions") {
    const auto r = run_admissibility(catalog::bridge_bm_fbm_model(0.7), trends::gnu(2));
    CHECK(r.overall == Overall::applicable);
    CHECK(r.find("C'", 0) != nullptr);
    CHECK(r.find("B'1", 0) != nullptr);
    CHECK(r.find("B'3", 0) != nullptr);
  }
  SECTION("OU on the open interval runs D at both ends") {
    const auto r = run_admissibility(catalog::ou_model(1, 1, Interval::open(0, 1)), trends::zero());
    CHECK(r.scenario == Scenario::iv);
    CHECK(r.overall == Overall::applicable);
    CHECK(r.find("D", 0) != nullptr);
    CHECK(r.find("D", 1) != nullptr);
  }
}
