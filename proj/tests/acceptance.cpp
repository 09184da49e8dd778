// Acceptance checks. `acceptance N` runs criterion N and prints one
// "criterion N: PASS|FAIL ..." line; the exit status is 0 on PASS.

#include <sys/wait.h>

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chisq/chisq.hpp"

using namespace chisq;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

void detail(const std::string& s) { std::cout << "  " << s << '\n'; }

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. OU tail against the stationary closed form

Outcome ou_oracle() {
  const auto model = catalog::ou_model(1);
  const auto a = approximate(model, trends::zero());
  MCConfig cfg;
  cfg.n_paths = 4000000;
  cfg.seed = 101;
  std::vector<double> dev;
  double ratio10 = 0;
  for (double u : {8.0, 10.0, 12.0}) {
    // each level on its own grid, f-mesh q(u)/5 and q(u)/10
    const auto r = estimate_tail(model, trends::zero(), u, cfg).tails[0];
    const double asym = a.evaluate(u);
    const double ratio = r.extrapolated / asym;
    detail("u=" + fmt(u) + " asymptotic=" + fmt(asym) + " p(d)=" + fmt(r.coarse.p_hat) + " p(d/2)=" +
           fmt(r.fine.p_hat) + " extrapolated=" + fmt(r.extrapolated) + " [" + fmt(r.extrapolated_low) + ", " +
           fmt(r.extrapolated_high) + "] ratio=" + fmt(ratio) + " raw ratio=" + fmt(r.fine.p_hat / asym) +
           " mesh d/2=" + fmt(r.fine.mesh));
    dev.push_back(std::abs(ratio - 1));
    if (u == 10) ratio10 = ratio;
  }
  const bool within = std::abs(ratio10 - 1) <= 0.2;
  const bool trend = dev[2] < dev[0];
  return {within && trend, "OU u=10 ratio " + fmt(ratio10, 4) + " (band 0.8..1.2), |ratio-1| at u=12 " +
                               fmt(dev[2], 3) + (trend ? " < " : " >= ") + fmt(dev[0], 3) + " at u=8"};
}

// ---------------------------------------------------------------------------
// 2. reduction of the general formulas to the closed forms

Outcome reductions() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0, 1);
  double worst_hom = 0;
  for (int i = 0; i < 20; ++i) {
    const double nu = 0.8 + 2.2 * unif(rng);
    const double h = 0.1 + 0.85 * unif(rng);
    const double u = 5 + 60 * unif(rng);
    const double rho = 1 / (2 * h) + 0.7 + 2 * unif(rng);

    ClosedFormParams pb;
    pb.nu = nu;
    const double b1 = tail_approx(catalog::bridge_model(), trends::gnu(nu)).evaluate(u);
    const double b2 = closed_form(ClosedFormCase::bridge, pb, u).value;
    worst_hom = std::max(worst_hom, std::abs(b1 / b2 - 1));

    AsymptoticsOptions o;
    const double hv = 0.5 + 0.5 * unif(rng);
    o.pickands = PickandsValue{hv, hv, hv, false, "fixed"};
    ClosedFormParams pf;
    pf.hurst = h;
    pf.g = trends::grho(rho);
    pf.pickands = o.pickands;
    const double f1 = tail_approx(catalog::fbm_model(h), pf.g, o).evaluate(u);
    const double f2 = closed_form(ClosedFormCase::fbm, pf, u).value;
    worst_hom = std::max(worst_hom, std::abs(f1 / f2 - 1));
  }
  double worst_mixed = 0;
  for (int i = 0; i < 20; ++i) {
    const double h = 0.55 + 0.4 * unif(rng);
    const double u = 6 + 40 * unif(rng);
    auto g = trends::gnu(1.3 + 2 * unif(rng));
    if (i % 2) g = g.shifted(4 * unif(rng) - 2);
    ClosedFormParams p;
    p.hurst = h;
    p.g = g;
    const double m1 = tail_approx_hetero(catalog::bridge_bm_fbm_model(h), g).evaluate(u);
    const double m2 = closed_form(ClosedFormCase::mixed, p, u).value;
    worst_mixed = std::max(worst_mixed, std::abs(m1 / m2 - 1));
  }
  detail("worst relative difference, bridge and fbm tuples: " + fmt(worst_hom, 3));
  detail("worst relative difference, mixed tuples: " + fmt(worst_mixed, 3));
  return {worst_hom <= 1e-10 && worst_mixed <= 1e-6, "homogeneous " + fmt(worst_hom, 3) + " (tol 1e-10), mixed " +
                                                         fmt(worst_mixed, 3) + " (tol 1e-6)"};
}

// ---------------------------------------------------------------------------
// 3. which Bessel coefficient does simulation support

Outcome bessel_factor() {
  const auto e = Interval::closed(1e-4, 1);
  const auto model = catalog::bessel_model(1, e);
  const auto g = trends::lnln(4);
  const auto a = approximate(model, g);
  const double u = critical_value(a, 1e-3).u;
  ClosedFormParams prm;
  prm.n = 1;
  prm.g = g;
  prm.interval = e;
  const double derived = a.evaluate(u);
  const double literal = closed_form(ClosedFormCase::bessel, prm, u).value;

  MCConfig cfg;
  cfg.n_paths = 10000000;
  cfg.seed = 303;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = estimate_tail(model, g, u, cfg);
  const auto& t = r.tails[0];
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail("u=" + fmt(u, 8) + " derived 2^{-n/2} value=" + fmt(derived) + " literal 2^{1-n/2} value=" + fmt(literal));
  detail("grid " + r.fine_grid.describe() + (r.truncated.empty() ? "" : " (" + r.truncated + ")"));
  detail("p(d)=" + fmt(t.coarse.p_hat) + " [" + fmt(t.coarse.ci_low) + ", " + fmt(t.coarse.ci_high) + "]");
  detail("p(d/2)=" + fmt(t.fine.p_hat) + " [" + fmt(t.fine.ci_low) + ", " + fmt(t.fine.ci_high) + "]");
  detail("extrapolated=" + fmt(t.extrapolated) + " [" + fmt(t.extrapolated_low) + ", " + fmt(t.extrapolated_high) +
         "]  " + fmt(secs, 4) + " s");
  const bool in_derived = t.extrapolated_low <= derived && derived <= t.extrapolated_high;
  const bool in_literal = t.extrapolated_low <= literal && literal <= t.extrapolated_high;
  const bool decides = in_derived != in_literal;
  std::string verdict = "CI contains neither value";
  if (in_derived && in_literal) verdict = "CI contains both values";
  if (decides) verdict = in_derived ? "CI contains the derived value, excludes the literal" : "CI contains the literal value, excludes the derived";
  const bool nearer_derived = std::abs(std::log(t.extrapolated / derived)) < std::abs(std::log(t.extrapolated / literal));
  verdict += nearer_derived ? ", nearer the derived value" : ", nearer the literal value";
  // the criterion asks that the interval exclude at least one candidate
  const bool pass = !(in_derived && in_literal);
  return {pass, "MC/derived " + fmt(t.extrapolated / derived, 4) + ", MC/literal " + fmt(t.extrapolated / literal, 4) +
                    "; " + verdict};
}

// ---------------------------------------------------------------------------
// 4. admissibility boundaries

Outcome boundaries() {
  const auto b = catalog::bridge();
  double nu_fail = 0, nu_pass = 10;
  for (int i = 50; i <= 100; ++i) {
    const double nu = i / 100.0;
    const auto v = check_C(trends::gnu(nu), b.c, 1, 1, 0, 0).verdict;
    if (v == Verdict::fail) nu_fail = std::max(nu_fail, nu);
    if (v == Verdict::pass) nu_pass = std::min(nu_pass, nu);
  }
  const auto w = catalog::bm_normalized();
  double rho_fail = 0, rho_pass = 10;
  for (int i = 150; i <= 250; ++i) {
    const double rho = i / 100.0;
    const auto v = check_C(trends::grho(rho), w.c, 1, 2, 0, 0).verdict;
    if (v == Verdict::fail) rho_fail = std::max(rho_fail, rho);
    if (v == Verdict::pass) rho_pass = std::min(rho_pass, rho);
  }
  const SingularFunction h = w.c.density(1);
  const auto j = check_J(trends::grho(1.5), h, 0);
  const auto c = check_C(trends::grho(1.5), w.c, 1, 2, 0, 0);
  detail("bridge nu: last fail " + fmt(nu_fail) + ", first pass " + fmt(nu_pass));
  detail("Bessel n=2 rho: last fail " + fmt(rho_fail) + ", first pass " + fmt(rho_pass));
  detail("rho=1.5, n=2: J " + std::string(to_string(j.verdict)) + ", C " + to_string(c.verdict) + " (" + c.note + ")");
  const bool nu_ok = nu_fail >= 0.74 && nu_pass <= 0.76 && nu_fail < nu_pass;
  const bool rho_ok = rho_fail >= 1.99 && rho_pass <= 2.01 && rho_fail < rho_pass;
  const bool sep = j.verdict == Verdict::pass && c.verdict == Verdict::fail;
  return {nu_ok && rho_ok && sep, "nu boundary in [" + fmt(nu_fail) + ", " + fmt(nu_pass) + "], rho boundary in [" +
                                      fmt(rho_fail) + ", " + fmt(rho_pass) + "], separation at rho=1.5 " +
                                      (sep ? "shown" : "not shown")};
}

// ---------------------------------------------------------------------------
// 5. Pickands estimator

Outcome pickands() {
  auto show = [](const std::string& tag, const PickandsEstimate& e) {
    for (const auto& l : e.levels)
      detail(tag + " mesh " + fmt(l.mesh) + ": " + fmt(l.value) + " [" + fmt(l.ci_low) + ", " + fmt(l.ci_high) + "]");
  };
  const auto a1 = estimate_pickands(1, 25, 0.01, 100000, 51);
  show("alpha=1 T=25", a1);
  const auto a1d = estimate_pickands(1, 50, 0.01, 100000, 52);
  show("alpha=1 T=50", a1d);
  const auto a2 = estimate_pickands(2, 25, 0.01, 100000, 53);
  show("alpha=2 T=25", a2);
  const double h1 = a1.primary().value;
  const double h2 = a2.primary().value;
  const double diff = std::abs(a1d.primary().value - h1);
  const double band = kZ95 * std::hypot(a1.primary().std_error, a1d.primary().std_error);
  const bool ok1 = std::abs(h1 - 1) <= 0.1;
  const bool ok2 = std::abs(h2 / (1 / std::sqrt(M_PI)) - 1) <= 0.1;
  const bool stable = diff <= band;
  return {ok1 && ok2 && stable, "H_1=" + fmt(h1, 4) + " (within 10% of 1: " + (ok1 ? "yes" : "no") + "), H_2=" +
                                    fmt(h2, 4) + " (within 10% of 0.5642: " + (ok2 ? "yes" : "no") +
                                    "), T-doubling change " + fmt(diff, 3) + (stable ? " <= " : " > ") + fmt(band, 3)};
}

// ---------------------------------------------------------------------------
// 6. Slepian comparison for the OU pair

Outcome slepian() {
  bool all = true;
  std::string summary;
  for (int n : {1, 2}) {
    const auto e = Interval::closed(0, 1);
    const double u = critical_value(approximate(catalog::ou_model(2, n, e), trends::zero()), 1e-3).u;
    MCConfig cfg;
    cfg.n_paths = 2000000;
    cfg.seed = 600 + n;
    const auto r = slepian_check(catalog::ou(1), catalog::ou(2), n, e, u, cfg);
    detail("n=" + std::to_string(n) + " u=" + fmt(u) + " p_X=" + fmt(r.x.fine.p_hat) + " [" + fmt(r.x.fine.ci_low) +
           ", " + fmt(r.x.fine.ci_high) + "] p_Y=" + fmt(r.y.fine.p_hat) + " [" + fmt(r.y.fine.ci_low) + ", " +
           fmt(r.y.fine.ci_high) + "] factor " + fmt(r.factor));
    all = all && r.holds_with_margin;
    summary += (n == 1 ? "" : ", ") + std::string("n=") + std::to_string(n) + " p_Y=" + fmt(r.y.fine.p_hat, 3) +
               (r.holds_with_margin ? " holds" : " fails");
  }
  return {all, summary + " (upper CI of p_X below 2^n times lower CI of p_Y)"};
}

// ---------------------------------------------------------------------------
// 7. goodness-of-fit statistic

double kl(double s, double t) {
  double v = 0;
  if (s > 0) v += s * std::log(s / t);
  if (s < 1) v += (1 - s) * std::log((1 - s) / (1 - t));
  return v;
}

double g_direct(double nu, double t) {
  const double c = std::log(1 - std::log(4 * t * (1 - t)));
  return c + nu * std::log(1 + c * c);
}

double brute_L(std::vector<double> x, double nu) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  auto phi = [&](double s, double t) { return n * kl(s, t) - g_direct(nu, t); };
  double best = -1e300;
  for (int i = 1; i < 1000000; ++i) {
    const double t = i * 1e-6;
    const auto k = std::upper_bound(x.begin(), x.end(), t) - x.begin();
    best = std::max(best, phi(static_cast<double>(k) / n, t));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    best = std::max(best, phi(static_cast<double>(i) / n, x[i]));
    best = std::max(best, phi(static_cast<double>(i + 1) / n, x[i]));
  }
  return best;
}

std::vector<double> uniforms(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(n);
  for (auto& x : v) {
    do x = u(rng);
    while (x == 0);
  }
  return v;
}

Outcome gof() {
  std::mt19937_64 rng(77);
  double worst = 0;
  const std::size_t sizes[3] = {1, 5, 50};
  for (int i = 0; i < 100; ++i) {
    const auto v = uniforms(rng, sizes[i % 3]);
    const double nu = 0.8 + 2.2 * std::uniform_real_distribution<double>(0, 1)(rng);
    worst = std::max(worst, std::abs(compute_L(Sample(v), nu) - brute_L(v, nu)));
  }
  detail("worst |analytic - brute force| over 100 samples: " + fmt(worst, 3));

  const GofTail tail(1);
  // the formula decreases for u > 1; solve limit_tail(u) = 0.05 there
  std::uintmax_t iters = 100;
  const auto br = boost::math::tools::toms748_solve([&](double u) { return tail.limit_tail(u) - 0.05; }, 1.0, 100.0,
                                                    boost::math::tools::eps_tolerance<double>(50), iters);
  const double u = 0.5 * (br.first + br.second);
  const int reps = 5000;
  int exceed = 0;
  for (int r = 0; r < reps; ++r)
    if (2 * compute_L(Sample(uniforms(rng, 2000)), 1) > u) ++exceed;
  const double freq = static_cast<double>(exceed) / reps;
  const auto ci = binomial_estimate(static_cast<std::size_t>(exceed), reps);
  detail("level u=" + fmt(u, 8) + " with asymptotic p=0.05; exceedances " + std::to_string(exceed) + "/" +
         std::to_string(reps) + " = " + fmt(freq) + " [" + fmt(ci.ci_low) + ", " + fmt(ci.ci_high) + "]");
  const bool ok_brute = worst <= 1e-6;
  const bool ok_freq = freq >= 0.01 && freq <= 0.15;
  return {ok_brute && ok_freq, "brute force max diff " + fmt(worst, 3) + " (tol 1e-6), exceedance frequency " +
                                   fmt(freq, 4) + " (band 0.01..0.15)"};
}

// ---------------------------------------------------------------------------
// 8. all unit suites

Outcome invariants() {
  std::vector<std::string> files;
  std::string all = CHISQ_UNIT_TESTS;
  for (std::size_t p = 0; p != std::string::npos;) {
    const auto q = all.find('|', p);
    files.push_back(all.substr(p, q == std::string::npos ? q : q - p));
    p = q == std::string::npos ? q : q + 1;
  }
  int failed = 0;
  std::string names;
  for (const auto& f : files) {
    const std::string cmd = f + " --reporter compact </dev/null >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    const auto name = f.substr(f.find_last_of('/') + 1);
    detail(name + (ok ? " passed" : " FAILED"));
    if (!ok) {
      ++failed;
      names += " " + name;
    }
  }
  return {failed == 0, std::to_string(files.size() - failed) + "/" + std::to_string(files.size()) +
                           " unit suites pass" + (failed ? ";  failing:" + names : "")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1..8>\n";
    return 2;
  }
  const int c = std::atoi(argv[1]);
  Outcome (*const run[])() = {ou_oracle, reductions, bessel_factor, boundaries, pickands, slepian, gof, invariants};
  if (c < 1 || c > 8) {
    std::cerr << "criterion must be 1..8\n";
    return 2;
  }
  Outcome o;
  try {
    o = run[c - 1]();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.summary << std::endl;
  return o.pass ? 0 : 1;
}
