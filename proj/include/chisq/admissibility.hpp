#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "chisq/errors.hpp"
#include "chisq/model.hpp"
#include "chisq/quadrature.hpp"

namespace chisq {

enum class Verdict { pass, fail, inconclusive };
enum class Scenario { i, ii, iii, iv, unknown };
enum class Overall { applicable, not_applicable, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "inconclusive";
  }
}
inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::i: return "(i)";
    case Scenario::ii: return "(ii)";
    case Scenario::iii: return "(iii)";
    case Scenario::iv: return "(iv)";
    default: return "unknown";
  }
}
inline const char* to_string(Overall o) {
  switch (o) {
    case Overall::applicable: return "applicable";
    case Overall::not_applicable: return "not-applicable";
    default: return "inconclusive";
  }
}

struct ConditionEntry {
  std::string condition;
  int side = 0;
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> evidence;
  std::string note;
};

struct AdmissibilityReport {
  Scenario scenario = Scenario::unknown;
  ExtendedValue f0;
  ExtendedValue f1;
  std::vector<ConditionEntry> conditions;
  Overall overall = Overall::inconclusive;

  [[nodiscard]] const ConditionEntry* find(const std::string& id, int side) const {
    for (const auto& c : conditions)
      if (c.condition == id && c.side == side) return &c;
    return nullptr;
  }
  [[nodiscard]] std::string summary() const {
    std::string s = std::string("scenario ") + to_string(scenario) + ", " + to_string(overall);
    for (const auto& c : conditions)
      if (c.verdict != Verdict::pass)
        s += "; " + c.condition + "(" + std::to_string(c.side) + ") " + to_string(c.verdict) +
             (c.note.empty() ? "" : ": " + c.note);
    return s;
  }
};

struct AdmissibilityOptions {
  double window_a = 0.1;        // end-window for condition A
  double d0 = 1.0;              // partition step for condition B
  int j_max = 200;              // cells for condition B
  int cell_grid = 200;          // grid points per cell
  double delta = 0.1;           // largest end-window for condition D
  int d_windows = 20;           // delta, delta/2, ..., delta/2^{d_windows-1}
  std::optional<double> eta;    // default 0 for pure-power kernels, 0.01 otherwise
  QuadratureOptions quadrature;
};

namespace admissibility_detail {

inline Point at_distance(int side, double x) { return side == 0 ? Point::near0_x(x) : Point::near1_x(x); }

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Ratio (1 - r) / K^2(|df|) at two points with a precomputed f separation.
inline double ratio(const Correlation& corr, const RegVarKernel& kernel, const Point& a, const Point& b,
                    double df) {
  const double num = corr.one_minus(a, b);
  const double den = kernel.squared(std::abs(df));
  return num / den;
}

// Local blow-up probe: ratios for shrinking separations around distance e^{-x}.
// Returns the growth factor from the coarsest to the finest separation.
inline double probe_growth(const Correlation& corr, const RegVarKernel& kernel, const SingularFunction& h_side,
                           int side, double x, double width, const QuadratureOptions& o) {
  const Point base = at_distance(side, x);
  double first = std::nan("");
  double last = std::nan("");
  for (int m = 4; m <= 30; m += 2) {
    const double dx = width * std::ldexp(1.0, -m);
    const Point other = at_distance(side, x + dx);
    const double df = integrate_x0(h_side, x, x + dx, o).value;
    const double r = ratio(corr, kernel, base, other, df);
    if (m == 4) first = r;
    last = r;
  }
  return last / first;
}

inline Verdict sequence_verdict(const std::vector<double>& m, std::string& note) {
  for (double v : m) {
    if (std::isnan(v)) {
      note = "ratio evaluated to NaN";
      return Verdict::inconclusive;
    }
    if (std::isinf(v)) {
      note = "ratio is infinite";
      return Verdict::fail;
    }
  }
  const double med = median(m);
  const std::size_t half = m.size() / 2;
  double tail_max = 0;
  for (std::size_t j = half; j < m.size(); ++j) tail_max = std::max(tail_max, m[j]);
  if (tail_max >= 10 * med) {
    note = "tail maximum exceeds 10x the median";
    return Verdict::fail;
  }
  // steadily increasing final quarter: evidence still growing
  const std::size_t q = m.size() - m.size() / 4;
  bool increasing = m.size() >= 8;
  for (std::size_t j = q + 1; j < m.size() && increasing; ++j) increasing = m[j] > m[j - 1];
  if (increasing && m.back() > 1.05 * m[q]) {
    note = "sequence still increasing";
    return Verdict::inconclusive;
  }
  return Verdict::pass;
}

}  // namespace admissibility_detail

// ---------------------------------------------------------------------------

inline Scenario scenario_from_limits(const ExtendedValue& f0, const ExtendedValue& f1) {
  if (f0.status == Finiteness::unknown || f1.status == Finiteness::unknown) return Scenario::unknown;
  const bool inf0 = f0.status == Finiteness::infinite;
  const bool inf1 = f1.status == Finiteness::infinite;
  if (inf0 && inf1) return Scenario::i;
  if (inf0) return Scenario::ii;
  if (inf1) return Scenario::iii;
  return Scenario::iv;
}

inline Scenario classify_scenario(const SingularFunction& h) {
  const FTransform f(h);
  return scenario_from_limits(f.limit(0), f.limit(1));
}

inline Scenario classify_scenario(const LocalVariance& c, double alpha) { return classify_scenario(c.density(alpha)); }

inline ConditionEntry check_A(const TrendFunction& g, int side, double window = 0.1, int points = 10000) {
  ConditionEntry e{"A", side, Verdict::pass, {}, ""};
  const double x0 = -std::log(window);
  const double x1 = x0 + 300 * M_LN10;
  double prev = g(admissibility_detail::at_distance(side, x0));
  const double first = prev;
  for (int i = 1; i < points; ++i) {
    const double x = x0 + (x1 - x0) * i / (points - 1);
    const double v = g(admissibility_detail::at_distance(side, x));
    if (std::isnan(v) || v < prev - 1e-12 * std::abs(prev)) {
      e.verdict = Verdict::fail;
      const double xp = x0 + (x1 - x0) * (i - 1) / (points - 1);
      e.evidence = {xp, prev, x, v};
      e.note = "trend decreases toward the endpoint (distance exponents and values in evidence)";
      return e;
    }
    prev = v;
  }
  e.evidence = {first, prev};
  if (!(prev > first)) {
    e.verdict = Verdict::fail;
    e.note = "trend is not increasing toward the endpoint";
  }
  return e;
}

// Condition B on side S with f-density h (C^{1/alpha}, or C* for mixed models).
inline ConditionEntry check_B(const Correlation& corr, const RegVarKernel& kernel, const SingularFunction& h,
                              int side, double d0 = 1.0, int j_max = 200, int grid = 200,
                              const QuadratureOptions& o = {}) {
  using namespace admissibility_detail;
  ConditionEntry e{"B", side, Verdict::inconclusive, {}, ""};
  if (!corr.valid()) {
    e.note = "no correlation function available";
    return e;
  }
  const FTransform f(h, o);
  if (f.limit(side).status != Finiteness::infinite) {
    e.note = "f is finite at this side";
    return e;
  }
  const SingularFunction hs = side == 0 ? h : h.mirrored();
  // Without a precise 1-r the points must stay resolvable in plain doubles.
  const double x_cap = corr.precise_one_minus ? 1e300 : (side == 0 ? 690.0 : 30.0);
  std::vector<double> xs{M_LN2};
  for (int j = 1; j <= j_max; ++j) {
    const double x = f.partition_x(d0, side, j);
    if (x > x_cap) {
      e.note = "cells capped at j=" + std::to_string(j - 1) + " (points not resolvable)";
      break;
    }
    xs.push_back(x);
  }
  const int cells = static_cast<int>(xs.size()) - 1;
  if (cells < 8) {
    e.note = "too few resolvable cells";
    return e;
  }
  std::vector<double> m(cells);
  std::vector<Point> pts(grid);
  std::vector<double> fx(grid);
  for (int j = 1; j <= cells; ++j) {
    const double xa = xs[j - 1];
    const double xb = xs[j];
    fx[0] = 0;
    for (int i = 0; i < grid; ++i) {
      const double x = xa + (xb - xa) * i / (grid - 1);
      pts[i] = at_distance(side, x);
      if (i > 0) fx[i] = fx[i - 1] + integrate_x0(hs, xa + (xb - xa) * (i - 1) / (grid - 1), x, o).value;
    }
    double best = 0;
    for (int i = 0; i < grid; ++i)
      for (int l = i + 1; l < grid; ++l) {
        const double r = ratio(corr, kernel, pts[i], pts[l], fx[l] - fx[i]);
        if (!(r <= best)) best = r;
      }
    m[j - 1] = best;
  }
  e.evidence = m;
  std::string note;
  e.verdict = sequence_verdict(m, note);
  // Shrinking separations inside a few cells.
  if (e.verdict != Verdict::fail) {
    for (int j : {cells / 4, cells / 2, cells}) {
      const int jj = std::max(1, j);
      const double xa = xs[jj - 1];
      const double xb = xs[jj];
      const double growth = probe_growth(corr, kernel, hs, side, 0.5 * (xa + xb), xb - xa, o);
      if (!(growth < 8)) {
        e.verdict = Verdict::fail;
        note = "ratio grows without bound as separations shrink (factor " + std::to_string(growth) + ")";
        break;
      }
    }
  }
  if (!note.empty()) e.note = e.note.empty() ? note : e.note + "; " + note;
  return e;
}

inline ConditionEntry check_B(const Correlation& corr, const RegVarKernel& kernel, const LocalVariance& c,
                              double alpha, int side, double d0 = 1.0, int j_max = 200) {
  return check_B(corr, kernel, c.density(alpha), side, d0, j_max);
}

// Finiteness of |int_{1/2}^S h g^{k/2-1+1/alpha+eta} e^{-g/2}|.
inline ConditionEntry check_C(const TrendFunction& g, const SingularFunction& h, double exponent_base, int side,
                              double eta, const QuadratureOptions& o = {}) {
  ConditionEntry e{"C", side, Verdict::inconclusive, {}, ""};
  const double p = exponent_base + eta;
  const SingularFunction integrand = h.times_exp([g, p](const Point& pt) {
    const double v = g(pt);
    const double lp = p == 0 ? 0.0 : p * std::log(std::max(v, 0.0));
    return lp - v / 2;
  });
  const Integral r = side == 0 ? integrate(integrand, 0, 0.5, o) : integrate(integrand, 0.5, 1, o);
  e.evidence = {r.value, p};
  switch (r.status) {
    case Finiteness::finite: e.verdict = Verdict::pass; break;
    case Finiteness::infinite:
      e.verdict = Verdict::fail;
      e.note = "weighted trend integral diverges";
      break;
    default: e.note = "divergence test inconclusive";
  }
  return e;
}

inline ConditionEntry check_C(const TrendFunction& g, const LocalVariance& c, double alpha, int k, int side,
                              double eta) {
  return check_C(g, c.density(alpha), k / 2.0 - 1 + 1 / alpha, side, eta);
}

// Condition D on side S: sup of the ratio over shrinking end-windows.
inline ConditionEntry check_D(const Correlation& corr, const RegVarKernel& kernel, const SingularFunction& h,
                              int side, double delta = 0.1, int windows = 20, const QuadratureOptions& o = {}) {
  using namespace admissibility_detail;
  ConditionEntry e{"D", side, Verdict::inconclusive, {}, ""};
  if (!corr.valid()) {
    e.note = "no correlation function available";
    return e;
  }
  const SingularFunction hs = side == 0 ? h : h.mirrored();
  const int grid = 100;
  std::vector<double> sups;
  std::string note;
  for (int m = 0; m < windows; ++m) {
    const double xa = -std::log(delta) + m * M_LN2;  // window (0, delta 2^{-m})
    const double xb = xa + 8 * M_LN10;
    std::vector<Point> pts(grid);
    std::vector<double> fx(grid, 0.0);
    for (int i = 0; i < grid; ++i) {
      const double x = xa + (xb - xa) * i / (grid - 1);
      pts[i] = at_distance(side, x);
      if (i > 0) fx[i] = fx[i - 1] + integrate_x0(hs, xa + (xb - xa) * (i - 1) / (grid - 1), x, o).value;
    }
    double best = 0;
    for (int i = 0; i < grid; ++i)
      for (int l = i + 1; l < grid; ++l) {
        const double r = ratio(corr, kernel, pts[i], pts[l], fx[l] - fx[i]);
        if (!(r <= best)) best = r;
      }
    sups.push_back(best);
  }
  e.evidence = sups;
  e.verdict = sequence_verdict(sups, note);
  if (e.verdict != Verdict::fail) {
    for (int m : {0, windows / 2, windows - 1}) {
      const double x = -std::log(delta) + m * M_LN2 + M_LN2;
      const double growth = probe_growth(corr, kernel, hs, side, x, 1.0, o);
      if (!(growth < 8)) {
        e.verdict = Verdict::fail;
        note = "ratio grows without bound as separations shrink (factor " + std::to_string(growth) + ")";
        break;
      }
    }
  }
  e.note = note;
  return e;
}

inline ConditionEntry check_D(const Correlation& corr, const RegVarKernel& kernel, const LocalVariance& c,
                              double alpha, int side, double delta = 0.1) {
  return check_D(corr, kernel, c.density(alpha), side, delta);
}

struct BesselTestResult {
  Finiteness status = Finiteness::unknown;
  double value = 0;
};

// Finiteness of int_0 (g(t))^{n/2} t^{-1} e^{-g(t)/2} dt. The test at infinity
// is the same call with the trend s -> g(1/s), since t = 1/s maps int_1^inf
// onto this integral over (0,1).
inline BesselTestResult bessel_integral_test(const TrendFunction& g, int n, const QuadratureOptions& o = {}) {
  if (n < 1) throw DomainError("Bessel order must be >= 1");
  const ConditionEntry a = check_A(g, 0, 0.1, 2000);
  const double deep = g(Point::near0_z(20));
  if (a.verdict != Verdict::pass || !(deep > 100))
    throw NotApplicable("integral test needs a trend increasing to infinity at the tested end");
  SingularFunction h;
  h.pow0 = 1;
  const double half = n / 2.0;
  h.log_rest = [g, half](const Point& p) {
    const double v = g(p);
    return half * std::log(std::max(v, 0.0)) - v / 2;
  };
  const Integral r = integrate(h, 0, 0.5, o);
  BesselTestResult out;
  out.status = r.status;
  out.value = r.value;
  return out;
}

// ---------------------------------------------------------------------------

// C*(t) = max over components of C_i^{1/alpha} (leading) or C_i^{1/alpha_i} (trailing).
inline SingularFunction c_star(const ChiSquareModel& model) {
  if (!model.is_heterogeneous()) return model.component().c.density(model.alpha());
  std::vector<SingularFunction> parts;
  for (int i = 0; i < model.n(); ++i) {
    const auto& comp = model.component(i);
    const double a = i < model.k() ? model.alpha() : comp.alpha();
    parts.push_back(comp.c.density(a));
  }
  double a0 = -std::numeric_limits<double>::infinity();
  double a1 = a0;
  for (const auto& p : parts) {
    a0 = std::max(a0, p.pow0);
    a1 = std::max(a1, p.pow1);
  }
  SingularFunction s;
  s.pow0 = a0;
  s.pow1 = a1;
  s.log_rest = [parts, a0, a1](const Point& p) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& q : parts) {
      double v = q.log_rest(p);
      if (a0 != q.pow0) v += (a0 - q.pow0) * p.log_t;
      if (a1 != q.pow1) v += (a1 - q.pow1) * p.log_1mt;
      best = std::max(best, v);
    }
    return best;
  };
  return s;
}

inline bool all_pure_power(const ChiSquareModel& m) {
  for (const auto& c : m.components())
    if (!c.kernel.is_pure_power()) return false;
  return true;
}

// J integrand h e^{-g/2} finiteness on one side (informational entry "J").
inline ConditionEntry check_J(const TrendFunction& g, const SingularFunction& h, int side,
                              const QuadratureOptions& o = {}) {
  ConditionEntry e{"J", side, Verdict::inconclusive, {}, ""};
  const SingularFunction integrand = h.times_exp([g](const Point& p) { return -g(p) / 2; });
  const Integral r = side == 0 ? integrate(integrand, 0, 0.5, o) : integrate(integrand, 0.5, 1, o);
  e.evidence = {r.value};
  if (r.status == Finiteness::finite) {
    e.verdict = Verdict::pass;
  } else if (r.status == Finiteness::infinite) {
    e.verdict = Verdict::fail;
    e.note = "J diverges";
  }
  return e;
}

// Runs every condition the detected scenario demands on the improper sides of E.
inline AdmissibilityReport run_admissibility(const ChiSquareModel& model, const TrendFunction& g,
                                             const AdmissibilityOptions& opt = {}) {
  AdmissibilityReport rep;
  const SingularFunction h = c_star(model);
  const FTransform f(h, opt.quadrature);
  rep.f0 = f.limit(0);
  rep.f1 = f.limit(1);
  rep.scenario = scenario_from_limits(rep.f0, rep.f1);
  const double alpha = model.alpha();
  const int mult = model.is_heterogeneous() ? model.n() : model.k();
  const double eta = opt.eta.value_or(all_pure_power(model) ? 0.0 : 0.01);
  const RegVarKernel& kernel = model.component(0).kernel;
  const Interval& e = model.interval();

  for (int side = 0; side <= 1; ++side) {
    const bool improper = side == 0 ? e.improper_at_0() : e.improper_at_1();
    if (!improper) continue;
    const ExtendedValue& lim = side == 0 ? rep.f0 : rep.f1;
    rep.conditions.push_back(check_J(g, h, side, opt.quadrature));
    if (lim.status == Finiteness::unknown) {
      rep.conditions.push_back({"scenario", side, Verdict::inconclusive, {}, "f-limit undetermined"});
      continue;
    }
    const int ncorr = model.is_heterogeneous() ? model.n() : 1;
    if (lim.status == Finiteness::infinite) {
      rep.conditions.push_back(check_A(g, side, opt.window_a));
      for (int i = 0; i < ncorr; ++i) {
        auto b = check_B(model.component(i).correlation, kernel, h, side, opt.d0, opt.j_max, opt.cell_grid,
                         opt.quadrature);
        if (ncorr > 1) b.condition = "B'" + std::to_string(i + 1);
        rep.conditions.push_back(std::move(b));
      }
      auto c = check_C(g, h, mult / 2.0 - 1 + 1 / alpha, side, eta, opt.quadrature);
      if (ncorr > 1) c.condition = "C'";
      rep.conditions.push_back(std::move(c));
    } else {
      for (int i = 0; i < ncorr; ++i) {
        auto d = check_D(model.component(i).correlation, kernel, h, side, opt.delta, opt.d_windows, opt.quadrature);
        if (ncorr > 1) d.condition = "D'" + std::to_string(i + 1);
        rep.conditions.push_back(std::move(d));
      }
    }
  }
  rep.overall = Overall::applicable;
  if (rep.scenario == Scenario::unknown) rep.overall = Overall::inconclusive;
  for (const auto& c : rep.conditions) {
    if (c.verdict == Verdict::fail) {
      rep.overall = Overall::not_applicable;
      break;
    }
    if (c.verdict == Verdict::inconclusive) rep.overall = Overall::inconclusive;
  }
  return rep;
}

}  // namespace chisq
