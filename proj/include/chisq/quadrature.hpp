#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "chisq/errors.hpp"
#include "chisq/point.hpp"

namespace chisq {

enum class Finiteness { finite, infinite, unknown };

inline const char* to_string(Finiteness f) {
  switch (f) {
    case Finiteness::finite: return "finite";
    case Finiteness::infinite: return "infinite";
    default: return "unknown";
  }
}

struct Integral {
  double value = 0;
  double error = 0;
  Finiteness status = Finiteness::finite;

  [[nodiscard]] bool finite() const { return status == Finiteness::finite; }

  Integral& operator+=(const Integral& o) {
    if (status == Finiteness::unknown || o.status == Finiteness::unknown) {
      status = Finiteness::unknown;
    } else if (status == Finiteness::infinite || o.status == Finiteness::infinite) {
      status = Finiteness::infinite;
    }
    value += o.value;
    error += o.error;
    if (status == Finiteness::infinite) value = std::numeric_limits<double>::infinity();
    return *this;
  }
};

struct QuadratureOptions {
  double rel_tol = 1e-13;
  unsigned max_depth = 18;
  // Tail windows in z = ln ln ln(1/t) are unit length and run up to z_max.
  // Beyond that the trend and the Jacobian cancel at magnitude e^z and double
  // precision runs out, so the remaining tail is extrapolated.
  double z_max = 24;
  // Window contributions decaying geometrically at rate below this are summable.
  double ratio_threshold = 1 - 1e-3;
  int ratio_span = 12;
};

// Below e^{-e} the tail integrators switch to z = ln ln ln(1/t).
inline const double kTailSwitch = std::exp(-std::exp(1.0));

namespace detail {

struct EvalFlags {
  bool saw_inf = false;
  bool saw_nan = false;
};

// Adaptive Gauss-Kronrod 7/15. The error estimate is compared on the same
// scale as the tolerance, with a roundoff floor relative to |K|.
template <class F>
double gk15_panel(F& f, double a, double b, double& err, double& l1) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  static const auto& xk = GK::abscissa();
  static const auto& wk = GK::weights();
  static const auto& wg = G::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(mid);
  double k = wk[0] * f0;
  double g = wg[0] * f0;
  double l = wk[0] * std::abs(f0);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fp = f(mid + half * xk[i]);
    const double fm = f(mid - half * xk[i]);
    k += wk[i] * (fp + fm);
    l += wk[i] * (std::abs(fp) + std::abs(fm));
    if (i % 2 == 0) g += wg[i / 2] * (fp + fm);
  }
  k *= half;
  g *= half;
  l1 = l * half;
  err = std::max(std::abs(k - g), 50 * std::numeric_limits<double>::epsilon() * l1);
  return k;
}

template <class F>
double adaptive_gk15(F& f, double a, double b, unsigned max_depth, double rel_tol, double& err) {
  struct Panel {
    double a, b, value, err;
    unsigned depth;
  };
  double e0 = 0, l0 = 0;
  const double v0 = gk15_panel(f, a, b, e0, l0);
  std::vector<Panel> done;
  std::vector<Panel> todo{{a, b, v0, e0, 0}};
  double total = v0;
  double total_err = e0;
  // bisect the worst panel until the global error meets the tolerance
  auto worst = [](const Panel& x, const Panel& y) { return x.err < y.err; };
  int splits = 0;
  while (!todo.empty() && splits < 4000) {
    const double target = std::max(rel_tol * std::abs(total), 1e-300);
    if (total_err <= target) break;
    std::pop_heap(todo.begin(), todo.end(), worst);
    Panel p = todo.back();
    todo.pop_back();
    if (p.depth >= max_depth) {
      done.push_back(p);
      continue;
    }
    ++splits;
    const double m = 0.5 * (p.a + p.b);
    double el = 0, er = 0, ll = 0, lr = 0;
    const double vl = gk15_panel(f, p.a, m, el, ll);
    const double vr = gk15_panel(f, m, p.b, er, lr);
    total += vl + vr - p.value;
    total_err += el + er - p.err;
    todo.push_back({p.a, m, vl, el, p.depth + 1});
    std::push_heap(todo.begin(), todo.end(), worst);
    todo.push_back({m, p.b, vr, er, p.depth + 1});
    std::push_heap(todo.begin(), todo.end(), worst);
  }
  double v = 0;
  err = 0;
  for (const auto& p : done) { v += p.value; err += p.err; }
  for (const auto& p : todo) { v += p.value; err += p.err; }
  return v;
}

template <class F>
Integral gauss_kronrod(F&& f, double a, double b, const QuadratureOptions& o) {
  Integral r;
  if (!(b > a)) return r;
  EvalFlags flags;
  auto guarded = [&](double x) {
    const double v = f(x);
    if (std::isnan(v)) {
      flags.saw_nan = true;
      return 0.0;
    }
    if (std::isinf(v)) {
      flags.saw_inf = true;
      return 0.0;
    }
    return v;
  };
  double err = 0;
  r.value = adaptive_gk15(guarded, a, b, o.max_depth, o.rel_tol, err);
  r.error = err;
  if (flags.saw_nan || std::isnan(r.value)) {
    r.status = Finiteness::unknown;
  } else if (flags.saw_inf || std::isinf(r.value)) {
    r.status = Finiteness::infinite;
    r.value = std::numeric_limits<double>::infinity();
  }
  return r;
}

// log of h(t) |dt/dv| where v is the level-L coordinate near 0:
// L=0: t, L=1: x=-ln t, L=2: y=ln x, L=3: z=ln y.
inline double log_integrand(const SingularFunction& h, const Point& p, int level) {
  double v = h.log_rest(p);
  const double a = level == 0 ? -h.pow0 : 1 - h.pow0;
  if (a != 0) v += a * p.log_t;
  if (h.pow1 != 0) v -= h.pow1 * p.log_1mt;
  if (level >= 2) v += p.ll0;
  if (level >= 3) v += p.lll0;
  return v;
}

}  // namespace detail

// int_a^b h(t) dt for 0 < a < b < 1, directly in t.
inline Integral integrate_plain(const SingularFunction& h, double a, double b,
                                const QuadratureOptions& o = {}) {
  return detail::gauss_kronrod(
      [&](double t) { return std::exp(detail::log_integrand(h, Point::at(t), 0)); }, a, b, o);
}

// int over t = exp(-x), x in [xa, xb].
inline Integral integrate_x0(const SingularFunction& h, double xa, double xb,
                             const QuadratureOptions& o = {}) {
  return detail::gauss_kronrod(
      [&](double x) { return std::exp(detail::log_integrand(h, Point::near0_x(x), 1)); }, xa, xb, o);
}

// int over t = exp(-exp(exp(z))), z in [za, zb]; zb may be +inf, in which
// case the integral runs to t = 0 and its finiteness is classified from the
// decay of unit-window contributions.
inline Integral integrate_z0(const SingularFunction& h, double za, double zb,
                             const QuadratureOptions& o = {}) {
  auto f = [&](double z) { return std::exp(detail::log_integrand(h, Point::near0_z(z), 3)); };
  Integral out;
  std::vector<double> w;
  const bool to_end = std::isinf(zb);
  int zero_run = 0;
  double z = za;
  while (z < zb) {
    const double z1 = std::min(z + 1.0, zb);
    QuadratureOptions wo = o;
    wo.rel_tol = std::max(o.rel_tol, 4e-16 * std::exp(z1));
    const Integral r = detail::gauss_kronrod(f, z, z1, wo);
    if (r.status != Finiteness::finite) {
      out.status = r.status;
      out.value = r.status == Finiteness::infinite ? std::numeric_limits<double>::infinity()
                                                   : std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    out.value += r.value;
    out.error += r.error;
    if (!(out.value < 1e300)) {
      out.status = Finiteness::infinite;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    w.push_back(r.value);
    z = z1;
    if (!to_end) continue;

    const std::size_t n = w.size();
    if (n >= 4) {
      const double a = w[n - 2];
      const double b = w[n - 1];
      if (a == 0 && b == 0) {
        if (++zero_run >= 5) return out;
      } else {
        zero_run = 0;
        if (b < a) {
          const double rho = b / a;
          const double tail = b * rho / (1 - rho);
          if (tail <= 1e-15 * out.value) {
            out.value += tail;
            return out;
          }
        }
      }
    }
    if (z >= o.z_max) {
      const int span = static_cast<int>(std::min<std::size_t>(o.ratio_span, n - 1));
      const double wl = w.back();
      const double wf = w[n - 1 - span];
      if (wl == 0) return out;
      if (!(wf > 0)) {
        out.status = Finiteness::unknown;
        return out;
      }
      const double rho = std::pow(wl / wf, 1.0 / span);
      if (rho < o.ratio_threshold) {
        const double tail = wl * rho / (1 - rho);
        out.value += tail;
        out.error += tail * 1e-3;
        return out;
      }
      out.status = Finiteness::infinite;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  return out;
}

// z coordinate of a point t <= e^{-e}.
inline double z_of(const Point& p) { return p.lll0; }

// int_lo^hi h(t) dt with 0 <= lo < hi <= 1; an endpoint equal to 0 or 1 is
// treated as improper.
inline Integral integrate(const SingularFunction& h, double lo, double hi,
                          const QuadratureOptions& o = {}) {
  if (!(lo < hi) || lo < 0 || hi > 1) throw DomainError("integrate: need 0 <= lo < hi <= 1");
  const double s0 = kTailSwitch;
  const double s1 = 1 - kTailSwitch;
  Integral out;
  // left tail piece [lo, min(hi, s0)]
  if (lo < s0) {
    const double top = std::min(hi, s0);
    const double za = z_of(Point::at(top));
    const double zb = lo == 0 ? std::numeric_limits<double>::infinity() : z_of(Point::at(lo));
    out += integrate_z0(h, za, zb, o);
  }
  const double ma = std::max(lo, s0);
  const double mb = std::min(hi, s1);
  if (ma < mb) out += integrate_plain(h, ma, mb, o);
  if (hi > s1) {
    const SingularFunction m = h.mirrored();
    const double bottom = std::max(lo, s1);
    const double za = z_of(Point::at(1 - bottom));
    const double zb = hi == 1 ? std::numeric_limits<double>::infinity() : z_of(Point::at(1 - hi));
    out += integrate_z0(m, za, zb, o);
  }
  return out;
}

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    if (n < 1) throw DomainError("Gauss-Legendre order must be positive");
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) p0 = 1;
        dp = n * (x * p1 - p0) / (x * x - 1);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = weights[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
    }
  }
};

// Root of a monotone function on a bracket [a, b] with f(a), f(b) of opposite sign.
template <class F>
double solve_bracketed(F&& f, double a, double b, int bits = 52) {
  std::uintmax_t iters = 200;
  const auto r =
      boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(bits), iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace chisq
