#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace chisq {

// A location in (0,1) that keeps its distance to both endpoints in log,
// log-log and log-log-log form. Functions of t evaluated through these
// fields stay accurate far below the smallest representable double.
struct Point {
  double t = 0.5;
  double log_t = -M_LN2;    // ln t
  double log_1mt = -M_LN2;  // ln(1-t)
  double ll0 = 0;           // ln(-ln t)
  double ll1 = 0;           // ln(-ln(1-t))
  double lll0 = 0;          // ln ln(-ln t); NaN when -ln t <= 1
  double lll1 = 0;

  static Point at(double t) {
    Point p;
    p.t = t;
    p.log_t = std::log(t);
    p.log_1mt = std::log1p(-t);
    p.ll0 = std::log(-p.log_t);
    p.ll1 = std::log(-p.log_1mt);
    p.lll0 = safe_log(p.ll0);
    p.lll1 = safe_log(p.ll1);
    return p;
  }

  // t = exp(-x), x > 0
  static Point near0_x(double x) {
    Point p;
    p.t = std::exp(-x);
    p.log_t = -x;
    p.log_1mt = p.t < 0.5 ? std::log1p(-p.t) : std::log(-std::expm1(-x));
    p.ll0 = std::log(x);
    p.lll0 = safe_log(p.ll0);
    const double m = -p.log_1mt;
    p.ll1 = m > 0 ? std::log(m) : -x;
    p.lll1 = safe_log(p.ll1);
    return p;
  }

  // t = exp(-exp(y))
  static Point near0_y(double y) {
    const double x = std::exp(y);
    Point p;
    if (std::isfinite(x)) {
      p = near0_x(x);
    } else {
      p.t = 0;
      p.log_t = -x;
      p.log_1mt = -0.0;
      p.ll1 = -x;
      p.lll1 = std::numeric_limits<double>::quiet_NaN();
    }
    p.ll0 = y;
    p.lll0 = safe_log(y);
    return p;
  }

  // t = exp(-exp(exp(z)))
  static Point near0_z(double z) {
    Point p = near0_y(std::exp(z));
    p.lll0 = z;
    return p;
  }

  static Point near1_x(double x) { return near0_x(x).mirrored(); }
  static Point near1_y(double y) { return near0_y(y).mirrored(); }
  static Point near1_z(double z) { return near0_z(z).mirrored(); }

  // The point 1-t.
  [[nodiscard]] Point mirrored() const {
    Point p;
    p.log_t = log_1mt;
    p.log_1mt = log_t;
    p.ll0 = ll1;
    p.ll1 = ll0;
    p.lll0 = lll1;
    p.lll1 = lll0;
    p.t = std::exp(p.log_t);
    return p;
  }

  [[nodiscard]] double one_minus_t() const { return std::exp(log_1mt); }

  static double safe_log(double v) {
    return v > 0 ? std::log(v) : std::numeric_limits<double>::quiet_NaN();
  }
};

// b - a computed from whichever endpoint representation is sharper.
inline double separation(const Point& a, const Point& b) {
  if (a.t <= 0.5 && b.t <= 0.5) return b.t - a.t;
  if (a.t > 0.5 && b.t > 0.5) return a.one_minus_t() - b.one_minus_t();
  return b.t - a.t;
}

using PointFn = std::function<double(const Point&)>;

// h(t) = t^{-pow0} (1-t)^{-pow1} exp(log_rest(t)).
// The explicit power parts let integrators cancel them against Jacobians
// analytically, so 0*inf never arises at the endpoints.
struct SingularFunction {
  double pow0 = 0;
  double pow1 = 0;
  PointFn log_rest = [](const Point&) { return 0.0; };

  [[nodiscard]] double log_value(const Point& p) const {
    double v = log_rest(p);
    if (pow0 != 0) v -= pow0 * p.log_t;
    if (pow1 != 0) v -= pow1 * p.log_1mt;
    return v;
  }
  [[nodiscard]] double operator()(const Point& p) const { return std::exp(log_value(p)); }
  [[nodiscard]] double operator()(double t) const { return (*this)(Point::at(t)); }

  [[nodiscard]] SingularFunction power(double e) const {
    SingularFunction r;
    r.pow0 = snap(pow0 * e);
    r.pow1 = snap(pow1 * e);
    if (e == 1) {
      r.log_rest = log_rest;
    } else {
      r.log_rest = [f = log_rest, e](const Point& p) { return e * f(p); };
    }
    return r;
  }

  // h * exp(log_factor)
  [[nodiscard]] SingularFunction times_exp(PointFn log_factor) const {
    SingularFunction r;
    r.pow0 = pow0;
    r.pow1 = pow1;
    r.log_rest = [f = log_rest, g = std::move(log_factor)](const Point& p) { return f(p) + g(p); };
    return r;
  }

  // h * t^{-a0} (1-t)^{-a1}
  [[nodiscard]] SingularFunction times_power(double a0, double a1) const {
    SingularFunction r = *this;
    r.pow0 += a0;
    r.pow1 += a1;
    return r;
  }

  [[nodiscard]] SingularFunction mirrored() const {
    SingularFunction r;
    r.pow0 = pow1;
    r.pow1 = pow0;
    r.log_rest = [f = log_rest](const Point& p) { return f(p.mirrored()); };
    return r;
  }

  // Exponents like 2H * (1/(2H)) must stay exactly 1: the endpoint
  // behaviour of the integrators depends on the sign of 1 - pow.
  static double snap(double a) {
    const double r = std::round(a);
    return std::abs(a - r) < 1e-12 ? r : a;
  }

  static SingularFunction constant(double c) {
    SingularFunction r;
    const double lc = std::log(c);
    r.log_rest = [lc](const Point&) { return lc; };
    return r;
  }
};

}  // namespace chisq
