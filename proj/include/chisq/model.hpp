#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "chisq/errors.hpp"
#include "chisq/kernel.hpp"
#include "chisq/point.hpp"
#include "chisq/quadrature.hpp"

namespace chisq {

// C(t) > 0 on (0,1), kept in the singular-power form of SingularFunction.
struct LocalVariance {
  SingularFunction c;
  std::string name = "custom";

  [[nodiscard]] double operator()(double t) const { return c(t); }
  [[nodiscard]] double operator()(const Point& p) const { return c(p); }
  [[nodiscard]] SingularFunction density(double alpha) const { return c.power(1 / alpha); }

  [[nodiscard]] LocalVariance scaled(double factor) const {
    LocalVariance r = *this;
    const double lf = std::log(factor);
    r.c = c.times_exp([lf](const Point&) { return lf; });
    return r;
  }

  static LocalVariance power_form(double a0, double a1, double log_const, std::string name) {
    LocalVariance v;
    v.c.pow0 = a0;
    v.c.pow1 = a1;
    v.c.log_rest = [log_const](const Point&) { return log_const; };
    v.name = std::move(name);
    return v;
  }
};

struct TrendFunction {
  PointFn g = [](const Point&) { return 0.0; };
  std::string name = "zero";
  bool monotone_near_0 = false;
  bool monotone_near_1 = false;

  [[nodiscard]] double operator()(const Point& p) const { return g(p); }
  [[nodiscard]] double operator()(double t) const { return g(Point::at(t)); }

  [[nodiscard]] TrendFunction shifted(double c) const {
    TrendFunction r = *this;
    r.g = [f = g, c](const Point& p) { return f(p) + c; };
    r.name = name + "+" + std::to_string(c);
    return r;
  }
  [[nodiscard]] TrendFunction scaled(double a) const {
    TrendFunction r = *this;
    r.g = [f = g, a](const Point& p) { return a * f(p); };
    r.name = std::to_string(a) + "*" + name;
    return r;
  }
};

namespace trends {

inline double ln1p_sq(double c) {
  return std::abs(c) > 1e150 ? 2 * std::log(std::abs(c)) : std::log1p(c * c);
}

// c(t) = ln(1 - ln(4t(1-t)))
inline double c_of(const Point& p) {
  const double x0 = -p.log_t;
  const double x1 = -p.log_1mt;
  if (std::isfinite(x0) && std::isfinite(x1)) return std::log(1 - 2 * M_LN2 + x0 + x1);
  return std::isfinite(x0) ? p.ll1 : p.ll0;
}

// g_nu(t) = c + nu ln(1 + c^2)
inline double g_nu(double nu, const Point& p) {
  const double c = c_of(p);
  return c + nu * ln1p_sq(c);
}

// d/dt g_nu
inline double g_nu_derivative(double nu, double t) {
  const double w = 1 - std::log(4 * t * (1 - t));
  const double c = std::log(w);
  return (1 + c * c + 2 * nu * c) / (1 + c * c) * (2 * t - 1) / (t * (1 - t) * w);
}

// ln ln(e^a / t) for a > 0
inline double lnln_shift(double a, const Point& p) {
  const double x = -p.log_t;
  return std::isfinite(x) ? std::log(a + x) : p.ll0;
}

// ln ln ln(e^a / t)
inline double lnlnln_shift(double a, const Point& p) {
  const double x = -p.log_t;
  return std::isfinite(x) ? std::log(std::log(a + x)) : p.lll0;
}

// g_rho(t) = 2 ln ln(e^2/t) + 2 rho ln ln ln(e^3/t)
inline double g_rho(double rho, const Point& p) {
  return 2 * lnln_shift(2, p) + 2 * rho * lnlnln_shift(3, p);
}

inline TrendFunction zero() { return {}; }

inline TrendFunction constant(double c) {
  TrendFunction g;
  g.g = [c](const Point&) { return c; };
  g.name = "const:" + std::to_string(c);
  return g;
}

inline TrendFunction gnu_plain(double nu) {
  TrendFunction g;
  g.g = [nu](const Point& p) { return g_nu(nu, p); };
  g.name = "g_nu:" + std::to_string(nu);
  g.monotone_near_0 = g.monotone_near_1 = true;
  return g;
}

// 2 g_nu: the trend of the chi-square form of the bridge statistic.
inline TrendFunction gnu(double nu) {
  TrendFunction g;
  g.g = [nu](const Point& p) { return 2 * g_nu(nu, p); };
  g.name = "gnu:" + std::to_string(nu);
  g.monotone_near_0 = g.monotone_near_1 = true;
  return g;
}

inline TrendFunction grho(double rho) {
  TrendFunction g;
  g.g = [rho](const Point& p) { return g_rho(rho, p); };
  g.name = "grho:" + std::to_string(rho);
  g.monotone_near_0 = true;
  return g;
}

// a ln ln(e^2/t)
inline TrendFunction lnln(double a) {
  TrendFunction g;
  g.g = [a](const Point& p) { return a * lnln_shift(2, p); };
  g.name = "lnln:" + std::to_string(a);
  g.monotone_near_0 = a > 0;
  return g;
}

}  // namespace trends

// 1 - r(s,t) for a correlation function, with an optional representation
// that stays accurate for points packed against an endpoint.
struct Correlation {
  std::function<double(double, double)> r;
  std::function<double(const Point&, const Point&)> precise_one_minus;

  [[nodiscard]] bool valid() const { return static_cast<bool>(r); }
  [[nodiscard]] double operator()(double s, double t) const { return r(s, t); }
  [[nodiscard]] double one_minus(const Point& s, const Point& t) const {
    if (precise_one_minus) return precise_one_minus(s, t);
    const double v = r(s.t, t.t);
    if (v < -1 - 1e-12 || v > 1 + 1e-12) throw DomainError("correlation outside [-1,1]");
    return 1 - v;
  }
};

enum class ProcessKind { none, bridge_normalized, bm_normalized, fbm_normalized, ou, stationary };

// One Gaussian coordinate X_i: local structure (C_i, K_i) plus, when known,
// its correlation function and a sampler recipe.
struct Component {
  RegVarKernel kernel = RegVarKernel::power(1);
  LocalVariance c;
  Correlation correlation;
  ProcessKind process = ProcessKind::none;
  double parameter = 0;                           // H for fBm, lambda for OU
  std::function<double(double)> stationary_corr;  // r(lag) for stationary processes
  std::string id = "custom";

  [[nodiscard]] double alpha() const { return kernel.alpha(); }
};

struct Interval {
  double lo = 0;
  double hi = 1;
  bool lo_open = true;
  bool hi_open = true;

  static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval open(double lo, double hi) { return {lo, hi, true, true}; }

  [[nodiscard]] bool improper_at_0() const { return lo == 0 && lo_open; }
  [[nodiscard]] bool improper_at_1() const { return hi == 1 && hi_open; }
  [[nodiscard]] bool improper() const { return improper_at_0() || improper_at_1(); }

  void validate() const {
    if (!(lo >= 0 && hi <= 1 && lo < hi)) throw DomainError("interval must satisfy 0 <= lo < hi <= 1");
  }

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << (lo_open ? "(" : "[") << lo << "," << hi << (hi_open ? ")" : "]");
    return os.str();
  }
};

class ChiSquareModel {
 public:
  static ChiSquareModel homogeneous(Component comp, std::vector<double> b, Interval e) {
    ChiSquareModel m;
    m.b_ = std::move(b);
    m.validate_weights();
    m.components_ = {std::move(comp)};
    m.interval_ = e;
    e.validate();
    return m;
  }

  // Components 1..k lead with a shared index alpha; the rest have larger indices.
  static ChiSquareModel heterogeneous(std::vector<Component> comps, int k, Interval e) {
    ChiSquareModel m;
    const int n = static_cast<int>(comps.size());
    if (k < 1 || k > n) throw DomainError("heterogeneous model needs 1 <= k <= n");
    m.b_.assign(n, 1.0);
    m.k_ = k;
    m.heterogeneous_ = true;
    const double a = comps[0].alpha();
    for (int i = 1; i < k; ++i)
      if (comps[i].alpha() != a) throw DomainError("leading components must share the index alpha");
    double prev = a;
    for (int i = k; i < n; ++i) {
      const double ai = comps[i].alpha();
      if (!(ai > prev || (i > k && ai >= prev)) || !(ai < 2))
        throw DomainError("trailing indices must satisfy alpha < alpha_{k+1} <= ... <= alpha_n < 2");
      prev = ai;
    }
    m.components_ = std::move(comps);
    m.interval_ = e;
    e.validate();
    return m;
  }

  [[nodiscard]] const std::vector<double>& b() const { return b_; }
  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] int n() const { return static_cast<int>(b_.size()); }
  [[nodiscard]] bool is_heterogeneous() const { return heterogeneous_; }
  [[nodiscard]] const Interval& interval() const { return interval_; }
  [[nodiscard]] double alpha() const { return components_[0].alpha(); }
  [[nodiscard]] const Component& component(int i = 0) const {
    return heterogeneous_ ? components_.at(i) : components_[0];
  }
  [[nodiscard]] const std::vector<Component>& components() const { return components_; }

  [[nodiscard]] ChiSquareModel with_interval(Interval e) const {
    e.validate();
    ChiSquareModel m = *this;
    m.interval_ = e;
    return m;
  }

  std::string name = "custom";

 private:
  void validate_weights() {
    if (b_.empty()) throw DomainError("weight vector must be nonempty");
    if (b_[0] != 1) throw DomainError("weights must start with b_1 = 1");
    k_ = 0;
    while (k_ < static_cast<int>(b_.size()) && b_[k_] == 1) ++k_;
    for (std::size_t i = k_; i < b_.size(); ++i) {
      if (!(b_[i] > 0 && b_[i] < 1)) throw DomainError("weights after the k leading ones must lie in (0,1)");
      if (i > static_cast<std::size_t>(k_) && b_[i] > b_[i - 1])
        throw DomainError("weights must be nonincreasing");
    }
  }

  std::vector<double> b_{1.0};
  int k_ = 1;
  bool heterogeneous_ = false;
  std::vector<Component> components_;
  Interval interval_;
};

// ---------------------------------------------------------------------------
// f-transform f(t) = int_{1/2}^t h, h = C^{1/alpha}, and its partitions.

struct ExtendedValue {
  double value = 0;
  Finiteness status = Finiteness::finite;
};

// Evaluates f on one side through the distance coordinate x = -ln(dist to side).
class FTransform {
 public:
  explicit FTransform(SingularFunction h, QuadratureOptions o = {}) : h_(std::move(h)), o_(o) {
    h1_ = h_.mirrored();
    mid0_ = integrate_plain(h_, kTailSwitch, 0.5, o_).value;
    mid1_ = integrate_plain(h1_, kTailSwitch, 0.5, o_).value;
  }

  [[nodiscard]] const SingularFunction& density() const { return h_; }

  [[nodiscard]] double operator()(double t) const {
    if (!(t > 0 && t < 1)) throw DomainError("f-transform needs t in (0,1)");
    if (t <= 0.5) return -integral_to_half(h_, mid0_, -std::log(t));
    return integral_to_half(h1_, mid1_, -std::log1p(-t));
  }

  // f at distance e^{-x} from the given side (side 0: t = e^{-x}).
  [[nodiscard]] double at_x(int side, double x) const {
    return side == 0 ? -integral_to_half(h_, mid0_, x) : integral_to_half(h1_, mid1_, x);
  }

  [[nodiscard]] ExtendedValue limit(int side) const {
    const SingularFunction& h = side == 0 ? h_ : h1_;
    const double mid = side == 0 ? mid0_ : mid1_;
    const Integral tail = integrate_z0(h, 0, std::numeric_limits<double>::infinity(), o_);
    ExtendedValue v;
    v.status = tail.status;
    const double sign = side == 0 ? -1 : 1;
    if (tail.status == Finiteness::finite) {
      v.value = sign * (mid + tail.value);
    } else if (tail.status == Finiteness::infinite) {
      v.value = sign * std::numeric_limits<double>::infinity();
    } else {
      v.value = std::numeric_limits<double>::quiet_NaN();
    }
    return v;
  }

  // x with f(side, x) = -+ j d, i.e. the partition point at distance e^{-x}.
  [[nodiscard]] double partition_x(double d, int side, int j) const {
    if (!(d > 0) || j < 0) throw DomainError("partition needs d > 0 and j >= 0");
    if (j == 0) return M_LN2;
    const double target = j * d;
    auto g = [&](double x) { return std::abs(at_x(side, x)) - target; };
    double lo = M_LN2;
    double hi = 1.0;
    while (g(hi) < 0) {
      lo = hi;
      hi *= 2;
      if (hi > 1e300) throw NotApplicable("f has a finite limit at the requested side");
    }
    return solve_bracketed(g, lo, hi);
  }

  [[nodiscard]] Point partition_point(double d, int side, int j) const {
    const double x = partition_x(d, side, j);
    return side == 0 ? Point::near0_x(x) : Point::near1_x(x);
  }

 private:
  // int_{dist = e^{-x}}^{1/2} of h in side-0 orientation
  [[nodiscard]] double integral_to_half(const SingularFunction& h, double mid, double x) const {
    const double t = std::exp(-x);
    if (t >= kTailSwitch) return integrate_plain(h, t, 0.5, o_).value;
    const double z = std::log(std::log(x));
    const Integral tail = integrate_z0(h, 0, z, o_);
    return mid + tail.value;
  }

  SingularFunction h_;
  SingularFunction h1_;
  QuadratureOptions o_;
  double mid0_ = 0;
  double mid1_ = 0;
};

inline double f_transform(const LocalVariance& c, double alpha, double t) {
  return FTransform(c.density(alpha))(t);
}

inline ExtendedValue f_limit(const LocalVariance& c, double alpha, int side) {
  return FTransform(c.density(alpha)).limit(side);
}

// Returns f^{-1}(-jd) (side 0) or f^{-1}(jd) (side 1).
inline double partition_points(const LocalVariance& c, double alpha, double d, int side, int j) {
  const FTransform f(c.density(alpha));
  if (f.limit(side).status != Finiteness::infinite)
    throw NotApplicable("f-transform has a finite limit at side " + std::to_string(side));
  const double x = f.partition_x(d, side, j);
  return side == 0 ? std::exp(-x) : -std::expm1(-x);
}

inline Finiteness integrability(const LocalVariance& c, double alpha, int side) {
  return f_limit(c, alpha, side).status;
}

}  // namespace chisq
