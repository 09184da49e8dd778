#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chisq/admissibility.hpp"
#include "chisq/errors.hpp"
#include "chisq/model.hpp"

namespace chisq {

// G_b = 2^{1-k/2}/Gamma(k/2) prod_{i>k} (1-b_i^2)^{-1/2}
inline double constant_gb(const std::vector<double>& b, int k) {
  const int n = static_cast<int>(b.size());
  if (k < 1 || k > n) throw DomainError("G_b needs 1 <= k <= n");
  for (int i = 0; i < k; ++i)
    if (b[i] != 1) throw DomainError("the first k weights must equal 1");
  double prod = 1;
  for (int i = k; i < n; ++i) {
    if (!(b[i] > 0 && b[i] < 1)) throw DomainError("weights beyond k must lie in (0,1)");
    prod /= std::sqrt((1 - b[i]) * (1 + b[i]));
  }
  return std::pow(2.0, 1 - k / 2.0) / std::tgamma(k / 2.0) * prod;
}

struct PickandsValue {
  double value = 1;
  double ci_low = 1;
  double ci_high = 1;
  bool exact = true;
  std::string source = "closed form";
};

// H_1 = 1 and H_2 = 1/sqrt(pi); other indices need an estimate.
inline PickandsValue pickands_constant(double alpha, const std::optional<PickandsValue>& estimate = std::nullopt) {
  if (!(alpha > 0 && alpha <= 2)) throw DomainError("Pickands index alpha must lie in (0,2]");
  if (alpha == 1) return {1.0, 1.0, 1.0, true, "closed form H_1 = 1"};
  if (alpha == 2) {
    const double v = 1 / std::sqrt(M_PI);
    return {v, v, v, true, "closed form H_2 = 1/sqrt(pi)"};
  }
  if (estimate) return *estimate;
  throw ConfigurationError("no closed form for H_alpha at alpha = " + std::to_string(alpha) +
                           "; supply a Monte Carlo estimate");
}

// c * u^{p} e^{-u/2} / q(u) with c = H * G * J.
struct TailApprox {
  PickandsValue pickands;
  double gb = 1;
  Integral j;
  double poly_exponent = 0;
  RegVarKernel kernel;
  std::string formula;
  std::map<std::string, std::string> meta;
  std::optional<AdmissibilityReport> report;

  [[nodiscard]] double coefficient() const { return pickands.value * gb * j.value; }

  [[nodiscard]] double evaluate(double u) const {
    return pickands.value * gb * j.value * std::pow(u, poly_exponent) * std::exp(-u / 2) / kernel.q(u);
  }

  [[nodiscard]] double log_evaluate(double u) const {
    return std::log(pickands.value) + std::log(gb) + std::log(j.value) + poly_exponent * std::log(u) - u / 2 -
           std::log(kernel.q(u));
  }

  [[nodiscard]] TailApprox shifted_trend(double c) const {
    TailApprox r = *this;
    r.j.value *= std::exp(-c / 2);
    r.j.error *= std::exp(-c / 2);
    return r;
  }
};

struct TailValue {
  double u = 0;
  double value = 0;
  TailApprox approx;
};

enum class Gate { run, assume };

struct AsymptoticsOptions {
  Gate gate = Gate::run;
  AdmissibilityOptions admissibility;
  std::optional<PickandsValue> pickands;
  int angular_order = 64;
  std::size_t angular_mc_samples = 1000000;
  std::uint64_t angular_mc_seed = 20240601;
  QuadratureOptions quadrature;
};

namespace asymptotics_detail {

inline Integral integrate_over(const SingularFunction& h, const Interval& e, const QuadratureOptions& o) {
  return integrate(h, e.lo, e.hi, o);
}

inline std::optional<AdmissibilityReport> gate(const ChiSquareModel& model, const TrendFunction& g,
                                               const AsymptoticsOptions& opt) {
  if (!model.interval().improper()) return std::nullopt;
  if (opt.gate == Gate::assume) return std::nullopt;
  AdmissibilityReport rep = run_admissibility(model, g, opt.admissibility);
  if (rep.overall != Overall::applicable) throw NotApplicable("admissibility check: " + rep.summary());
  return rep;
}

inline void require_finite(const Integral& j, const std::optional<AdmissibilityReport>& rep) {
  if (j.status == Finiteness::finite && j.value > 0 && std::isfinite(j.value)) return;
  std::string msg = std::string("J integral is ") + to_string(j.status);
  if (rep) msg += " (" + rep->summary() + ")";
  throw NotApplicable(msg);
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace asymptotics_detail

inline Integral j_integral(const LocalVariance& c, double alpha, const TrendFunction& g, const Interval& e,
                           const QuadratureOptions& o = {}) {
  e.validate();
  const SingularFunction h = c.density(alpha).times_exp([g](const Point& p) { return -g(p) / 2; });
  return asymptotics_detail::integrate_over(h, e, o);
}

// Homogeneous model: H_alpha G_b J u^{k/2-1} e^{-u/2} / q(u).
inline TailApprox tail_approx(const ChiSquareModel& model, const TrendFunction& g, const AsymptoticsOptions& opt = {}) {
  if (model.is_heterogeneous()) throw DomainError("tail_approx needs a homogeneous model");
  const auto report = asymptotics_detail::gate(model, g, opt);
  const Component& comp = model.component();
  TailApprox a;
  a.report = report;
  a.pickands = pickands_constant(model.alpha(), opt.pickands);
  a.gb = constant_gb(model.b(), model.k());
  a.j = j_integral(comp.c, model.alpha(), g, model.interval(), opt.quadrature);
  asymptotics_detail::require_finite(a.j, report);
  a.poly_exponent = model.k() / 2.0 - 1;
  a.kernel = comp.kernel;
  a.formula = "H_alpha * G_b * J * u^(k/2-1) * exp(-u/2) / q(u)";
  a.meta["model"] = model.name;
  a.meta["trend"] = g.name;
  a.meta["interval"] = model.interval().describe();
  a.meta["pickands"] = a.pickands.source;
  a.meta["gate"] = report ? "admissibility applicable" : (model.interval().improper() ? "assumed" : "compact");
  return a;
}

// ---------------------------------------------------------------------------
// Heterogeneous model.

// Angular integral over (theta_2..theta_n) of
// (sum_{i<=k} C_i w_i(theta))^{1/alpha} prod_{i>=3} cos^{i-2}(theta_i)
// as a function of t. The angles beyond k factor out in closed form.
class AngularIntegrand {
 public:
  AngularIntegrand(int n, int k, double alpha, const AsymptoticsOptions& opt) : n_(n), k_(k), alpha_(alpha) {
    outer_ = outer_factor();
    const int dims = k - 1;
    if (dims == 0) {
      nodes_.push_back({1.0, {1.0}});
      finish();
      return;
    }
    int m = opt.angular_order;
    if (m < 1) throw DomainError("angular quadrature order must be positive");
    const double budget = std::pow(2.0, 18);
    if (std::pow(static_cast<double>(m), dims) <= budget) {
      tensor(m);
    } else {
      monte_carlo(opt.angular_mc_samples, opt.angular_mc_seed);
      method_ = "monte carlo (" + std::to_string(opt.angular_mc_samples) + " samples)";
    }
    finish();
  }

  // log of the angular integral given log C_i(t) for the k leading components
  [[nodiscard]] double log_value(const std::vector<double>& log_c) const {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : log_c) mx = std::max(mx, v);
    if (alpha_ == 1) {
      double s = 0;
      for (int i = 0; i < k_; ++i) s += moments_[i] * std::exp(log_c[i] - mx);
      return mx + std::log(s) + std::log(outer_);
    }
    std::vector<double> e(k_);
    for (int i = 0; i < k_; ++i) e[i] = std::exp(log_c[i] - mx);
    double s = 0;
    const double inv = 1 / alpha_;
    for (const auto& nd : nodes_) {
      double v = 0;
      for (int i = 0; i < k_; ++i) v += e[i] * nd.w[i];
      s += nd.weight * std::pow(v, inv);
    }
    return mx / alpha_ + std::log(s) + std::log(outer_);
  }

  [[nodiscard]] const std::string& method() const { return method_; }

 private:
  struct Node {
    double weight;
    std::vector<double> w;
  };

  // int_{-pi/2}^{pi/2} |cos|^p
  static double cos_power(double p) {
    return std::sqrt(M_PI) * std::exp(std::lgamma((p + 1) / 2) - std::lgamma(p / 2 + 1));
  }

  [[nodiscard]] double outer_factor() const {
    if (n_ == 1) return 2;  // the unit sphere in R^1 is {-1, 1}
    double f = 1;
    for (int j = std::max(k_ + 1, 2); j <= n_; ++j) {
      const double p = 2 / alpha_ + (j - 2);
      f *= j == 2 ? 2 * cos_power(p) : cos_power(p);
    }
    return f;
  }

  // weights w_i for angles (theta_2..theta_k); the trailing cos^2 factors
  // belong to the outer factor.
  [[nodiscard]] std::vector<double> weights_at(const std::vector<double>& th) const {
    std::vector<double> w(k_);
    for (int i = 0; i < k_; ++i) {
      double v = i == 0 ? 1.0 : std::pow(std::sin(th[i - 1]), 2);
      for (int j = std::max(i + 1, 1); j < k_; ++j) v *= std::pow(std::cos(th[j - 1]), 2);
      w[i] = v;
    }
    return w;
  }

  [[nodiscard]] double jacobian(const std::vector<double>& th) const {
    double v = 1;
    for (int i = 3; i <= k_; ++i) v *= std::pow(std::cos(th[i - 2]), i - 2);
    return v;
  }

  // Integrands depend on the angles through cos^2, sin^2 and cos^{i-2} on
  // [-pi/2, pi/2], all even, so each angle is folded onto [0, pi/2].
  [[nodiscard]] double fold() const { return std::pow(2.0, k_ - 1) * 2; }

  void tensor(int m) {
    const GaussLegendre gl(m);
    const int dims = k_ - 1;
    std::vector<int> idx(dims, 0);
    std::vector<double> th(dims);
    const double half = M_PI / 4;
    while (true) {
      double w = fold();
      for (int d = 0; d < dims; ++d) {
        th[d] = half * (gl.nodes[idx[d]] + 1);
        w *= half * gl.weights[idx[d]];
      }
      nodes_.push_back({w * jacobian(th), weights_at(th)});
      int d = 0;
      while (d < dims && ++idx[d] == m) idx[d++] = 0;
      if (d == dims) break;
    }
    method_ = "tensor Gauss-Legendre order " + std::to_string(m);
  }

  void monte_carlo(std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, M_PI / 2);
    const int dims = k_ - 1;
    const double vol = fold() * std::pow(M_PI / 2, dims) / static_cast<double>(samples);
    std::vector<double> th(dims);
    nodes_.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      for (auto& x : th) x = unif(rng);
      nodes_.push_back({vol * jacobian(th), weights_at(th)});
    }
  }

  void finish() {
    moments_.assign(k_, 0.0);
    for (const auto& nd : nodes_)
      for (int i = 0; i < k_; ++i) moments_[i] += nd.weight * nd.w[i];
    if (alpha_ == 1 && nodes_.size() > 1) method_ += ", linear moments";
  }

  int n_;
  int k_;
  double alpha_;
  double outer_ = 1;
  std::vector<Node> nodes_;
  std::vector<double> moments_;
  std::string method_ = "none";
};

// Local variances of the leading components, expressed against the first
// component's kernel: C_i K_i^2 = (C_i s_i^2 / s_1^2) K_1^2 for pure powers.
inline std::vector<SingularFunction> leading_variances(const ChiSquareModel& model) {
  std::vector<SingularFunction> out;
  const RegVarKernel& k1 = model.component(0).kernel;
  for (int i = 0; i < model.k(); ++i) {
    const Component& c = model.component(i);
    if (c.kernel.form() != k1.form() || c.kernel.beta() != k1.beta())
      throw ConfigurationError("leading components must share the kernel K");
    if (c.kernel.form() == KernelForm::custom && c.kernel.describe() != k1.describe())
      throw ConfigurationError("leading components must share the kernel K");
    const double ratio = c.kernel.scale() / k1.scale();
    out.push_back(ratio == 1 ? c.c.c : c.c.scaled(ratio * ratio).c);
  }
  return out;
}

// (2 pi)^{-n/2} H_alpha u^{n/2-1} e^{-u/2} / q(u) times the angular integral.
inline TailApprox tail_approx_hetero(const ChiSquareModel& model, const TrendFunction& g,
                                     const AsymptoticsOptions& opt = {}) {
  for (double b : model.b())
    if (b != 1) throw DomainError("the heterogeneous formula assumes b = 1");
  const auto report = asymptotics_detail::gate(model, g, opt);
  const int n = model.n();
  const int k = model.k();
  const double alpha = model.alpha();
  const std::vector<SingularFunction> cs = leading_variances(model);
  auto ang = std::make_shared<AngularIntegrand>(n, k, alpha, opt);

  double a0 = -std::numeric_limits<double>::infinity();
  double a1 = a0;
  for (const auto& c : cs) {
    a0 = std::max(a0, c.pow0);
    a1 = std::max(a1, c.pow1);
  }
  SingularFunction h;
  h.pow0 = SingularFunction::snap(a0 / alpha);
  h.pow1 = SingularFunction::snap(a1 / alpha);
  h.log_rest = [cs, a0, a1, ang, alpha, g](const Point& p) {
    std::vector<double> lc(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
      double v = cs[i].log_rest(p);
      if (a0 != cs[i].pow0) v += (a0 - cs[i].pow0) * p.log_t;
      if (a1 != cs[i].pow1) v += (a1 - cs[i].pow1) * p.log_1mt;
      lc[i] = v;
    }
    return ang->log_value(lc) - g(p) / 2;
  };

  TailApprox a;
  a.report = report;
  a.pickands = pickands_constant(alpha, opt.pickands);
  a.gb = std::pow(2 * M_PI, -n / 2.0);
  a.j = asymptotics_detail::integrate_over(h, model.interval(), opt.quadrature);
  asymptotics_detail::require_finite(a.j, report);
  a.poly_exponent = n / 2.0 - 1;
  a.kernel = model.component(0).kernel;
  a.formula = "(2pi)^(-n/2) * H_alpha * I * u^(n/2-1) * exp(-u/2) / q(u)";
  a.meta["model"] = model.name;
  a.meta["trend"] = g.name;
  a.meta["interval"] = model.interval().describe();
  a.meta["pickands"] = a.pickands.source;
  a.meta["angular"] = ang->method();
  a.meta["gate"] = report ? "admissibility applicable" : (model.interval().improper() ? "assumed" : "compact");
  return a;
}

inline TailApprox approximate(const ChiSquareModel& model, const TrendFunction& g, const AsymptoticsOptions& opt = {}) {
  return model.is_heterogeneous() ? tail_approx_hetero(model, g, opt) : tail_approx(model, g, opt);
}

inline TailValue tail_probability(const ChiSquareModel& model, const TrendFunction& g, double u,
                                  const AsymptoticsOptions& opt = {}) {
  if (!(u > 0)) throw DomainError("u must be positive");
  TailApprox a = approximate(model, g, opt);
  const double v = a.evaluate(u);
  return {u, v, std::move(a)};
}

// ---------------------------------------------------------------------------
// Closed forms of the named special cases, transcribed literally.

enum class ClosedFormCase { bridge, fbm, mixed, bessel };

inline const char* to_string(ClosedFormCase c) {
  switch (c) {
    case ClosedFormCase::bridge: return "bridge";
    case ClosedFormCase::fbm: return "fbm";
    case ClosedFormCase::mixed: return "mixed";
    default: return "bessel";
  }
}

struct ClosedFormParams {
  double nu = 1;                          // bridge: trend 2 g_nu
  double hurst = 0.5;                     // fbm, mixed
  int n = 1;                              // bessel order
  TrendFunction g;                        // fbm, mixed, bessel
  std::optional<Interval> interval;       // replaces (0,1) / (0,1]; skips the endpoint condition
  std::optional<PickandsValue> pickands;  // H_{2H} for the fbm case
  QuadratureOptions quadrature;
};

struct ClosedFormValue {
  double u = 0;
  double prefactor = 0;  // everything except the integral
  Integral integral;
  double value = 0;
  std::string formula;
};

namespace asymptotics_detail {

inline void require_condition(const SingularFunction& h, const Interval& e, const std::string& what,
                              const QuadratureOptions& o) {
  const Integral r = integrate(h, e.lo, e.hi, o);
  if (r.status != Finiteness::finite)
    throw NotApplicable(what + " is " + to_string(r.status) + "; the supremum is not covered");
}

inline double log_pos(double v) { return std::log(std::max(v, 0.0)); }

}  // namespace asymptotics_detail

inline ClosedFormValue closed_form(ClosedFormCase which, const ClosedFormParams& prm, double u) {
  using namespace asymptotics_detail;
  if (!(u > 0)) throw DomainError("u must be positive");
  ClosedFormValue out;
  out.u = u;
  const QuadratureOptions& o = prm.quadrature;
  SingularFunction integrand;
  Interval e = Interval::open(0, 1);
  const TrendFunction g = prm.g;

  switch (which) {
    case ClosedFormCase::bridge: {
      const double nu = prm.nu;
      if (!(nu > 0.75)) throw NotApplicable("nu <= 3/4: the supremum is infinite almost surely");
      integrand = LocalVariance::power_form(1, 1, 0, "").c.times_exp(
          [nu](const Point& p) { return -trends::g_nu(nu, p); });
      out.prefactor = std::sqrt(u) * std::exp(-u / 2) / std::sqrt(2 * M_PI);
      out.formula = "sqrt(u) exp(-u/2) / sqrt(2 pi) * int e^{-g_nu}/(t(1-t))";
      break;
    }
    case ClosedFormCase::fbm: {
      const double hh = prm.hurst;
      if (!(hh > 0 && hh < 1)) throw DomainError("Hurst index must lie in (0,1)");
      e = {0, 1, true, false};
      if (!prm.interval) {
        SingularFunction cond;
        cond.pow0 = 1;
        const double p = 1 / (2 * hh) - 0.5;
        cond.log_rest = [g, p](const Point& pt) {
          const double v = g(pt);
          return p * log_pos(v) - v / 2;
        };
        require_condition(cond, e, "int g^{1/(2H)-1/2} e^{-g/2}/t", o);
      }
      const PickandsValue hv = pickands_constant(2 * hh, prm.pickands);
      const double a = (1 - hh) / (2 * hh);
      out.prefactor = hv.value * std::pow(u, a) * std::exp(-u / 2) / (std::pow(2.0, a) * std::sqrt(M_PI));
      integrand.pow0 = 1;
      integrand.log_rest = [g](const Point& p) { return -g(p) / 2; };
      out.formula = "H_{2H} u^{(1-H)/(2H)} exp(-u/2) / (2^{(1-H)/(2H)} sqrt(pi)) * int e^{-g/2}/t";
      break;
    }
    case ClosedFormCase::mixed: {
      const double hh = prm.hurst;
      if (!(hh > 0.5 && hh < 1)) throw DomainError("the mixed case needs H in (1/2,1)");
      if (!prm.interval) {
        SingularFunction cond;
        cond.pow0 = 1;
        cond.pow1 = 1;
        cond.log_rest = [g](const Point& pt) {
          const double v = g(pt);
          return 1.5 * log_pos(v) - v / 2;
        };
        require_condition(cond, e, "int g^{3/2} e^{-g/2}/(t(1-t))", o);
        for (int side = 0; side <= 1; ++side)
          if (check_A(g, side).verdict != Verdict::pass)
            throw NotApplicable("trend is not increasing toward side " + std::to_string(side));
      }
      out.prefactor = std::pow(u, 1.5) * std::exp(-u / 2) / (3 * std::sqrt(2 * M_PI));
      integrand.pow0 = 1;
      integrand.pow1 = 1;
      integrand.log_rest = [g](const Point& p) { return std::log1p(p.one_minus_t()) - g(p) / 2; };
      out.formula = "u^{3/2} exp(-u/2) / (3 sqrt(2 pi)) * int (2-t) e^{-g/2}/(t(1-t))";
      break;
    }
    case ClosedFormCase::bessel: {
      const int n = prm.n;
      if (n < 1) throw DomainError("Bessel order must be >= 1");
      e = {0, 1, true, false};
      if (!prm.interval) {
        const BesselTestResult bt = bessel_integral_test(g, n, o);
        if (bt.status != Finiteness::finite)
          throw NotApplicable("int g^{n/2} e^{-g/2}/t is " + std::string(to_string(bt.status)) +
                              ": the supremum is infinite almost surely");
      }
      out.prefactor = std::pow(2.0, 1 - n / 2.0) * std::pow(u, n / 2.0) * std::exp(-u / 2) / std::tgamma(n / 2.0);
      integrand.pow0 = 1;
      integrand.log_rest = [g](const Point& p) { return -g(p) / 2; };
      out.formula = "2^{1-n/2} u^{n/2} exp(-u/2) / Gamma(n/2) * int e^{-g/2}/t";
      break;
    }
  }
  if (prm.interval) {
    prm.interval->validate();
    e = *prm.interval;
  }
  out.integral = integrate(integrand, e.lo, e.hi, o);
  if (out.integral.status != Finiteness::finite) throw NotApplicable("closed-form integral diverges");
  out.value = out.prefactor * out.integral.value;
  return out;
}

// ---------------------------------------------------------------------------

struct CriticalValue {
  double u = 0;
  double achieved = 0;
};

// Smallest u >= u_min with approx(u) = p, by bisection on log p.
inline CriticalValue critical_value(const TailApprox& a, double p, double u_min = 4) {
  if (!(p > 0 && p < 1)) throw DomainError("probability must lie in (0,1)");
  if (!(u_min > 0)) throw DomainError("u_min must be positive");
  const double lp = std::log(p);
  const double lmax = a.log_evaluate(u_min);
  if (!(lp < lmax))
    throw DomainError("p is not below the approximation at u_min = " + asymptotics_detail::fmt(u_min) +
                      " (" + asymptotics_detail::fmt(std::exp(lmax)) + ")");
  double lo = u_min;
  double hi = 2 * u_min;
  while (a.log_evaluate(hi) > lp) {
    lo = hi;
    hi *= 2;
    if (hi > 1e8) throw NumericalFailure("no bracket for the critical value");
  }
  // the approximation must decrease across the whole bracket
  double prev = a.log_evaluate(u_min);
  const int checks = 256;
  for (int i = 1; i <= checks; ++i) {
    const double u = u_min + (hi - u_min) * i / checks;
    const double v = a.log_evaluate(u);
    if (!(v < prev))
      throw ConfigurationError("approximation is not decreasing near u = " + asymptotics_detail::fmt(u) +
                               "; use a larger u_min");
    prev = v;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (a.log_evaluate(mid) > lp) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double u = 0.5 * (lo + hi);
  return {u, a.evaluate(u)};
}

}  // namespace chisq
