#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "chisq/errors.hpp"
#include "chisq/model.hpp"

namespace chisq::catalog {

namespace detail {

// Orders (a, b) so that a is the point closer to 0.
inline std::pair<const Point*, const Point*> ordered(const Point& a, const Point& b) {
  return a.log_t <= b.log_t ? std::make_pair(&a, &b) : std::make_pair(&b, &a);
}

}  // namespace detail

// B(t)/sqrt(t(1-t)) for the standard Brownian bridge; K^2(t) = t, C = 1/(2t(1-t)).
inline Component bridge() {
  Component c;
  c.kernel = RegVarKernel::power(1);
  c.c = LocalVariance::power_form(1, 1, -M_LN2, "1/(2t(1-t))");
  c.correlation.r = [](double s, double t) {
    if (s > t) std::swap(s, t);
    return std::sqrt(s * (1 - t) / (t * (1 - s)));
  };
  c.correlation.precise_one_minus = [](const Point& a, const Point& b) {
    const auto [s, t] = detail::ordered(a, b);
    return -std::expm1(0.5 * (s->log_t + t->log_1mt - t->log_t - s->log_1mt));
  };
  c.process = ProcessKind::bridge_normalized;
  c.id = "bridge";
  return c;
}

// W(t)/sqrt(t); K^2(t) = t, C = 1/(2t).
inline Component bm_normalized() {
  Component c;
  c.kernel = RegVarKernel::power(1);
  c.c = LocalVariance::power_form(1, 0, -M_LN2, "1/(2t)");
  c.correlation.r = [](double s, double t) {
    if (s > t) std::swap(s, t);
    return std::sqrt(s / t);
  };
  c.correlation.precise_one_minus = [](const Point& a, const Point& b) {
    const auto [s, t] = detail::ordered(a, b);
    return -std::expm1(0.5 * (s->log_t - t->log_t));
  };
  c.process = ProcessKind::bm_normalized;
  c.id = "bm";
  return c;
}

// B_H(t)/t^H; K^2(t) = t^{2H}, C = 1/(2t^{2H}).
inline Component fbm_normalized(double h) {
  if (!(h > 0 && h < 1)) throw DomainError("Hurst index must lie in (0,1)");
  Component c;
  c.kernel = RegVarKernel::power(2 * h);
  c.c = LocalVariance::power_form(2 * h, 0, -M_LN2, "1/(2t^{2H})");
  auto one_minus = [h](double lr) {
    // lr = ln(s/t) <= 0
    const double one_minus_rho = -std::expm1(lr);
    const double one_minus_rho_h = -std::expm1(h * lr);
    return (std::pow(one_minus_rho, 2 * h) - one_minus_rho_h * one_minus_rho_h) / (2 * std::exp(h * lr));
  };
  c.correlation.r = [one_minus](double s, double t) {
    if (s > t) std::swap(s, t);
    return 1 - one_minus(std::log(s / t));
  };
  c.correlation.precise_one_minus = [one_minus](const Point& a, const Point& b) {
    const auto [s, t] = detail::ordered(a, b);
    return one_minus(s->log_t - t->log_t);
  };
  c.process = ProcessKind::fbm_normalized;
  c.parameter = h;
  c.id = "fbm:" + std::to_string(h);
  return c;
}

// Stationary OU with r(h) = exp(-lambda |h|); K^2(t) = lambda t, C = 1.
inline Component ou(double lambda) {
  if (!(lambda > 0)) throw DomainError("OU rate must be positive");
  Component c;
  c.kernel = RegVarKernel::power(1, std::sqrt(lambda));
  c.c = LocalVariance::power_form(0, 0, 0, "1");
  c.correlation.r = [lambda](double s, double t) { return std::exp(-lambda * std::abs(t - s)); };
  c.correlation.precise_one_minus = [lambda](const Point& a, const Point& b) {
    return -std::expm1(-lambda * std::abs(separation(a, b)));
  };
  c.stationary_corr = [lambda](double lag) { return std::exp(-lambda * std::abs(lag)); };
  c.process = ProcessKind::ou;
  c.parameter = lambda;
  c.id = "ou:" + std::to_string(lambda);
  return c;
}

// A stationary unit-variance process with correlation r(lag); kernel and C
// must be supplied by the caller since they are not derivable from r alone.
inline Component stationary(std::function<double(double)> r, RegVarKernel kernel, std::string id) {
  Component c;
  c.kernel = std::move(kernel);
  c.c = LocalVariance::power_form(0, 0, 0, "1");
  c.correlation.r = [r](double s, double t) { return r(t - s); };
  c.stationary_corr = std::move(r);
  c.process = ProcessKind::stationary;
  c.id = std::move(id);
  return c;
}

inline ChiSquareModel bridge_model(Interval e = Interval::open(0, 1)) {
  auto m = ChiSquareModel::homogeneous(bridge(), {1.0}, e);
  m.name = "bridge";
  return m;
}

// Squared Bessel process of order n normalized by t.
inline ChiSquareModel bessel_model(int n, Interval e = {0, 1, true, false}) {
  if (n < 1) throw DomainError("Bessel order must be >= 1");
  auto m = ChiSquareModel::homogeneous(bm_normalized(), std::vector<double>(n, 1.0), e);
  m.name = "bessel:" + std::to_string(n);
  return m;
}

inline ChiSquareModel fbm_model(double h, Interval e = {0, 1, true, false}) {
  auto m = ChiSquareModel::homogeneous(fbm_normalized(h), {1.0}, e);
  m.name = "fbm:" + std::to_string(h);
  return m;
}

inline ChiSquareModel ou_model(double lambda, int n = 1, Interval e = Interval::closed(0, 1)) {
  auto m = ChiSquareModel::homogeneous(ou(lambda), std::vector<double>(n, 1.0), e);
  m.name = "ou:" + std::to_string(lambda);
  return m;
}

// B^2/(t(1-t)) + W^2/t + B_H^2/t^{2H} with H in (1/2,1): leading pair with
// K^2 = t and a trailing fBm component with K_3^2 = 2^{2H-1} t^{2H}.
inline ChiSquareModel bridge_bm_fbm_model(double h, Interval e = Interval::open(0, 1)) {
  if (!(h > 0.5 && h < 1)) throw DomainError("the mixed model needs H in (1/2,1)");
  Component third = fbm_normalized(h);
  third.kernel = RegVarKernel::power(2 * h, std::sqrt(std::pow(2.0, 2 * h - 1)));
  third.c = LocalVariance::power_form(2 * h, 0, -2 * h * M_LN2, "1/(2^{2H}t^{2H})");
  auto m = ChiSquareModel::heterogeneous({bridge(), bm_normalized(), third}, 2, e);
  m.name = "mixed:" + std::to_string(h);
  return m;
}

}  // namespace chisq::catalog
