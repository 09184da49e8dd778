#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "chisq/errors.hpp"

namespace chisq {

enum class KernelForm { pure_power, power_log, custom };

// K(t), regularly varying at 0 with index alpha/2, with its generalized
// inverse and the level scale q(u) = K^{-1}(u^{-1/2}).
class RegVarKernel {
 public:
  RegVarKernel() = default;

  // scale * t^{alpha/2}
  static RegVarKernel power(double alpha, double scale = 1.0) {
    check_alpha(alpha);
    RegVarKernel k;
    k.form_ = KernelForm::pure_power;
    k.alpha_ = alpha;
    k.scale_ = scale;
    if (!(scale > 0)) throw DomainError("kernel scale must be positive");
    return k;
  }

  // scale * t^{alpha/2} (ln(1/t))^beta, defined for 0 <= t < 1
  static RegVarKernel power_log(double alpha, double beta, double scale = 1.0) {
    RegVarKernel k = power(alpha, scale);
    k.form_ = KernelForm::power_log;
    k.beta_ = beta;
    return k;
  }

  static RegVarKernel custom(double alpha, std::function<double(double)> fn, std::string description) {
    check_alpha(alpha);
    RegVarKernel k;
    k.form_ = KernelForm::custom;
    k.alpha_ = alpha;
    k.fn_ = std::move(fn);
    k.description_ = std::move(description);
    return k;
  }

  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] KernelForm form() const { return form_; }
  [[nodiscard]] bool is_pure_power() const { return form_ == KernelForm::pure_power; }

  [[nodiscard]] double operator()(double t) const {
    if (t < 0 || std::isnan(t)) throw DomainError("kernel evaluated at negative argument");
    if (t == 0) return 0;
    switch (form_) {
      case KernelForm::pure_power:
        return scale_ * std::pow(t, alpha_ / 2);
      case KernelForm::power_log:
        if (t >= 1) return std::numeric_limits<double>::quiet_NaN();
        return scale_ * std::pow(t, alpha_ / 2) * std::pow(-std::log(t), beta_);
      default:
        return fn_(t);
    }
  }

  [[nodiscard]] double squared(double t) const {
    const double k = (*this)(t);
    return k * k;
  }

  // inf{t >= 0 : K(t) >= y}
  [[nodiscard]] double inverse(double y) const {
    if (!(y > 0)) throw DomainError("kernel inverse needs a positive argument");
    if (form_ == KernelForm::pure_power) return std::pow(y / scale_, 2 / alpha_);
    double hi = 1e-8;
    while (!((*this)(hi) >= y)) {
      hi *= 2;
      if (hi > 1e300 || (form_ == KernelForm::power_log && hi >= 1))
        throw ConfigurationError("kernel is not invertible near 0 at level " + std::to_string(y));
    }
    double lo = hi / 2;
    while ((*this)(lo) >= y) {
      lo /= 2;
      if (lo < 1e-300) return lo;
    }
    for (int i = 0; i < 2000 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((*this)(mid) >= y) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }

  [[nodiscard]] double q(double u) const {
    if (!(u > 0)) throw DomainError("q(u) needs u > 0");
    if (form_ == KernelForm::pure_power) return std::pow(scale_, -2 / alpha_) * std::pow(u, -1 / alpha_);
    return inverse(1 / std::sqrt(u));
  }

  // c * K
  [[nodiscard]] RegVarKernel scaled(double c) const {
    RegVarKernel k = *this;
    if (form_ == KernelForm::custom) {
      k.fn_ = [f = fn_, c](double t) { return c * f(t); };
      k.description_ = std::to_string(c) + "*(" + description_ + ")";
    } else {
      k.scale_ *= c;
    }
    return k;
  }

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (form_) {
      case KernelForm::pure_power:
        os << scale_ << "*t^" << alpha_ / 2;
        break;
      case KernelForm::power_log:
        os << scale_ << "*t^" << alpha_ / 2 << "*ln(1/t)^" << beta_;
        break;
      default:
        os << description_;
    }
    return os.str();
  }

 private:
  static void check_alpha(double alpha) {
    if (!(alpha > 0 && alpha <= 2)) throw DomainError("kernel index alpha must lie in (0,2]");
  }

  KernelForm form_ = KernelForm::pure_power;
  double alpha_ = 1;
  double beta_ = 0;
  double scale_ = 1;
  std::function<double(double)> fn_;
  std::string description_;
};

}  // namespace chisq
