#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "chisq/asymptotics.hpp"
#include "chisq/errors.hpp"
#include "chisq/model.hpp"
#include "chisq/point.hpp"

namespace chisq {

namespace gof_detail {

inline double xlogx_ratio(double s, double log_s, double log_t) { return s == 0 ? 0.0 : s * (log_s - log_t); }

}  // namespace gof_detail

// Bernoulli Kullback-Leibler divergence, 0 ln 0 = 0.
inline double divergence_K(double s, double t) {
  if (!(s >= 0 && s <= 1)) throw DomainError("K(s,t) needs s in [0,1]");
  if (!(t > 0 && t < 1)) throw DomainError("K(s,t) needs t in (0,1)");
  return gof_detail::xlogx_ratio(s, std::log(s), std::log(t)) +
         gof_detail::xlogx_ratio(1 - s, std::log1p(-s), std::log1p(-t));
}

inline double trend_g_nu(double nu, double t) {
  if (!(t > 0 && t < 1)) throw DomainError("g_nu(t) needs t in (0,1)");
  return trends::g_nu(nu, Point::at(t));
}

class Sample {
 public:
  Sample() = default;
  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("sample is empty");
    for (double v : values_)
      if (!(v > 0 && v < 1)) throw DomainError("sample values must lie strictly inside (0,1)");
    sorted_ = values_;
    std::sort(sorted_.begin(), sorted_.end());
  }

  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }
  [[nodiscard]] std::size_t n() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
};

// One value per line, or one column of a comma separated file. A
// non-numeric first row is taken as a header; `column` may name it.
inline Sample read_sample(std::istream& in, const std::string& column = "") {
  std::vector<double> v;
  std::string line;
  std::optional<std::size_t> col;
  bool first = true;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r\"");
      const auto e = cell.find_last_not_of(" \t\r\"");
      out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto cells = split(line);
    if (first) {
      first = false;
      char* end = nullptr;
      const std::string& c0 = cells.empty() ? line : cells[0];
      std::strtod(c0.c_str(), &end);
      const bool header = end == c0.c_str() || *end != '\0';
      if (header) {
        if (column.empty()) {
          col = 0;
        } else {
          for (std::size_t i = 0; i < cells.size(); ++i)
            if (cells[i] == column) col = i;
          if (!col) throw ParseError("column '" + column + "' not found in header", lineno, "line");
        }
        continue;
      }
      if (!column.empty()) {
        char* e2 = nullptr;
        const long idx = std::strtol(column.c_str(), &e2, 10);
        if (*e2 != '\0' || idx < 0) throw ParseError("no header row; column must be a 0-based index", lineno, "line");
        col = static_cast<std::size_t>(idx);
      } else {
        col = 0;
      }
    }
    if (*col >= cells.size()) throw ParseError("sample input: missing column", lineno, "line");
    char* end = nullptr;
    const double x = std::strtod(cells[*col].c_str(), &end);
    if (end == cells[*col].c_str() || *end != '\0')
      throw ParseError("sample input: not a number '" + cells[*col] + "'", lineno, "line");
    v.push_back(x);
  }
  return Sample(std::move(v));
}

namespace gof_detail {

// The inner function n K(s,t) - g_nu(t) and its derivative, in the logit
// coordinate y = ln(t/(1-t)) so both ends keep full precision.
struct Inner {
  double n;
  double nu;
  double s;
  double log_s;
  double log_1ms;

  static double log_sigmoid(double y) { return y > 0 ? -std::log1p(std::exp(-y)) : y - std::log1p(std::exp(y)); }

  [[nodiscard]] Point point(double y) const {
    Point p;
    p.t = 1 / (1 + std::exp(-y));
    p.log_t = log_sigmoid(y);
    p.log_1mt = log_sigmoid(-y);
    return p;
  }

  [[nodiscard]] double value(double y) const {
    const Point p = point(y);
    return n * (xlogx_ratio(s, log_s, p.log_t) + xlogx_ratio(1 - s, log_1ms, p.log_1mt)) - trends::g_nu(nu, p);
  }

  [[nodiscard]] double slope(double y) const {
    const Point p = point(y);
    const double tc = std::exp(p.log_1mt);
    const double diff = s > 0.5 ? (1 - s) - tc : p.t - s;
    const double w = 1 - 2 * M_LN2 - p.log_t - p.log_1mt;
    const double c = std::log(w);
    const double gprime = (1 + c * c + 2 * nu * c) / (1 + c * c) * std::tanh(y / 2) / w;
    return n * diff - gprime;
  }
};

inline double logit(double t) { return std::log(t) - std::log1p(-t); }

constexpr double kYEnd = 700;
constexpr double kScanStep = 0.25;

// max of the inner function over the logit interval [ya, yb]
inline double interval_max(const Inner& f, double ya, double yb) {
  double best = std::max(f.value(ya), f.value(yb));
  const auto m = static_cast<std::size_t>(std::max(4.0, std::ceil((yb - ya) / kScanStep)));
  double y0 = ya;
  double d0 = f.slope(ya);
  for (std::size_t i = 1; i <= m; ++i) {
    const double y1 = i == m ? yb : ya + (yb - ya) * static_cast<double>(i) / static_cast<double>(m);
    const double d1 = f.slope(y1);
    best = std::max(best, f.value(y1));
    if (d0 > 0 && d1 < 0) {
      boost::uintmax_t iters = 100;
      auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(a)); };
      const auto r = boost::math::tools::toms748_solve([&](double y) { return f.slope(y); }, y0, y1, d0, d1, tol, iters);
      best = std::max(best, f.value(0.5 * (r.first + r.second)));
    }
    y0 = y1;
    d0 = d1;
  }
  return best;
}

}  // namespace gof_detail

// sup over t in (0,1) of n K(G_n(t), t) - g_nu(t). Each constancy interval of
// the empirical CDF is scored at both one-sided endpoint limits and at every
// interior critical point; the limits at t -> 0 and t -> 1 are -infinity.
inline double compute_L(const Sample& sample, double nu) {
  const auto& x = sample.sorted();
  const std::size_t n = x.size();
  if (n == 0) throw DomainError("sample is empty");
  const double nn = static_cast<double>(n);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / nn;
    const double ya = i == 0 ? -gof_detail::kYEnd : gof_detail::logit(x[i - 1]);
    const double yb = i == n ? gof_detail::kYEnd : gof_detail::logit(x[i]);
    if (yb < ya) continue;
    const gof_detail::Inner f{nn, nu, s, std::log(s), std::log1p(-s)};
    best = std::max(best, gof_detail::interval_max(f, ya, yb));
  }
  return best;
}

// Asymptotic tail P(L_E > u) of the limit variable, with
// 2 L_n -> L_E in distribution.
class GofTail {
 public:
  explicit GofTail(double nu, const QuadratureOptions& q = {}) : nu_(nu) {
    if (!(nu > 0.75))
      throw NotApplicable("nu <= 3/4: the limit statistic is infinite almost surely, no p-value exists");
    ClosedFormParams prm;
    prm.nu = nu;
    prm.quadrature = q;
    integral_ = closed_form(ClosedFormCase::bridge, prm, 1.0).integral;
  }

  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] const Integral& integral() const { return integral_; }

  // sqrt(u) e^{-u/2} / sqrt(2 pi) * I, uncapped
  [[nodiscard]] double limit_tail(double u) const {
    if (!(u > 0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(u) * std::exp(-u / 2) / std::sqrt(2 * M_PI) * integral_.value;
  }

  // Asymptotic p-value of an observed L_n, evaluated at u = 2 L_n, capped at 1.
  // The formula increases on (0,1), so levels below 1 are clamped to 1 to keep p monotone.
  [[nodiscard]] double p_value(double l_obs) const { return std::min(1.0, limit_tail(std::max(2 * l_obs, 1.0))); }

 private:
  double nu_;
  Integral integral_;
};

inline double p_value(double l_obs, double nu) { return GofTail(nu).p_value(l_obs); }

struct GofResult {
  double L = 0;
  double nu = 1;
  double p_value = 1;
  std::size_t n = 0;
  std::string method = "asymptotic";
};

inline GofResult goodness_of_fit(const Sample& s, double nu) {
  GofTail tail(nu);
  GofResult r;
  r.L = compute_L(s, nu);
  r.nu = nu;
  r.n = s.n();
  r.p_value = tail.p_value(r.L);
  return r;
}

}  // namespace chisq
