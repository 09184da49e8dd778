#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "chisq/errors.hpp"
#include "chisq/model.hpp"

namespace chisq {

enum class GridKind { uniform, log_end, f_uniform, custom };

inline const char* to_string(GridKind k) {
  switch (k) {
    case GridKind::uniform: return "uniform";
    case GridKind::log_end: return "log-end";
    case GridKind::f_uniform: return "f-uniform";
    default: return "custom";
  }
}

class TimeGrid {
 public:
  TimeGrid() = default;

  // m equal steps on [lo, hi]
  static TimeGrid uniform(double lo, double hi, std::size_t m) {
    check(lo, hi, m);
    TimeGrid g;
    g.kind_ = GridKind::uniform;
    g.lo_ = lo;
    g.hi_ = hi;
    g.step_ = (hi - lo) / static_cast<double>(m);
    for (std::size_t i = 0; i <= m; ++i) g.points_.push_back(i == m ? hi : lo + g.step_ * static_cast<double>(i));
    return g;
  }

  // m steps, geometric in the distance to `side`
  static TimeGrid log_end(double lo, double hi, int side, std::size_t m) {
    check(lo, hi, m);
    const double a = side == 0 ? lo : 1 - hi;
    const double b = side == 0 ? hi : 1 - lo;
    if (!(a > 0)) throw DomainError("log-end grid needs a positive distance to the end");
    TimeGrid g;
    g.kind_ = GridKind::log_end;
    g.side_ = side;
    g.lo_ = lo;
    g.hi_ = hi;
    g.step_ = std::log(b / a) / static_cast<double>(m);
    std::vector<double> dist(m + 1);
    for (std::size_t i = 0; i <= m; ++i) dist[i] = i == 0 ? a : (i == m ? b : a * std::exp(g.step_ * i));
    for (std::size_t i = 0; i <= m; ++i) g.points_.push_back(side == 0 ? dist[i] : 1 - dist[m - i]);
    g.points_.front() = lo;
    g.points_.back() = hi;
    return g;
  }

  // Equal steps of at most d in f(t) = int_{1/2}^t C^{1/alpha}.
  static TimeGrid f_uniform(std::shared_ptr<const FTransform> f, double lo, double hi, double d) {
    if (!(d > 0)) throw DomainError("f-uniform grid needs d > 0");
    if (!(lo < hi && lo >= 0 && hi <= 1)) throw DomainError("grid needs 0 <= lo < hi <= 1");
    TimeGrid g;
    g.kind_ = GridKind::f_uniform;
    g.f_ = std::move(f);
    g.lo_ = lo;
    g.hi_ = hi;
    g.f_lo_ = g.f_at(lo);
    const double f_hi = g.f_at(hi);
    if (!std::isfinite(g.f_lo_) || !std::isfinite(f_hi))
      throw DomainError("f-uniform grid needs an interval with finite f at both ends");
    const auto m = static_cast<std::size_t>(std::ceil((f_hi - g.f_lo_) / d - 1e-9));
    g.step_ = (f_hi - g.f_lo_) / static_cast<double>(std::max<std::size_t>(m, 1));
    g.points_.push_back(lo);
    for (std::size_t i = 1; i < m; ++i) g.points_.push_back(g.invert(g.f_lo_ + g.step_ * i, g.points_.back()));
    g.points_.push_back(hi);
    return g;
  }

  static TimeGrid custom(std::vector<double> pts) {
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (!(pts[i] > pts[i - 1])) throw DomainError("grid points must be strictly increasing");
    if (pts.empty()) throw DomainError("grid must be nonempty");
    TimeGrid g;
    g.kind_ = GridKind::custom;
    g.lo_ = pts.front();
    g.hi_ = pts.back();
    g.points_ = std::move(pts);
    return g;
  }

  // Inserts one point between each pair of neighbours; the old points keep
  // their positions (even indices of the result).
  [[nodiscard]] TimeGrid refined() const {
    TimeGrid g = *this;
    g.step_ = step_ / 2;
    g.points_.clear();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const double a = points_[i];
      const double b = points_[i + 1];
      double mid = 0;
      switch (kind_) {
        case GridKind::f_uniform:
          mid = invert(f_lo_ + step_ * (static_cast<double>(i) + 0.5), a, b);
          break;
        case GridKind::log_end:
          mid = side_ == 0 ? std::sqrt(a * b) : 1 - std::sqrt((1 - a) * (1 - b));
          break;
        default:
          mid = 0.5 * (a + b);
      }
      g.points_.push_back(a);
      g.points_.push_back(mid);
    }
    g.points_.push_back(points_.back());
    return g;
  }

  [[nodiscard]] const std::vector<double>& points() const { return points_; }
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] GridKind kind() const { return kind_; }
  [[nodiscard]] double step() const { return step_; }
  [[nodiscard]] double lo() const { return lo_; }
  [[nodiscard]] double hi() const { return hi_; }

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind_) << "[" << lo_ << "," << hi_ << "] points=" << points_.size();
    if (kind_ == GridKind::f_uniform) os << " df=" << step_;
    if (kind_ == GridKind::uniform) os << " h=" << step_;
    if (kind_ == GridKind::log_end) os << " side=" << side_ << " log-step=" << step_;
    return os.str();
  }

  [[nodiscard]] double f_at(double t) const {
    if (t <= 0) return f_->limit(0).value;
    if (t >= 1) return f_->limit(1).value;
    return (*f_)(t);
  }

 private:
  static void check(double lo, double hi, std::size_t m) {
    if (!(lo < hi)) throw DomainError("grid needs lo < hi");
    if (m < 1) throw DomainError("grid needs at least one step");
  }

  [[nodiscard]] double invert(double target, double a, double b = -1) const {
    if (b < 0) b = hi_;
    auto fn = [&](double t) { return f_at(t) - target; };
    double fa = fn(a);
    double fb = fn(b);
    if (fa >= 0) return a;
    if (fb <= 0) return b;
    return solve_bracketed(fn, a, b);
  }

  GridKind kind_ = GridKind::custom;
  std::vector<double> points_;
  double lo_ = 0;
  double hi_ = 1;
  double step_ = 0;
  int side_ = 0;
  double f_lo_ = 0;
  std::shared_ptr<const FTransform> f_;
};

}  // namespace chisq
