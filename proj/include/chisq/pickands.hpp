#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "chisq/asymptotics.hpp"
#include "chisq/errors.hpp"
#include "chisq/montecarlo.hpp"
#include "chisq/rng.hpp"
#include "chisq/simulate.hpp"

namespace chisq {

enum class PickandsMethod {
  // E[ max_t e^{Z(t)} / int e^{Z(t)} dt ] over two-sided t, Z = sqrt2 B_{alpha/2}(t) - |t|^alpha
  dieker_yakir,
  // T^{-1} E exp(sup_{[0,T]} Z)
  truncated
};

inline const char* to_string(PickandsMethod m) {
  return m == PickandsMethod::dieker_yakir ? "dieker-yakir" : "truncated";
}

struct PickandsLevel {
  double mesh = 0;
  double value = 0;
  double std_error = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct PickandsEstimate {
  double alpha = 1;
  double horizon = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  PickandsMethod method = PickandsMethod::dieker_yakir;
  std::vector<PickandsLevel> levels;  // meshes m, m/2, m/4

  // The finest mesh, which carries the least discretization bias.
  [[nodiscard]] const PickandsLevel& primary() const { return levels.back(); }

  [[nodiscard]] PickandsValue as_value() const {
    const auto& p = primary();
    return {p.value, p.ci_low, p.ci_high, false,
            std::string("Monte Carlo ") + to_string(method) + " estimate, T=" + std::to_string(horizon) +
                ", mesh=" + std::to_string(p.mesh) + ", paths=" + std::to_string(n_paths)};
  }
};

struct PickandsOptions {
  PickandsMethod method = PickandsMethod::dieker_yakir;
  int threads = 0;
  std::size_t block = 256;
};

namespace pickands_detail {

// Path of B_H on the uniform grid {-T + i h}, i = 0..2N, pinned at B_H(0)=0.
class TwoSided {
 public:
  TwoSided(double alpha, double h, std::size_t half) : alpha_(alpha), h_(h), half_(half) {
    if (alpha != 1 && alpha != 2) circ_ = std::make_shared<CirculantFgn>(2 * half, alpha / 2);
  }

  void draw(Rng& rng, std::vector<double>& x, std::vector<double>& spare, bool& have_spare) const {
    const std::size_t n = 2 * half_ + 1;
    x.assign(n, 0.0);
    if (alpha_ == 2) {
      const double z = rng.normal();
      for (std::size_t i = 0; i < n; ++i) x[i] = (static_cast<double>(i) - static_cast<double>(half_)) * h_ * z;
      return;
    }
    if (alpha_ == 1) {
      const double sd = std::sqrt(h_);
      for (std::size_t i = half_ + 1; i < n; ++i) x[i] = x[i - 1] + sd * rng.normal();
      for (std::size_t i = half_; i-- > 0;) x[i] = x[i + 1] + sd * rng.normal();
      return;
    }
    std::vector<double> inc;
    if (have_spare) {
      inc.swap(spare);
      have_spare = false;
    } else {
      circ_->draw(rng, inc, spare);
      have_spare = true;
    }
    const double sc = std::pow(h_, alpha_ / 2);
    double s = 0;
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      s += sc * inc[i - 1];
      b[i] = s;
    }
    const double mid = b[half_];
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] - mid;
  }

 private:
  double alpha_;
  double h_;
  std::size_t half_;
  std::shared_ptr<CirculantFgn> circ_;
};

}  // namespace pickands_detail

// Estimates H_alpha at meshes m, m/2, m/4 from common paths on the m/4 grid.
inline PickandsEstimate estimate_pickands(double alpha, double horizon, double mesh, std::size_t n_paths,
                                          std::uint64_t seed, const PickandsOptions& opt = {}) {
  if (!(alpha > 0 && alpha <= 2)) throw DomainError("alpha must lie in (0,2]");
  if (!(horizon >= 10)) throw DomainError("horizon T must be at least 10");
  if (!(mesh > 0 && mesh <= 0.01 * horizon)) throw DomainError("mesh must be positive and at most T/100");
  if (n_paths < 2) throw DomainError("need at least two paths");
  const double h = mesh / 4;
  const auto half = static_cast<std::size_t>(std::llround(horizon / h));
  const pickands_detail::TwoSided gen(alpha, h, half);
  const std::size_t n = 2 * half + 1;
  std::vector<double> drift(n);
  for (std::size_t i = 0; i < n; ++i)
    drift[i] = std::pow(std::abs((static_cast<double>(i) - static_cast<double>(half)) * h), alpha);

  const std::size_t blocks = (n_paths + opt.block - 1) / opt.block;
  // per block: sum and sum of squares for each of the three meshes
  std::vector<std::array<double, 6>> acc(blocks);
  const int strides[3] = {4, 2, 1};
  const bool dy = opt.method == PickandsMethod::dieker_yakir;

  parallel_blocks(blocks, opt.threads > 0 ? opt.threads : default_threads(), [&](std::size_t blk) {
    Rng rng(seed, 0, blk);
    std::vector<double> x, spare;
    bool have_spare = false;
    std::array<double, 6> a{};
    const std::size_t rows = std::min(opt.block, n_paths - blk * opt.block);
    for (std::size_t r = 0; r < rows; ++r) {
      gen.draw(rng, x, spare, have_spare);
      for (std::size_t i = 0; i < n; ++i) x[i] = M_SQRT2 * x[i] - drift[i];
      for (int l = 0; l < 3; ++l) {
        const std::size_t s = strides[l];
        const double step = h * static_cast<double>(s);
        double v = 0;
        if (dy) {
          double mx = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < n; i += s) mx = std::max(mx, x[i]);
          double sum = 0;
          for (std::size_t i = 0; i < n; i += s) sum += std::exp(x[i] - mx);
          v = 1 / (step * sum);
        } else {
          double mx = -std::numeric_limits<double>::infinity();
          for (std::size_t i = half; i < n; i += s) mx = std::max(mx, x[i]);
          v = std::exp(mx) / horizon;
        }
        a[2 * l] += v;
        a[2 * l + 1] += v * v;
      }
    }
    acc[blk] = a;
  });

  PickandsEstimate est;
  est.alpha = alpha;
  est.horizon = horizon;
  est.n_paths = n_paths;
  est.seed = seed;
  est.method = opt.method;
  const double nn = static_cast<double>(n_paths);
  for (int l = 0; l < 3; ++l) {
    double s = 0, s2 = 0;
    for (const auto& a : acc) {
      s += a[2 * l];
      s2 += a[2 * l + 1];
    }
    PickandsLevel lv;
    lv.mesh = h * strides[l];
    lv.value = s / nn;
    const double var = std::max(s2 / nn - lv.value * lv.value, 0.0) * nn / (nn - 1);
    lv.std_error = std::sqrt(var / nn);
    lv.ci_low = lv.value - kZ95 * lv.std_error;
    lv.ci_high = lv.value + kZ95 * lv.std_error;
    est.levels.push_back(lv);
  }
  return est;
}

}  // namespace chisq
