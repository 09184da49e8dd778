#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "chisq/errors.hpp"
#include "chisq/grid.hpp"
#include "chisq/model.hpp"
#include "chisq/rng.hpp"

namespace chisq {

using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PathBatch {
  TimeGrid grid;
  PathMatrix values;  // paths x grid points
  std::string process;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] std::size_t paths() const { return static_cast<std::size_t>(values.rows()); }
};

// Draws blocks of paths on a fixed grid. Each block is filled from its own
// Rng, so a block's content depends only on (seed, stream, block index).
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] const std::vector<double>& points() const { return t_; }

 protected:
  explicit Sampler(std::vector<double> t) : t_(std::move(t)) {}
  std::vector<double> t_;
};

namespace simulate_detail {

inline void fill_normal(Rng& rng, Eigen::Ref<PathMatrix> z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
}

// W on the grid, starting from W(0) = 0 (t_0 may be 0).
inline void brownian(Rng& rng, const std::vector<double>& t, Eigen::Ref<PathMatrix> out) {
  const auto m = static_cast<Eigen::Index>(t.size());
  std::vector<double> sd(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) sd[j] = std::sqrt(j == 0 ? t[0] : t[j] - t[j - 1]);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    double w = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      w += sd[j] * rng.normal();
      out(i, j) = w;
    }
  }
}

// Factor A with A A^T = Sigma via pivoted LDL^T; semidefinite matrices are
// accepted with zero pivots, clearly indefinite ones rejected.
inline Eigen::MatrixXd factor(const Eigen::MatrixXd& sigma, std::string& log) {
  const double scale = sigma.diagonal().cwiseAbs().maxCoeff();
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::MatrixXd s = sigma;
    if (attempt == 1) {
      s.diagonal().array() += 1e-12 * std::max(scale, 1.0);
      log += "regularized with +1e-12 I; ";
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success) continue;
    Eigen::VectorXd d = ldlt.vectorD();
    if (d.minCoeff() < -1e-10 * std::max(scale, 1.0)) continue;
    d = d.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd l = ldlt.matrixL();
    Eigen::MatrixXd a = ldlt.transpositionsP().transpose() * (l * d.asDiagonal());
    return a;
  }
  throw NumericalFailure("covariance matrix is not positive semidefinite on this grid; thin the grid");
}

}  // namespace simulate_detail

// Standard Brownian motion W(t).
class BMSampler : public Sampler {
 public:
  explicit BMSampler(const TimeGrid& g) : Sampler(g.points()) {
    if (t_.front() < 0) throw DomainError("Brownian motion grid must be nonnegative");
  }
  void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const override { simulate_detail::brownian(rng, t_, out); }
  [[nodiscard]] std::string name() const override { return "bm"; }
};

// W(t)/sqrt(t) for t > 0.
class BMNormalizedSampler : public Sampler {
 public:
  explicit BMNormalizedSampler(const TimeGrid& g) : Sampler(g.points()) {
    if (!(t_.front() > 0)) throw DomainError("normalized Brownian motion needs t > 0");
    for (double t : t_) inv_sd_.push_back(1 / std::sqrt(t));
  }
  void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const override {
    simulate_detail::brownian(rng, t_, out);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) *= inv_sd_[j];
  }
  [[nodiscard]] std::string name() const override { return "bm-normalized"; }

 private:
  std::vector<double> inv_sd_;
};

// B(t) = W(t) - t W(1), optionally divided by sqrt(t(1-t)).
class BridgeSampler : public Sampler {
 public:
  BridgeSampler(const TimeGrid& g, bool normalized) : Sampler(g.points()), normalized_(normalized) {
    if (!(t_.front() >= 0 && t_.back() <= 1)) throw DomainError("bridge grid must lie in [0,1]");
    if (normalized && !(t_.front() > 0 && t_.back() < 1))
      throw DomainError("normalized bridge grid must lie strictly inside (0,1)");
    ext_ = t_;
    if (ext_.back() < 1) ext_.push_back(1);
  }
  void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const override {
    PathMatrix w(out.rows(), static_cast<Eigen::Index>(ext_.size()));
    simulate_detail::brownian(rng, ext_, w);
    const Eigen::Index last = w.cols() - 1;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double w1 = w(i, last);
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double t = t_[j];
        double b = w(i, j) - t * w1;
        if (normalized_) b /= std::sqrt(t * (1 - t));
        out(i, j) = b;
      }
    }
  }
  [[nodiscard]] std::string name() const override { return normalized_ ? "bridge-normalized" : "bridge"; }

 private:
  bool normalized_;
  std::vector<double> ext_;
};

// Exact Gaussian vector with a dense covariance, factorized once per grid.
class DenseSampler : public Sampler {
 public:
  DenseSampler(const TimeGrid& g, const std::function<double(double, double)>& cov, std::string name)
      : Sampler(g.points()), name_(std::move(name)) {
    const auto m = static_cast<Eigen::Index>(t_.size());
    Eigen::MatrixXd s(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) s(i, j) = s(j, i) = cov(t_[i], t_[j]);
    a_ = std::make_shared<Eigen::MatrixXd>(simulate_detail::factor(s, log_));
  }
  void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const override {
    PathMatrix z(out.rows(), out.cols());
    simulate_detail::fill_normal(rng, z);
    out.noalias() = z * a_->transpose();
  }
  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] const std::string& log() const { return log_; }

 private:
  std::string name_;
  std::string log_;
  std::shared_ptr<Eigen::MatrixXd> a_;
};

// Fractional Gaussian noise on a uniform grid by circulant embedding
// (Davies-Harte). One complex FFT yields two independent paths.
class CirculantFgn {
 public:
  CirculantFgn(std::size_t n, double hurst) : n_(n) {
    std::size_t half = 1;
    while (half < n) half <<= 1;
    m_ = 2 * half;
    const double h2 = 2 * hurst;
    auto gamma = [h2](double k) {
      return 0.5 * (std::pow(std::abs(k + 1), h2) - 2 * std::pow(std::abs(k), h2) + std::pow(std::abs(k - 1), h2));
    };
    std::vector<std::complex<double>> row(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      const double lag = k <= half ? static_cast<double>(k) : static_cast<double>(m_ - k);
      row[k] = gamma(lag);
    }
    std::vector<std::complex<double>> lam;
    fft_.fwd(lam, row);
    sqrt_lam_.resize(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      const double v = lam[k].real();
      if (v < -1e-9) throw NumericalFailure("circulant embedding has a negative eigenvalue");
      sqrt_lam_[k] = std::sqrt(std::max(v, 0.0) / static_cast<double>(m_));
    }
  }

  // Two independent unit-step fGn sequences of length n.
  void draw(Rng& rng, std::vector<double>& a, std::vector<double>& b) const {
    std::vector<std::complex<double>> w(m_);
    for (std::size_t k = 0; k < m_; ++k) w[k] = sqrt_lam_[k] * std::complex<double>(rng.normal(), rng.normal());
    std::vector<std::complex<double>> x;
    fft_.fwd(x, w);
    a.resize(n_);
    b.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      a[k] = x[k].real();
      b[k] = x[k].imag();
    }
  }

 private:
  std::size_t n_;
  std::size_t m_ = 0;
  std::vector<double> sqrt_lam_;
  mutable Eigen::FFT<double> fft_;
};

// B_H(t), optionally divided by t^H. Uniform grids starting at 0 with more
// than `dense_limit` points use circulant embedding.
class FBMSampler : public Sampler {
 public:
  FBMSampler(const TimeGrid& g, double hurst, bool normalized, std::size_t dense_limit = 8192)
      : Sampler(g.points()), hurst_(hurst), normalized_(normalized) {
    if (!(hurst > 0 && hurst < 1)) throw DomainError("Hurst index must lie in (0,1)");
    if (t_.front() < 0) throw DomainError("fBm grid must be nonnegative");
    if (normalized && !(t_.front() > 0)) throw DomainError("normalized fBm needs t > 0");
    const bool uniform0 = g.kind() == GridKind::uniform && t_.front() == 0;
    if (t_.size() > dense_limit && uniform0) {
      step_ = g.step();
      circulant_ = std::make_shared<CirculantFgn>(t_.size() - 1, hurst);
    } else {
      if (t_.size() > dense_limit)
        throw DomainError("dense fBm sampling is limited to " + std::to_string(dense_limit) + " points");
      const double h2 = 2 * hurst;
      dense_ = std::make_shared<DenseSampler>(
          g,
          [h2](double s, double t) {
            return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
          },
          "fbm");
    }
    for (double t : t_) inv_sd_.push_back(normalized ? std::pow(t, -hurst) : 1.0);
  }

  void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const override {
    if (dense_) {
      dense_->fill(rng, out);
    } else {
      const double sc = std::pow(step_, hurst_);
      std::vector<double> a, b;
      for (Eigen::Index i = 0; i < out.rows(); i += 2) {
        circulant_->draw(rng, a, b);
        cumulate(out, i, a, sc);
        if (i + 1 < out.rows()) cumulate(out, i + 1, b, sc);
      }
    }
    if (normalized_)
      for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) *= inv_sd_[j];
  }
  [[nodiscard]] std::string name() const override {
    return (normalized_ ? "fbm-normalized:" : "fbm:") + std::to_string(hurst_);
  }

 private:
  static void cumulate(Eigen::Ref<PathMatrix> out, Eigen::Index row, const std::vector<double>& inc, double sc) {
    double s = 0;
    out(row, 0) = 0;
    for (Eigen::Index j = 1; j < out.cols(); ++j) {
      s += sc * inc[j - 1];
      out(row, j) = s;
    }
  }

  double hurst_;
  bool normalized_;
  double step_ = 0;
  std::vector<double> inv_sd_;
  std::shared_ptr<DenseSampler> dense_;
  std::shared_ptr<CirculantFgn> circulant_;
};

// Stationary OU with r(h) = exp(-lambda |h|), exact AR(1) recursion.
class OUSampler : public Sampler {
 public:
  OUSampler(const TimeGrid& g, double lambda) : Sampler(g.points()), lambda_(lambda) {
    for (std::size_t j = 1; j < t_.size(); ++j) {
      const double rho = std::exp(-lambda * (t_[j] - t_[j - 1]));
      rho_.push_back(rho);
      sd_.push_back(std::sqrt(-std::expm1(-2 * lambda * (t_[j] - t_[j - 1]))));
    }
  }
  void fill(Rng& rng, Eigen::Ref<PathMatrix> out) const override {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double x = rng.normal();
      out(i, 0) = x;
      for (Eigen::Index j = 1; j < out.cols(); ++j) {
        x = rho_[j - 1] * x + sd_[j - 1] * rng.normal();
        out(i, j) = x;
      }
    }
  }
  [[nodiscard]] std::string name() const override { return "ou:" + std::to_string(lambda_); }

 private:
  double lambda_;
  std::vector<double> rho_;
  std::vector<double> sd_;
};

// Sampler for one model component on a grid.
inline std::shared_ptr<Sampler> make_sampler(const Component& c, const TimeGrid& g) {
  switch (c.process) {
    case ProcessKind::bridge_normalized: return std::make_shared<BridgeSampler>(g, true);
    case ProcessKind::bm_normalized: return std::make_shared<BMNormalizedSampler>(g);
    case ProcessKind::fbm_normalized: return std::make_shared<FBMSampler>(g, c.parameter, true);
    case ProcessKind::ou: return std::make_shared<OUSampler>(g, c.parameter);
    case ProcessKind::stationary: {
      auto r = c.stationary_corr;
      return std::make_shared<DenseSampler>(g, [r](double s, double t) { return r(t - s); }, c.id);
    }
    default:
      if (!c.correlation.valid()) throw ConfigurationError("component " + c.id + " has no sampler");
      return std::make_shared<DenseSampler>(g, c.correlation.r, c.id);
  }
}

inline PathBatch sample(const Sampler& s, const TimeGrid& g, std::size_t n_paths, std::uint64_t seed,
                        std::uint64_t stream = 0, std::size_t block = 4096) {
  PathBatch b;
  b.grid = g;
  b.process = s.name();
  b.seed = seed;
  b.stream = stream;
  b.values.resize(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(g.size()));
  for (std::size_t start = 0, blk = 0; start < n_paths; start += block, ++blk) {
    const std::size_t rows = std::min(block, n_paths - start);
    Rng rng(seed, stream, blk);
    s.fill(rng, b.values.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(rows)));
  }
  return b;
}

inline PathBatch sample_bm(const TimeGrid& g, std::size_t n_paths, std::uint64_t seed, std::uint64_t stream = 0) {
  return sample(BMSampler(g), g, n_paths, seed, stream);
}

inline PathBatch sample_bridge(const TimeGrid& g, std::size_t n_paths, std::uint64_t seed, std::uint64_t stream = 0) {
  return sample(BridgeSampler(g, true), g, n_paths, seed, stream);
}

inline PathBatch sample_fbm(const TimeGrid& g, double hurst, std::size_t n_paths, std::uint64_t seed,
                            std::uint64_t stream = 0) {
  return sample(FBMSampler(g, hurst, false), g, n_paths, seed, stream);
}

// Unit-variance stationary process with correlation r(lag).
inline PathBatch sample_stationary(const std::function<double(double)>& r, const TimeGrid& g, std::size_t n_paths,
                                   std::uint64_t seed, std::uint64_t stream = 0) {
  const DenseSampler s(g, [r](double a, double b) { return r(b - a); }, "stationary");
  return sample(s, g, n_paths, seed, stream);
}

inline PathBatch sample_ou(double lambda, const TimeGrid& g, std::size_t n_paths, std::uint64_t seed,
                           std::uint64_t stream = 0) {
  return sample(OUSampler(g, lambda), g, n_paths, seed, stream);
}

// sum_i b_i^2 X_i^2 pointwise
inline PathBatch chi_square_path(const std::vector<double>& b, const std::vector<PathBatch>& comps) {
  if (comps.empty() || comps.size() != b.size()) throw DomainError("need one path batch per weight");
  PathBatch out;
  out.grid = comps[0].grid;
  out.values = PathMatrix::Zero(comps[0].values.rows(), comps[0].values.cols());
  out.process = "chi-square";
  out.seed = comps[0].seed;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    if (c.values.rows() != out.values.rows() || c.grid.points() != out.grid.points())
      throw DomainError("component batches must share grid and path count");
    for (std::size_t j = 0; j < i; ++j)
      if (comps[j].seed == c.seed && comps[j].stream == c.stream)
        throw DomainError("component batches must come from distinct random streams");
    out.values.array() += b[i] * b[i] * c.values.array().square();
  }
  return out;
}

struct SupResult {
  std::vector<double> sup;
  std::vector<std::size_t> argmax_histogram;  // counts per grid index
};

inline SupResult sup_trend(const PathBatch& batch, const TrendFunction& g) {
  const auto& t = batch.grid.points();
  std::vector<double> gv(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) gv[j] = g(t[j]);
  SupResult r;
  r.sup.resize(batch.paths());
  r.argmax_histogram.assign(t.size(), 0);
  for (Eigen::Index i = 0; i < batch.values.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double v = batch.values(i, static_cast<Eigen::Index>(j)) - gv[j];
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    r.sup[static_cast<std::size_t>(i)] = best;
    ++r.argmax_histogram[arg];
  }
  return r;
}

// Binary layout (little-endian): "CHSQPATH", uint64 points, uint64 paths,
// grid as float64[points], then values row by row.
inline void write_paths_binary(const PathBatch& b, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigurationError("cannot open " + path);
  const char magic[8] = {'C', 'H', 'S', 'Q', 'P', 'A', 'T', 'H'};
  os.write(magic, 8);
  const std::uint64_t m = b.grid.size();
  const std::uint64_t n = b.paths();
  os.write(reinterpret_cast<const char*>(&m), 8);
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(b.grid.points().data()), static_cast<std::streamsize>(8 * m));
  os.write(reinterpret_cast<const char*>(b.values.data()), static_cast<std::streamsize>(8 * m * n));
}

inline void write_paths_csv(const PathBatch& b, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigurationError("cannot open " + path);
  std::fprintf(f, "path");
  for (double t : b.grid.points()) std::fprintf(f, ",%.17g", t);
  std::fprintf(f, "\n");
  for (Eigen::Index i = 0; i < b.values.rows(); ++i) {
    std::fprintf(f, "%ld", static_cast<long>(i));
    for (Eigen::Index j = 0; j < b.values.cols(); ++j) std::fprintf(f, ",%.17g", b.values(i, j));
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace chisq
