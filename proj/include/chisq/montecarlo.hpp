#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chisq/admissibility.hpp"
#include "chisq/asymptotics.hpp"
#include "chisq/errors.hpp"
#include "chisq/grid.hpp"
#include "chisq/model.hpp"
#include "chisq/simulate.hpp"

namespace chisq {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kProbabilityFloor = 1e-5;

struct MCEstimate {
  double p_hat = 0;
  double ci_low = 0;
  double ci_high = 1;
  std::size_t n_paths = 0;
  std::size_t hits = 0;
  std::string grid;
  std::uint64_t seed = 0;
  double mesh = 0;
  bool below_floor = false;
};

// Wilson score interval; zero hits give [0, 3/n].
inline MCEstimate binomial_estimate(std::size_t hits, std::size_t n) {
  if (n == 0) throw DomainError("no paths");
  MCEstimate e;
  e.hits = hits;
  e.n_paths = n;
  const double nn = static_cast<double>(n);
  e.p_hat = static_cast<double>(hits) / nn;
  if (hits == 0) {
    e.ci_low = 0;
    e.ci_high = 3 / nn;
  } else {
    const double z2 = kZ95 * kZ95;
    const double p = e.p_hat;
    const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = kZ95 * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    e.ci_low = std::max(0.0, std::min(p, centre - half));
    e.ci_high = std::min(1.0, std::max(p, centre + half));
  }
  e.below_floor = e.p_hat < kProbabilityFloor;
  return e;
}

inline int default_threads() {
  if (const char* env = std::getenv("CHISQ_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs job(block) for block = 0..blocks-1 on up to `threads` workers.
inline void parallel_blocks(std::size_t blocks, int threads, const std::function<void(std::size_t)>& job) {
  const int workers = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(blocks, 1)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) job(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t b = next++; b < blocks; b = next++) job(b);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct MCConfig {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: CHISQ_THREADS or hardware concurrency
  std::size_t block = 4096;
  double d_divisor = 5;            // f-mesh d = q(u) / d_divisor
  std::optional<double> d;         // explicit f-mesh
  double truncation = 1e-4;        // distance kept from an open end of E
  std::optional<TimeGrid> grid;    // explicit coarse grid
};

struct TailEstimate {
  double u = 0;
  MCEstimate coarse;  // mesh d
  MCEstimate fine;    // mesh d/2 on the nested grid
  // fine + (fine - coarse)/(2^{alpha/2} - 1), with a normal 95% interval
  double extrapolated = 0;
  double extrapolated_low = 0;
  double extrapolated_high = 0;
  bool mesh_converged = false;
  std::vector<std::size_t> argmax_histogram;  // on the fine grid
};

struct MCRun {
  TimeGrid coarse_grid;
  TimeGrid fine_grid;
  std::vector<TailEstimate> tails;
  std::string truncated;
};

namespace mc_detail {

// Closed interval actually simulated: an end is pulled in by `trunc` when
// f is infinite there or the sampler cannot start at it.
inline Interval simulation_interval(const ChiSquareModel& m, const FTransform& f, double trunc, std::string& note) {
  const Interval& e = m.interval();
  bool needs0 = false;
  bool needs1 = false;
  for (const auto& c : m.components()) {
    const ProcessKind k = c.process;
    needs0 = needs0 || k == ProcessKind::bridge_normalized || k == ProcessKind::bm_normalized ||
             k == ProcessKind::fbm_normalized || k == ProcessKind::none;
    needs1 = needs1 || k == ProcessKind::bridge_normalized || k == ProcessKind::none;
  }
  double lo = e.lo;
  double hi = e.hi;
  if (lo == 0 && (needs0 || f.limit(0).status != Finiteness::finite)) {
    lo = trunc;
    note += "lo truncated to " + std::to_string(trunc);
  }
  if (hi == 1 && (needs1 || f.limit(1).status != Finiteness::finite)) {
    hi = 1 - trunc;
    note += std::string(note.empty() ? "" : "; ") + "hi truncated to 1-" + std::to_string(trunc);
  }
  if (!(lo < hi)) throw DomainError("truncation leaves an empty interval");
  return Interval::closed(lo, hi);
}

inline double level_scale(const ChiSquareModel& m, double u) { return m.component(0).kernel.q(u); }

}  // namespace mc_detail

inline TimeGrid model_grid(const ChiSquareModel& model, double u, const MCConfig& cfg, std::string* note = nullptr) {
  if (cfg.grid) return *cfg.grid;
  std::string n;
  auto f = std::make_shared<FTransform>(c_star(model));
  const Interval e = mc_detail::simulation_interval(model, *f, cfg.truncation, n);
  if (note) *note = n;
  const double d = cfg.d.value_or(mc_detail::level_scale(model, u) / cfg.d_divisor);
  return TimeGrid::f_uniform(f, e.lo, e.hi, d);
}

// P(sup_E (chi^2 - g) > u) for each u, on a grid and its refinement with
// common random numbers.
inline MCRun estimate_tails(const ChiSquareModel& model, const TrendFunction& g, const std::vector<double>& us,
                            const TimeGrid& coarse, const MCConfig& cfg) {
  if (us.empty()) throw DomainError("need at least one level u");
  if (cfg.n_paths < 1) throw DomainError("need at least one path");
  MCRun run;
  run.coarse_grid = coarse;
  run.fine_grid = coarse.refined();
  const TimeGrid& fine = run.fine_grid;
  const int n = model.n();
  std::vector<std::shared_ptr<Sampler>> samplers;
  for (int i = 0; i < n; ++i)
    samplers.push_back(model.is_heterogeneous() || i == 0 ? make_sampler(model.component(i), fine) : samplers[0]);
  const auto& t = fine.points();
  const std::size_t m = t.size();
  std::vector<double> gv(m);
  for (std::size_t j = 0; j < m; ++j) gv[j] = g(t[j]);
  const std::vector<double>& b = model.b();
  const std::size_t nu = us.size();

  const std::size_t blocks = (cfg.n_paths + cfg.block - 1) / cfg.block;
  std::vector<std::vector<std::size_t>> hit_c(blocks, std::vector<std::size_t>(nu, 0));
  std::vector<std::vector<std::size_t>> hit_f(blocks, std::vector<std::size_t>(nu, 0));
  std::vector<std::vector<std::size_t>> hist(blocks, std::vector<std::size_t>(m, 0));

  parallel_blocks(blocks, cfg.threads > 0 ? cfg.threads : default_threads(), [&](std::size_t blk) {
    const std::size_t rows = std::min(cfg.block, cfg.n_paths - blk * cfg.block);
    PathMatrix chi = PathMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
    PathMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
    for (int i = 0; i < n; ++i) {
      Rng rng(cfg.seed, static_cast<std::uint64_t>(i), blk);
      samplers[i]->fill(rng, x);
      chi.array() += b[i] * b[i] * x.array().square();
    }
    for (Eigen::Index r = 0; r < chi.rows(); ++r) {
      double sc = -std::numeric_limits<double>::infinity();
      double sf = sc;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double v = chi(r, static_cast<Eigen::Index>(j)) - gv[j];
        if (v > sf) {
          sf = v;
          arg = j;
        }
        if (j % 2 == 0) sc = std::max(sc, v);
      }
      ++hist[blk][arg];
      for (std::size_t k = 0; k < nu; ++k) {
        if (sc > us[k]) ++hit_c[blk][k];
        if (sf > us[k]) ++hit_f[blk][k];
      }
    }
  });

  const double kappa = 1 / (std::pow(2.0, model.alpha() / 2) - 1);
  for (std::size_t k = 0; k < nu; ++k) {
    std::size_t hc = 0, hf = 0;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      hc += hit_c[blk][k];
      hf += hit_f[blk][k];
    }
    TailEstimate te;
    te.u = us[k];
    te.coarse = binomial_estimate(hc, cfg.n_paths);
    te.fine = binomial_estimate(hf, cfg.n_paths);
    te.coarse.grid = coarse.describe();
    te.fine.grid = fine.describe();
    te.coarse.seed = te.fine.seed = cfg.seed;
    te.coarse.mesh = coarse.step();
    te.fine.mesh = fine.step();
    // per path: Y = I_f + kappa (I_f - I_c), where I_c <= I_f
    const double nn = static_cast<double>(cfg.n_paths);
    const double only_f = static_cast<double>(hf - hc) / nn;
    const double both = static_cast<double>(hc) / nn;
    const double mean = both + only_f * (1 + kappa);
    const double second = both + only_f * (1 + kappa) * (1 + kappa);
    const double sd = std::sqrt(std::max(second - mean * mean, 0.0) / nn);
    te.extrapolated = mean;
    te.extrapolated_low = std::max(0.0, mean - kZ95 * sd);
    te.extrapolated_high = mean + kZ95 * sd;
    te.mesh_converged = te.coarse.ci_high >= te.fine.ci_low;
    if (k == 0) {
      te.argmax_histogram.assign(m, 0);
      for (std::size_t blk = 0; blk < blocks; ++blk)
        for (std::size_t j = 0; j < m; ++j) te.argmax_histogram[j] += hist[blk][j];
    }
    run.tails.push_back(std::move(te));
  }
  return run;
}

inline MCRun estimate_tail(const ChiSquareModel& model, const TrendFunction& g, double u, const MCConfig& cfg) {
  if (cfg.n_paths < 10000) throw DomainError("tail estimation needs at least 1e4 paths");
  std::string note;
  const TimeGrid grid = model_grid(model, u, cfg, &note);
  MCRun r = estimate_tails(model, g, {u}, grid, cfg);
  r.truncated = note;
  return r;
}

// ---------------------------------------------------------------------------

struct CompareRow {
  double u = 0;
  double asymptotic = 0;
  TailEstimate mc;
  std::optional<double> ratio;               // p_hat (fine) / asymptotic
  std::optional<double> ratio_extrapolated;  // mesh-extrapolated / asymptotic
};

struct Comparison {
  std::vector<CompareRow> rows;
  bool ratio_trend_to_one = false;
  std::string grid;
  std::string truncated;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

// All levels share the grid built for the largest u (the finest).
inline Comparison compare(const ChiSquareModel& model, const TrendFunction& g, std::vector<double> us,
                          const MCConfig& cfg, const AsymptoticsOptions& aopt = {}) {
  for (std::size_t i = 1; i < us.size(); ++i)
    if (!(us[i] > us[i - 1])) throw DomainError("levels must be increasing");
  const TailApprox a = approximate(model, g, aopt);
  std::string note;
  const TimeGrid grid = model_grid(model, us.back(), cfg, &note);
  const MCRun run = estimate_tails(model, g, us, grid, cfg);
  Comparison c;
  c.grid = run.fine_grid.describe();
  c.truncated = note;
  c.n_paths = cfg.n_paths;
  c.seed = cfg.seed;
  std::vector<double> dev;
  for (std::size_t k = 0; k < us.size(); ++k) {
    CompareRow row;
    row.u = us[k];
    row.asymptotic = a.evaluate(us[k]);
    row.mc = run.tails[k];
    if (row.mc.fine.hits > 0) {
      row.ratio = row.mc.fine.p_hat / row.asymptotic;
      row.ratio_extrapolated = row.mc.extrapolated / row.asymptotic;
      dev.push_back(std::abs(*row.ratio_extrapolated - 1));
    }
    c.rows.push_back(std::move(row));
  }
  c.ratio_trend_to_one = dev.size() >= 2;
  for (std::size_t i = 1; i < dev.size(); ++i)
    if (!(dev[i] < dev[i - 1])) c.ratio_trend_to_one = false;
  return c;
}

inline std::string comparison_csv(const Comparison& c) {
  std::ostringstream os;
  os.precision(17);
  os << "u,asymptotic,p_hat,ci_low,ci_high,ratio,mesh,n_paths,seed,p_coarse,p_extrapolated,ratio_extrapolated\n";
  for (const auto& r : c.rows) {
    os << r.u << ',' << r.asymptotic << ',' << r.mc.fine.p_hat << ',' << r.mc.fine.ci_low << ','
       << r.mc.fine.ci_high << ',';
    if (r.ratio) {
      os << *r.ratio;
    } else {
      os << "NA";
    }
    os << ',' << r.mc.fine.mesh << ',' << c.n_paths << ',' << c.seed << ',' << r.mc.coarse.p_hat << ','
       << r.mc.extrapolated << ',';
    if (r.ratio_extrapolated) {
      os << *r.ratio_extrapolated;
    } else {
      os << "NA";
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

struct SlepianReport {
  int n = 1;
  double u = 0;
  TailEstimate x;
  TailEstimate y;
  double factor = 2;
  std::size_t pairs_checked = 0;
  bool holds = false;              // p_X <= 2^n p_Y up to CI noise
  bool holds_with_margin = false;  // upper CI of p_X below 2^n times lower CI of p_Y
  std::string grid;
};

// Checks P(sup sum X_i^2 > u) <= 2^n P(sup sum Y_i^2 > u) for unit-variance
// components with r_X >= r_Y on the grid.
inline SlepianReport slepian_check(const Component& cx, const Component& cy, int n, const Interval& e, double u,
                                   const MCConfig& cfg) {
  if (n < 1) throw DomainError("need n >= 1");
  const auto mx = ChiSquareModel::homogeneous(cx, std::vector<double>(n, 1.0), e);
  const auto my = ChiSquareModel::homogeneous(cy, std::vector<double>(n, 1.0), e);
  const double q = std::min(cx.kernel.q(u), cy.kernel.q(u));
  MCConfig c = cfg;
  if (!c.grid && !c.d) c.d = q / c.d_divisor;
  std::string note;
  // a common grid, built from whichever model resolves the finer scale
  const TimeGrid grid = c.grid ? *c.grid : model_grid(cx.kernel.q(u) <= cy.kernel.q(u) ? mx : my, u, c, &note);
  SlepianReport rep;
  rep.n = n;
  rep.u = u;
  rep.factor = std::pow(2.0, n);
  const TimeGrid fine = grid.refined();
  const auto& t = fine.points();
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 200);
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < t.size(); i += stride) {
    for (std::size_t j = i; j < t.size(); j += stride) {
      ++rep.pairs_checked;
      const double rx = cx.correlation(t[i], t[j]);
      const double ry = cy.correlation(t[i], t[j]);
      if (rx < ry - 1e-12 && bad.size() < 10)
        bad.push_back("(" + std::to_string(t[i]) + "," + std::to_string(t[j]) + ")");
    }
  }
  if (!bad.empty()) {
    std::string msg = "r_X < r_Y at";
    for (const auto& s : bad) msg += " " + s;
    throw NotApplicable(msg);
  }
  MCConfig cyc = c;
  cyc.seed = splitmix64(c.seed ^ 0x5bd1e995ULL);
  rep.x = estimate_tails(mx, trends::zero(), {u}, grid, c).tails[0];
  rep.y = estimate_tails(my, trends::zero(), {u}, grid, cyc).tails[0];
  rep.grid = fine.describe();
  rep.holds = rep.x.fine.ci_low <= rep.factor * rep.y.fine.ci_high;
  rep.holds_with_margin = rep.x.fine.ci_high <= rep.factor * rep.y.fine.ci_low;
  return rep;
}

}  // namespace chisq
