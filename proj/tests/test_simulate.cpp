#include <catch_amalgamated.hpp>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <functional>

#include "chisq/catalog.hpp"
#include "chisq/simulate.hpp"

using namespace chisq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using Cov = std::function<double(double, double)>;

// Entrywise |empirical - analytic| <= 5 SE with SE^2 = (s_ii s_jj + s_ij^2) / N.
int covariance_violations(const PathBatch& b, const Cov& cov) {
  const auto& t = b.grid.points();
  const auto m = static_cast<Eigen::Index>(t.size());
  const double n = static_cast<double>(b.paths());
  const Eigen::RowVectorXd mean = b.values.colwise().mean();
  const Eigen::MatrixXd c = (b.values.rowwise() - mean).transpose() * (b.values.rowwise() - mean) / (n - 1);
  int bad = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double s = cov(t[i], t[j]);
      const double se = std::sqrt((cov(t[i], t[i]) * cov(t[j], t[j]) + s * s) / n);
      if (std::abs(c(i, j) - s) > 5 * se + 1e-12) ++bad;
    }
  return bad;
}

double corr(const PathBatch& b, Eigen::Index i, Eigen::Index j) {
  const auto x = b.values.col(i).array() - b.values.col(i).mean();
  const auto y = b.values.col(j).array() - b.values.col(j).mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) ++i; else ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

double fbm_cov(double h, double s, double t) {
  return 0.5 * (std::pow(s, 2 * h) + std::pow(t, 2 * h) - std::pow(std::abs(t - s), 2 * h));
}

constexpr std::size_t kPaths = 1000000;

}  // namespace

TEST_CASE("samplers reproduce their covariance on a 20-point grid", "[simulate][slow]") {
  const auto g = TimeGrid::uniform(0.05, 0.95, 19);
  const auto g0 = TimeGrid::uniform(0, 0.95, 19);

  SECTION("Brownian motion") {
    const auto b = sample_bm(g0, kPaths, 1);
    CHECK(covariance_violations(b, [](double s, double t) { return std::min(s, t); }) == 0);
    const auto b1 = sample_bm(TimeGrid::custom({0.3, 0.7, 1.0}), kPaths, 2);
    const double var1 = (b1.values.col(2).array() - b1.values.col(2).mean()).square().mean();
    CHECK_THAT(var1, WithinAbs(1.0, 0.005));
    CHECK_THAT((b1.values.col(0).array() * b1.values.col(1).array()).mean(), WithinAbs(0.3, 0.01));
    CHECK(std::abs(b1.values.col(1).mean()) < 3 * std::sqrt(0.7 / kPaths));
  }
  SECTION("normalized bridge") {
    const auto b = sample_bridge(g, kPaths, 3);
    const auto r = catalog::bridge().correlation.r;
    CHECK(covariance_violations(b, r) == 0);
    const auto b2 = sample_bridge(TimeGrid::custom({0.2, 0.4, 0.41}), kPaths, 4);
    const double v = (b2.values.col(0).array() - b2.values.col(0).mean()).square().mean();
    CHECK_THAT(v, WithinAbs(1.0, 0.005));
    CHECK_THAT(corr(b2, 1, 2), WithinAbs(1 - 0.01 / (2 * 0.24), 0.002));
    CHECK_THAT(corr(b2, 1, 2), WithinAbs(std::sqrt(0.4 * 0.59 / (0.41 * 0.6)), 5 * (1 - 0.979 * 0.979) / 1000));
  }
  SECTION("fractional Brownian motion, dense") {
    for (double h : {0.3, 0.5, 0.8}) {
      INFO("H=" << h);
      const auto b = sample_fbm(g, h, kPaths, 5);
      CHECK(covariance_violations(b, [h](double s, double t) { return fbm_cov(h, s, t); }) == 0);
    }
    // H = 1/2 is Brownian motion
    double worst = 0;
    for (double s : g.points())
      for (double t : g.points()) worst = std::max(worst, std::abs(fbm_cov(0.5, s, t) - std::min(s, t)));
    CHECK(worst <= 1e-12);
  }
  SECTION("fractional Brownian motion, circulant") {
    const FBMSampler s(g0, 0.7, false, 10);
    const auto b = sample(s, g0, kPaths, 6);
    CHECK(covariance_violations(b, [](double s, double t) { return fbm_cov(0.7, s, t); }) == 0);
  }
  SECTION("normalized fbm local correlation") {
    const double h = 0.7;
    const auto c = catalog::fbm_normalized(h);
    const auto grid = TimeGrid::custom({0.5, 0.51});
    const auto b = sample(*make_sampler(c, grid), grid, kPaths, 7);
    const double exact = 1 - c.correlation.r(0.5, 0.51);
    CHECK_THAT(1 - corr(b, 0, 1), WithinRel(exact, 0.02));
    // leading-order local form; the next term is relatively O(h^{2-2H}), about 6% here
    CHECK_THAT(exact, WithinRel(std::pow(0.01, 2 * h) / (2 * std::pow(0.5, 2 * h)), 0.1));
  }
  SECTION("normalized Brownian motion and OU") {
    const auto w = sample(*make_sampler(catalog::bm_normalized(), g), g, kPaths, 8);
    CHECK(covariance_violations(w, catalog::bm_normalized().correlation.r) == 0);
    const auto o = sample_ou(2, g, kPaths, 9);
    CHECK(covariance_violations(o, [](double s, double t) { return std::exp(-2 * std::abs(t - s)); }) == 0);
    const auto lag = sample_ou(1, TimeGrid::custom({0.1, 0.15}), kPaths, 10);
    CHECK_THAT(corr(lag, 0, 1), WithinAbs(std::exp(-0.05), 5 * (1 - std::exp(-0.1)) / 1000));
  }
  SECTION("stationary by factorization") {
    auto tri = [](double l) { return std::max(0.0, 1 - std::abs(l) / 0.3); };
    const auto b = sample_stationary(tri, g, kPaths, 11);
    CHECK(covariance_violations(b, [tri](double s, double t) { return tri(t - s); }) == 0);
  }
}

TEST_CASE("degenerate and invalid covariances", "[simulate]") {
  const auto g = TimeGrid::uniform(0, 1, 10);
  const auto b = sample_stationary([](double) { return 1.0; }, g, 50, 1);
  for (Eigen::Index i = 0; i < 50; ++i)
    for (Eigen::Index j = 1; j < 11; ++j) CHECK_THAT(b.values(i, j), WithinAbs(b.values(i, 0), 1e-12));
  CHECK_THROWS_AS(sample_stationary([](double l) { return l == 0 ? 1.0 : -0.9; }, g, 10, 1), NumericalFailure);
  CHECK_THROWS_AS(sample_bridge(TimeGrid::uniform(0, 0.5, 4), 10, 1), DomainError);
  CHECK_THROWS_AS(sample_bridge(TimeGrid::uniform(0.5, 1, 4), 10, 1), DomainError);
  CHECK_THROWS_AS(sample_fbm(g, 1.2, 10, 1), DomainError);
}

TEST_CASE("reproducibility and stream independence", "[simulate]") {
  const auto g = TimeGrid::uniform(0.01, 0.99, 40);
  const auto a = sample_bridge(g, 9000, 42, 3);
  const auto b = sample_bridge(g, 9000, 42, 3);
  CHECK(a.values == b.values);
  const auto c = sample_bridge(g, 9000, 42, 4);
  CHECK(a.values != c.values);
  const auto f1 = sample_fbm(g, 0.3, 5000, 7);
  const auto f2 = sample_fbm(g, 0.3, 5000, 7);
  CHECK(f1.values == f2.values);

  const auto x = sample_ou(1, g, 200000, 5, 0);
  const auto y = sample_ou(1, g, 200000, 5, 1);
  double worst = 0;
  for (Eigen::Index j : {0, 20, 40}) {
    const auto xa = x.values.col(j).array() - x.values.col(j).mean();
    const auto ya = y.values.col(j).array() - y.values.col(j).mean();
    worst = std::max(worst, std::abs((xa * ya).sum()) / std::sqrt(xa.square().sum() * ya.square().sum()));
  }
  CHECK(worst < 5 / std::sqrt(200000.0));
}

TEST_CASE("chi-square paths", "[simulate]") {
  const auto g = TimeGrid::uniform(0.1, 0.9, 8);
  const auto x = sample_ou(1, g, 1000000, 1, 0);
  const auto y = sample_ou(1, g, 1000000, 1, 1);

  const auto one = chi_square_path({1}, {x});
  CHECK(one.values == x.values.array().square().matrix());

  const auto two = chi_square_path({1, 1}, {x, y});
  std::vector<double> col(two.values.rows());
  for (Eigen::Index i = 0; i < two.values.rows(); ++i) col[i] = two.values(i, 3);
  std::sort(col.begin(), col.end());
  const boost::math::chi_squared_distribution<double> chi2(2);
  double ks = 0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    const double f = boost::math::cdf(chi2, col[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / col.size()),
                   std::abs(f - static_cast<double>(i + 1) / col.size())});
  }
  CHECK(ks < 0.002);

  const auto w = chi_square_path({1, 0.5}, {x, y});
  // Var of X^2 + Y^2/4 is 2 + 2/16
  CHECK_THAT(w.values.col(5).mean(), WithinAbs(1.25, 5 * std::sqrt(2.125 / 1e6)));

  CHECK_THROWS_AS(chi_square_path({1, 1}, {x, x}), DomainError);
  CHECK_THROWS_AS(chi_square_path({1, 1}, {x, sample_ou(1, TimeGrid::uniform(0.1, 0.9, 9), 1000000, 1, 1)}),
                  DomainError);
  CHECK_THROWS_AS(chi_square_path({1}, {x, y}), DomainError);
}

TEST_CASE("supremum functional", "[simulate]") {
  const auto g = TimeGrid::uniform(0.1, 0.9, 8);
  PathBatch b;
  b.grid = g;
  b.values = PathMatrix::Constant(3, 9, 2.5);
  const auto s = sup_trend(b, trends::zero());
  for (double v : s.sup) CHECK(v == 2.5);

  const auto x = sample_bridge(TimeGrid::uniform(0.001, 0.999, 200), 20000, 3);
  const auto chi = chi_square_path({1}, {x});
  const auto base = sup_trend(chi, trends::gnu(1));
  const auto shifted = sup_trend(chi, trends::gnu(1).shifted(1.7));
  for (std::size_t i = 0; i < base.sup.size(); ++i) CHECK_THAT(shifted.sup[i], WithinAbs(base.sup[i] - 1.7, 1e-12));

  SECTION("a trend large near the ends pushes the argmax inside") {
    const auto steep = sup_trend(chi, trends::gnu(1).scaled(20));
    std::size_t inner = 0;
    for (std::size_t j = 50; j <= 150; ++j) inner += steep.argmax_histogram[j];
    std::size_t inner0 = 0;
    for (std::size_t j = 50; j <= 150; ++j) inner0 += base.argmax_histogram[j];
    CHECK(inner > 0.8 * 20000);
    CHECK(inner > inner0);
  }
}

TEST_CASE("normalized bridge equals time-changed normalized Brownian motion", "[simulate][slow]") {
  // B(t) = (1-t) W(t/(1-t)) makes B(t)/sqrt(t(1-t)) = W(s)/sqrt(s) at s = t/(1-t)
  const auto gt = TimeGrid::uniform(0.02, 0.98, 96);
  std::vector<double> s;
  for (double t : gt.points()) s.push_back(t / (1 - t));
  const auto gs = TimeGrid::custom(s);
  const std::size_t n = 200000;
  TrendFunction time_changed_gnu;
  time_changed_gnu.g = [](const Point& p) { return trends::gnu(1)(p.t / (1 + p.t)); };
  const auto a = sup_trend(chi_square_path({1}, {sample_bridge(gt, n, 1)}), trends::gnu(1));
  const auto b = sup_trend(chi_square_path({1}, {sample(*make_sampler(catalog::bm_normalized(), gs), gs, n, 2)}),
                           time_changed_gnu);
  // two-sample KS critical value at level 1e-3
  CHECK(ks_two_sample(a.sup, b.sup) < 1.95 * std::sqrt(2.0 / n));
}

TEST_CASE("refining a grid never lowers the discrete supremum", "[simulate]") {
  const auto bridge = catalog::bridge();
  auto f = std::make_shared<const FTransform>(bridge.c.density(1));
  const auto coarse = TimeGrid::f_uniform(f, 1e-4, 1 - 1e-4, 0.05);
  const auto fine = coarse.refined();
  REQUIRE(fine.size() == 2 * coarse.size() - 1);
  for (std::size_t i = 0; i < coarse.size(); ++i) CHECK(fine[2 * i] == coarse[i]);
  // f-uniform spacing
  for (std::size_t i = 1; i < coarse.size(); ++i)
    CHECK_THAT(coarse.f_at(coarse[i]) - coarse.f_at(coarse[i - 1]), WithinAbs(coarse.step(), 1e-9));

  const auto paths = chi_square_path({1}, {sample_bridge(fine, 5000, 9)});
  PathBatch sub;
  sub.grid = coarse;
  sub.values.resize(paths.values.rows(), static_cast<Eigen::Index>(coarse.size()));
  for (std::size_t i = 0; i < coarse.size(); ++i) sub.values.col(i) = paths.values.col(2 * i);
  const auto sf = sup_trend(paths, trends::gnu(1));
  const auto sc = sup_trend(sub, trends::gnu(1));
  int lowered = 0;
  for (std::size_t i = 0; i < sf.sup.size(); ++i)
    if (sf.sup[i] < sc.sup[i]) ++lowered;
  CHECK(lowered == 0);
}

TEST_CASE("path dumps", "[simulate]") {
  const auto g = TimeGrid::uniform(0.1, 0.9, 4);
  const auto b = sample_ou(1, g, 3, 1);
  const std::string bin = "test_simulate_paths.bin";
  write_paths_binary(b, bin);
  std::ifstream is(bin, std::ios::binary);
  char magic[8];
  std::uint64_t m = 0, n = 0;
  is.read(magic, 8);
  is.read(reinterpret_cast<char*>(&m), 8);
  is.read(reinterpret_cast<char*>(&n), 8);
  CHECK(std::string(magic, 8) == "CHSQPATH");
  CHECK(m == 5);
  CHECK(n == 3);
  std::vector<double> grid(m), vals(m * n);
  is.read(reinterpret_cast<char*>(grid.data()), 8 * m);
  is.read(reinterpret_cast<char*>(vals.data()), 8 * m * n);
  CHECK(grid == g.points());
  CHECK(vals[7] == b.values(1, 2));
  std::remove(bin.c_str());
}
