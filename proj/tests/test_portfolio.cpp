#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "midcast/portfolio.hpp"
#include "midcast/rng.hpp"

using namespace midcast;

namespace {

ReturnPanel panel_of(const Eigen::MatrixXd& returns) {
  ReturnPanel p;
  p.returns = returns;
  return p;
}

double sharpe_of(const Eigen::VectorXd& w, const ReturnPanel& p, double rf) {
  const PortfolioWeights pw{w};
  return (annualized_return(pw, p) - rf) / std::sqrt(portfolio_variance(pw, p));
}

void check_simplex(const Eigen::VectorXd& w) {
  CHECK(w.minCoeff() >= -1e-12);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

// four orthogonal zero-sum sign patterns make sample covariances exactly zero
Eigen::VectorXd hadamard_col(int j) {
  Eigen::VectorXd h(4);
  if (j == 0)
    h << 1, -1, 1, -1;
  else
    h << 1, 1, -1, -1;
  return h;
}

}  // namespace

TEST_CASE("simplex projection basics") {
  Eigen::VectorXd on(3);
  on << 0.2, 0.5, 0.3;
  const Eigen::VectorXd p = project_to_simplex(on);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(on[i]).epsilon(1e-12));

  Eigen::VectorXd v(2);
  v << 2.0, 0.0;
  const Eigen::VectorXd q = project_to_simplex(v);
  CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.0));
}

TEST_CASE("projection is the closest simplex point") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v[i] = rng.next_uniform(-2.0, 2.0);
    const Eigen::VectorXd p = project_to_simplex(v);
    check_simplex(p);
    const double dist = (v - p).squaredNorm();
    for (int probe = 0; probe < 1000; ++probe) {
      Eigen::VectorXd q(5);
      double s = 0.0;
      for (int i = 0; i < 5; ++i) {
        q[i] = -std::log(std::max(rng.next_unit(), 1e-300));
        s += q[i];
      }
      q /= s;
      CHECK((v - q).squaredNorm() >= dist - 1e-12);
    }
  }
}

TEST_CASE("annualized return hand cases and oracle") {
  Eigen::MatrixXd r1 = Eigen::MatrixXd::Constant(10, 1, 0.002);
  PortfolioWeights one{Eigen::VectorXd::Ones(1)};
  CHECK(annualized_return(one, panel_of(r1)) ==
        doctest::Approx(252.0 * 0.002).epsilon(1e-12));

  Eigen::MatrixXd r2(4, 2);
  r2.col(0).setConstant(0.001);
  r2.col(1).setConstant(0.003);
  PortfolioWeights eq{Eigen::VectorXd::Constant(2, 0.5)};
  CHECK(annualized_return(eq, panel_of(r2)) ==
        doctest::Approx(252.0 * 0.002).epsilon(1e-12));

  Rng rng(2);
  Eigen::MatrixXd rr(30, 3);
  for (int t = 0; t < 30; ++t)
    for (int l = 0; l < 3; ++l) rr(t, l) = 0.001 * rng.next_gaussian();
  Eigen::VectorXd w(3);
  w << 0.5, 0.3, 0.2;
  double expected = 0.0;
  for (int l = 0; l < 3; ++l) {
    double mean = 0.0;
    for (int t = 0; t < 30; ++t) mean += rr(t, l);
    expected += w[l] * mean / 30.0;
  }
  expected *= 252.0;
  CHECK(annualized_return(PortfolioWeights{w}, panel_of(rr)) ==
        doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(annualized_return(eq, panel_of(rr)), DimensionMismatch);
}

TEST_CASE("portfolio variance hand cases and double-sum oracle") {
  // single asset: alternating pattern with exact unbiased variance
  Eigen::MatrixXd r1(4, 1);
  r1.col(0) = 0.01 * hadamard_col(0);
  const double v = r1.col(0).squaredNorm() / 3.0;
  CHECK(portfolio_variance(PortfolioWeights{Eigen::VectorXd::Ones(1)},
                           panel_of(r1)) ==
        doctest::Approx(252.0 * v).epsilon(1e-12));

  // two exactly uncorrelated assets with equal variance
  Eigen::MatrixXd r2(4, 2);
  r2.col(0) = 0.01 * hadamard_col(0);
  r2.col(1) = 0.01 * hadamard_col(1);
  CHECK(portfolio_variance(PortfolioWeights{Eigen::VectorXd::Constant(2, 0.5)},
                           panel_of(r2)) ==
        doctest::Approx(126.0 * v).epsilon(1e-12));

  // 3-asset random panel against the elementwise double sum
  Rng rng(3);
  Eigen::MatrixXd rr(25, 3);
  for (int t = 0; t < 25; ++t)
    for (int l = 0; l < 3; ++l) rr(t, l) = 0.005 * rng.next_gaussian();
  Eigen::VectorXd w(3);
  w << 0.2, 0.5, 0.3;
  Eigen::VectorXd means = rr.colwise().mean();
  double acc = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double cov = 0.0;
      for (int t = 0; t < 25; ++t)
        cov += (rr(t, a) - means[a]) * (rr(t, b) - means[b]);
      acc += w[a] * w[b] * cov / 24.0;
    }
  CHECK(portfolio_variance(PortfolioWeights{w}, panel_of(rr)) ==
        doctest::Approx(252.0 * acc).epsilon(1e-12));
  CHECK(portfolio_variance(PortfolioWeights{w}, panel_of(rr)) >= 0.0);
}

TEST_CASE("max sharpe trivial and degenerate panels") {
  Rng rng(4);
  Eigen::MatrixXd r1(20, 1);
  for (int t = 0; t < 20; ++t) r1(t, 0) = 0.002 + 0.001 * rng.next_gaussian();
  const SolveResult single = max_sharpe(panel_of(r1));
  CHECK(single.weights.w.size() == 1);
  CHECK(single.weights.w[0] == doctest::Approx(1.0).epsilon(1e-9));

  Eigen::MatrixXd twin(20, 2);
  twin.col(0) = r1.col(0);
  twin.col(1) = r1.col(0);
  const SolveResult dup = max_sharpe(panel_of(twin));
  check_simplex(dup.weights.w);
  CHECK(dup.objective ==
        doctest::Approx(sharpe_of(Eigen::VectorXd::Ones(1), panel_of(r1), 0.015))
            .epsilon(1e-9));
}

TEST_CASE("max sharpe matches a fine grid search on three assets") {
  Rng rng(5);
  Eigen::MatrixXd r(120, 3);
  const double means[3] = {0.0020, 0.0012, 0.0008};
  const double vols[3] = {0.012, 0.006, 0.003};
  for (int t = 0; t < 120; ++t)
    for (int l = 0; l < 3; ++l)
      r(t, l) = means[l] + vols[l] * rng.next_gaussian();
  const ReturnPanel panel = panel_of(r);
  const SolveResult res = max_sharpe(panel);
  check_simplex(res.weights.w);

  double grid_best = -1e300;
  int bi = 0, bj = 0;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j + i <= 100; ++j) {
      Eigen::VectorXd w(3);
      w << i / 100.0, j / 100.0, (100 - i - j) / 100.0;
      const double s = sharpe_of(w, panel, 0.015);
      if (s > grid_best) {
        grid_best = s;
        bi = i;
        bj = j;
      }
    }
  // refine at 0.001 resolution around the coarse optimum
  for (int i = std::max(0, 10 * bi - 20); i <= std::min(1000, 10 * bi + 20); ++i)
    for (int j = std::max(0, 10 * bj - 20);
         j + i <= 1000 && j <= std::min(1000, 10 * bj + 20); ++j) {
      Eigen::VectorXd w(3);
      w << i / 1000.0, j / 1000.0, (1000 - i - j) / 1000.0;
      grid_best = std::max(grid_best, sharpe_of(w, panel, 0.015));
    }
  CHECK(res.objective >= grid_best - 1e-3);
  CHECK(std::abs(res.objective - grid_best) < 1e-3);

  // never worse than equal weights or any single asset
  CHECK(res.objective >=
        sharpe_of(Eigen::VectorXd::Constant(3, 1.0 / 3.0), panel, 0.015) - 1e-6);
  for (int l = 0; l < 3; ++l) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e[l] = 1.0;
    CHECK(res.objective >= sharpe_of(e, panel, 0.015) - 1e-6);
  }
}

TEST_CASE("min variance closed form for two uncorrelated assets") {
  Eigen::MatrixXd r(4, 2);
  r.col(0) = 0.02 * hadamard_col(0);  // v1 = 4 * v2
  r.col(1) = 0.01 * hadamard_col(1);
  const ReturnPanel panel = panel_of(r);
  const SolveResult res = min_variance(panel);
  check_simplex(res.weights.w);
  const double v1 = r.col(0).squaredNorm() / 3.0;
  const double v2 = r.col(1).squaredNorm() / 3.0;
  CHECK(res.weights.w[0] == doctest::Approx(v2 / (v1 + v2)).epsilon(1e-6));
  CHECK_FALSE(res.zero_variance);
}

TEST_CASE("a riskless asset absorbs all minimum-variance weight") {
  Rng rng(6);
  Eigen::MatrixXd r(30, 3);
  for (int t = 0; t < 30; ++t) {
    r(t, 0) = 0.001 + 0.01 * rng.next_gaussian();
    r(t, 1) = 0.0005;  // constant: zero variance
    r(t, 2) = 0.002 + 0.02 * rng.next_gaussian();
  }
  const SolveResult res = min_variance(panel_of(r));
  CHECK(res.weights.w[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.zero_variance);
}

TEST_CASE("min variance matches a grid search on four correlated assets") {
  Rng rng(7);
  Eigen::MatrixXd r(150, 4);
  for (int t = 0; t < 150; ++t) {
    const double common = 0.004 * rng.next_gaussian();
    for (int l = 0; l < 4; ++l)
      r(t, l) = 0.001 + common + (0.002 + 0.002 * l) * rng.next_gaussian();
  }
  const ReturnPanel panel = panel_of(r);
  const SolveResult res = min_variance(panel);
  check_simplex(res.weights.w);

  double grid_best = 1e300;
  for (int i = 0; i <= 50; ++i)
    for (int j = 0; j + i <= 50; ++j)
      for (int k = 0; k + j + i <= 50; ++k) {
        Eigen::VectorXd w(4);
        w << i / 50.0, j / 50.0, k / 50.0, (50 - i - j - k) / 50.0;
        grid_best =
            std::min(grid_best, portfolio_variance(PortfolioWeights{w}, panel));
      }
  CHECK(res.objective <= grid_best + 1e-4);
  CHECK(std::abs(res.objective - grid_best) < 1e-4);

  // never worse than holding any single asset
  for (int l = 0; l < 4; ++l) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
    e[l] = 1.0;
    CHECK(res.objective <=
          portfolio_variance(PortfolioWeights{e}, panel) + 1e-9);
  }
}

TEST_CASE("solvers are deterministic for a fixed seed") {
  Rng rng(8);
  Eigen::MatrixXd r(60, 3);
  for (int t = 0; t < 60; ++t)
    for (int l = 0; l < 3; ++l)
      r(t, l) = 0.001 * (l + 1) + 0.01 * rng.next_gaussian();
  const ReturnPanel panel = panel_of(r);
  const SolveResult a = max_sharpe(panel);
  const SolveResult b = max_sharpe(panel);
  CHECK(a.weights.w == b.weights.w);
  const SolveResult c = min_variance(panel);
  const SolveResult d = min_variance(panel);
  CHECK(c.weights.w == d.weights.w);
}

TEST_CASE("asset selection thresholds") {
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(60, 10.0);
  Eigen::VectorXd rising(60);
  for (int t = 0; t < 60; ++t) rising[t] = 10.0 * std::pow(1.003, t);

  std::vector<Eigen::VectorXd> paths(5, flat);
  Eigen::VectorXd corr = Eigen::VectorXd::Zero(5);
  CHECK(select_assets(paths, SelectionMode::AllThreshold, corr).empty());

  paths[2] = rising;  // literal cumulative return ~ 1.19
  const std::vector<int> sel =
      select_assets(paths, SelectionMode::AllThreshold, corr);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0] == 2);
}

TEST_CASE("hc50 mode restricts to the most correlated names") {
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(60, 10.0);
  Eigen::VectorXd mild(60);
  for (int t = 0; t < 60; ++t) mild[t] = 10.0 * std::pow(1.0016, t);  // C ~ 1.10

  std::vector<Eigen::VectorXd> paths(60, flat);
  paths[5] = mild;   // low correlation rank, outside the top 50
  paths[55] = mild;  // high correlation rank
  Eigen::VectorXd corr(60);
  for (int l = 0; l < 60; ++l) corr[l] = static_cast<double>(l) / 60.0;

  CHECK(select_assets(paths, SelectionMode::AllThreshold, corr).empty());
  const std::vector<int> sel =
      select_assets(paths, SelectionMode::Hc50Threshold, corr);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0] == 55);
}

TEST_CASE("oracle predictions reproduce the realized window return") {
  Eigen::MatrixXd window(60, 2);
  for (int t = 0; t < 60; ++t) {
    window(t, 0) = 10.0 * std::pow(1.003, t);
    window(t, 1) = 20.0;
  }
  BacktestConfig config;
  const BacktestReport report =
      backtest({window}, {window}, Eigen::VectorXd::Zero(2), config);
  REQUIRE(report.windows.size() == 1);
  REQUIRE(report.windows[0].selected.size() == 1);
  CHECK(report.windows[0].selected[0] == 0);
  const double c = cumulative_return(window.col(0));
  CHECK(report.windows[0].mean_variance.window_return ==
        doctest::Approx(c - 1.0).epsilon(1e-9));
  CHECK(report.avg_return_mean_variance == doctest::Approx(c - 1.0).epsilon(1e-9));
}

TEST_CASE("flat markets are skipped without failing") {
  const Eigen::MatrixXd window = Eigen::MatrixXd::Constant(60, 3, 25.0);
  BacktestConfig config;
  const BacktestReport report =
      backtest({window, window}, {window, window}, Eigen::VectorXd::Zero(3),
               config);
  REQUIRE(report.windows.size() == 2);
  CHECK(report.windows[0].selected.empty());
  CHECK(report.windows[1].selected.empty());
  CHECK(report.avg_return_mean_variance == doctest::Approx(0.0));
  CHECK(report.avg_sharpe_mean_variance == doctest::Approx(0.0));
}

TEST_CASE("a dominant asset attracts both allocation methods") {
  Rng rng(9);
  Eigen::MatrixXd window(60, 3);
  window(0, 0) = 10.0;
  window(0, 1) = 10.0;
  window(0, 2) = 10.0;
  for (int t = 1; t < 60; ++t) {
    window(t, 0) = window(t - 1, 0) * std::exp(0.004 + 0.0004 * rng.next_gaussian());
    window(t, 1) = window(t - 1, 1) * std::exp(0.003 + 0.012 * rng.next_gaussian());
    window(t, 2) = window(t - 1, 2) * std::exp(0.003 + 0.015 * rng.next_gaussian());
  }
  BacktestConfig config;
  const BacktestReport report =
      backtest({window}, {window}, Eigen::VectorXd::Zero(3), config);
  REQUIRE(report.windows.size() == 1);
  REQUIRE(report.windows[0].selected.size() >= 1);
  // asset 0 must be selected and dominate both weight vectors
  const auto& sel = report.windows[0].selected;
  auto pos = std::find(sel.begin(), sel.end(), 0);
  REQUIRE(pos != sel.end());
  const auto j = static_cast<Eigen::Index>(pos - sel.begin());
  CHECK(report.windows[0].mean_variance.weights[j] > 0.9);
  CHECK(report.windows[0].minimum_variance.weights[j] > 0.9);
}
