#include "midcast/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "midcast/rng.hpp"

namespace midcast {

namespace {

Eigen::VectorXd daily_means(const ReturnPanel& panel) {
  return panel.returns.colwise().mean();
}

// unbiased sample covariance of daily returns
Eigen::MatrixXd daily_covariance(const ReturnPanel& panel) {
  const auto T = panel.returns.rows();
  const Eigen::MatrixXd centered =
      panel.returns.rowwise() - panel.returns.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(T - 1);
}

struct Objective {
  // maximize value(w); grad filled by eval
  virtual double value(const Eigen::VectorXd& w) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w) const = 0;
  virtual ~Objective() = default;
};

// projected gradient ascent with backtracking line search
Eigen::VectorXd maximize_on_simplex(const Objective& obj, Eigen::VectorXd w,
                                    int max_iterations, double tol) {
  double step = 1.0;
  double f = obj.value(w);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd g = obj.gradient(w);
    bool moved = false;
    double t = step;
    for (int bt = 0; bt < 40; ++bt) {
      const Eigen::VectorXd cand = project_to_simplex(w + t * g);
      const double fc = obj.value(cand);
      if (fc > f + 1e-16) {
        const double move = (cand - w).norm();
        w = cand;
        f = fc;
        step = t * 2.0;
        moved = true;
        if (move < tol) return w;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return w;
}

struct SharpeObjective : Objective {
  Eigen::VectorXd mu;   // daily means
  Eigen::MatrixXd cov;  // daily covariance
  double ppy;
  double rf;

  double value(const Eigen::VectorXd& w) const override {
    const double r = ppy * mu.dot(w) - rf;
    const double var = ppy * w.dot(cov * w);
    if (var <= 1e-300) return r > 0.0 ? 1e12 : -1e12;
    return r / std::sqrt(var);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override {
    const double r = ppy * mu.dot(w) - rf;
    const double var = ppy * w.dot(cov * w);
    if (var <= 1e-300) return Eigen::VectorXd::Zero(w.size());
    const double sigma = std::sqrt(var);
    const Eigen::VectorXd dvar = 2.0 * ppy * (cov * w);
    return (ppy * mu.array() / sigma -
            r * (dvar.array() / (2.0 * sigma)) / var)
        .matrix();
  }
};

struct NegVarianceObjective : Objective {
  Eigen::MatrixXd cov;

  double value(const Eigen::VectorXd& w) const override { return -w.dot(cov * w); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override {
    return -2.0 * (cov * w);
  }
};

Eigen::VectorXd dirichlet_start(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double u = rng.next_unit();
    while (u <= 0.0) u = rng.next_unit();
    w[i] = -std::log(u);
  }
  return w / w.sum();
}

SolveResult solve(const Objective& obj, Eigen::Index n, const SolverOptions& opts) {
  Rng rng(opts.seed);
  Eigen::VectorXd best;
  double best_f = -1e308;
  for (int r = 0; r <= opts.restarts; ++r) {
    Eigen::VectorXd start = r == 0 ? Eigen::VectorXd::Constant(n, 1.0 / n)
                                   : dirichlet_start(rng, n);
    const Eigen::VectorXd w =
        maximize_on_simplex(obj, start, opts.max_iterations, opts.gradient_tolerance);
    const double f = obj.value(w);
    if (f > best_f) {
      best_f = f;
      best = w;
    }
  }
  SolveResult res;
  res.weights.w = best;
  res.objective = best_f;
  return res;
}

}  // namespace

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  // Duchi et al. 2008: sort, find the threshold, clip
  const auto n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  int rho = 0;
  double running = 0.0;
  for (int i = 0; i < n; ++i) {
    running += u[static_cast<std::size_t>(i)];
    const double t = (running - 1.0) / (i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0.0) {
      rho = i + 1;
      css = running;
    }
  }
  theta = (css - 1.0) / rho;
  return (v.array() - theta).max(0.0).matrix();
}

double annualized_return(const PortfolioWeights& w, const ReturnPanel& panel) {
  if (w.w.size() != panel.assets())
    throw DimensionMismatch("annualized_return: weight/asset mismatch");
  return panel.periods_per_year * daily_means(panel).dot(w.w);
}

double portfolio_variance(const PortfolioWeights& w, const ReturnPanel& panel) {
  if (w.w.size() != panel.assets())
    throw DimensionMismatch("portfolio_variance: weight/asset mismatch");
  return panel.periods_per_year * w.w.dot(daily_covariance(panel) * w.w);
}

SolveResult max_sharpe(const ReturnPanel& panel, double risk_free,
                       const SolverOptions& opts) {
  if (panel.assets() < 1) throw Error("max_sharpe: empty panel");
  SharpeObjective obj;
  obj.mu = daily_means(panel);
  obj.cov = daily_covariance(panel);
  obj.ppy = panel.periods_per_year;
  obj.rf = risk_free;
  SolveResult res = solve(obj, panel.assets(), opts);
  const double var = panel.periods_per_year * res.weights.w.dot(obj.cov * res.weights.w);
  if (var <= 1e-300) {
    res.zero_variance = true;
    res.objective = 0.0;
  }
  return res;
}

SolveResult min_variance(const ReturnPanel& panel, const SolverOptions& opts) {
  if (panel.assets() < 1) throw Error("min_variance: empty panel");
  NegVarianceObjective obj;
  obj.cov = daily_covariance(panel);
  SolveResult res = solve(obj, panel.assets(), opts);
  res.objective = panel.periods_per_year * res.weights.w.dot(obj.cov * res.weights.w);
  res.zero_variance = res.objective <= 1e-300;
  return res;
}

std::vector<int> select_assets(const std::vector<Eigen::VectorXd>& predicted_paths,
                               SelectionMode mode,
                               const Eigen::VectorXd& market_correlation,
                               ReturnConvention conv) {
  const auto L = static_cast<int>(predicted_paths.size());
  std::vector<int> universe(static_cast<std::size_t>(L));
  std::iota(universe.begin(), universe.end(), 0);

  double threshold = 1.15;
  if (mode == SelectionMode::Hc50Threshold) {
    threshold = 1.05;
    if (market_correlation.size() != L)
      throw DimensionMismatch("select_assets: correlation vector size mismatch");
    std::stable_sort(universe.begin(), universe.end(), [&](int a, int b) {
      return market_correlation[a] > market_correlation[b];
    });
    if (universe.size() > 50) universe.resize(50);
    std::sort(universe.begin(), universe.end());
  }

  std::vector<int> selected;
  for (int l : universe)
    if (cumulative_return(predicted_paths[static_cast<std::size_t>(l)], conv) > threshold)
      selected.push_back(l);
  return selected;
}

BacktestReport backtest(const std::vector<Eigen::MatrixXd>& predicted,
                        const std::vector<Eigen::MatrixXd>& realized,
                        const Eigen::VectorXd& market_correlation,
                        const BacktestConfig& config) {
  if (predicted.size() != realized.size())
    throw DimensionMismatch("backtest: window count mismatch");

  BacktestReport report;
  int counted = 0;
  for (std::size_t w = 0; w < predicted.size(); ++w) {
    const Eigen::MatrixXd& pred = predicted[w];
    const Eigen::MatrixXd& real = realized[w];
    if (pred.rows() != real.rows() || pred.cols() != real.cols())
      throw DimensionMismatch("backtest: predicted/realized shape mismatch");

    BacktestWindow bw;
    bw.index = static_cast<int>(w);

    std::vector<Eigen::VectorXd> paths;
    paths.reserve(static_cast<std::size_t>(pred.cols()));
    for (Eigen::Index l = 0; l < pred.cols(); ++l) paths.push_back(pred.col(l));
    bw.selected = select_assets(paths, config.mode, market_correlation,
                                config.convention);

    if (!bw.selected.empty()) {
      const auto n = static_cast<Eigen::Index>(bw.selected.size());
      Eigen::MatrixXd pred_ret(pred.rows() - 1, n);
      Eigen::MatrixXd real_ret(real.rows() - 1, n);
      Eigen::MatrixXd real_px(real.rows(), n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const int l = bw.selected[static_cast<std::size_t>(j)];
        pred_ret.col(j) = log_returns(pred.col(l));
        real_ret.col(j) = log_returns(real.col(l));
        real_px.col(j) = real.col(l);
      }
      ReturnPanel pred_panel{pred_ret};
      ReturnPanel real_panel{real_ret};

      auto evaluate = [&](const Eigen::VectorXd& weights) {
        WindowAllocation a;
        a.weights = weights;
        for (Eigen::Index j = 0; j < n; ++j)
          a.window_return += weights[j] *
                             (cumulative_return(real_px.col(j), config.convention) - 1.0);
        PortfolioWeights pw{weights};
        a.annual_return = annualized_return(pw, real_panel);
        const double var = portfolio_variance(pw, real_panel);
        a.sharpe = var > 0.0 ? (a.annual_return - config.risk_free) / std::sqrt(var)
                             : 0.0;
        return a;
      };

      bw.mean_variance =
          evaluate(max_sharpe(pred_panel, config.risk_free, config.solver).weights.w);
      bw.minimum_variance = evaluate(min_variance(pred_panel, config.solver).weights.w);
      report.avg_return_mean_variance += bw.mean_variance.window_return;
      report.avg_return_min_variance += bw.minimum_variance.window_return;
      report.avg_annual_return_mean_variance += bw.mean_variance.annual_return;
      report.avg_sharpe_mean_variance += bw.mean_variance.sharpe;
      ++counted;
    }
    report.windows.push_back(std::move(bw));
  }
  if (counted > 0) {
    report.avg_return_mean_variance /= counted;
    report.avg_return_min_variance /= counted;
    report.avg_annual_return_mean_variance /= counted;
    report.avg_sharpe_mean_variance /= counted;
  }
  return report;
}

}  // namespace midcast
