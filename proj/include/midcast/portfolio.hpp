#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "midcast/errors.hpp"
#include "midcast/metrics.hpp"

namespace midcast {

struct ReturnPanel {
  Eigen::MatrixXd returns;  // day x asset, daily log returns
  double periods_per_year = 252.0;

  Eigen::Index assets() const { return returns.cols(); }
};

struct PortfolioWeights {
  Eigen::VectorXd w;  // on the simplex: w >= 0, sum = 1
};

struct SolverOptions {
  int restarts = 20;
  int max_iterations = 5000;
  double gradient_tolerance = 1e-10;
  std::uint64_t seed = 7;
};

struct SolveResult {
  PortfolioWeights weights;
  double objective = 0.0;      // Sharpe or annualized variance
  bool zero_variance = false;  // optimum sits on a riskless portfolio
};

enum class SelectionMode {
  AllThreshold,   // cumulative return > 1.15 over every asset
  Hc50Threshold,  // > 1.05 over the 50 most market-correlated assets
};

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

double annualized_return(const PortfolioWeights& w, const ReturnPanel& panel);
double portfolio_variance(const PortfolioWeights& w, const ReturnPanel& panel);

SolveResult max_sharpe(const ReturnPanel& panel, double risk_free = 0.015,
                       const SolverOptions& opts = {});
SolveResult min_variance(const ReturnPanel& panel, const SolverOptions& opts = {});

// predicted_paths: per asset, the denormalized predicted price path of one
// window; market_correlation: per asset, training-window correlation with
// the market (used by the HC mode only).
std::vector<int> select_assets(const std::vector<Eigen::VectorXd>& predicted_paths,
                               SelectionMode mode,
                               const Eigen::VectorXd& market_correlation,
                               ReturnConvention conv = ReturnConvention::LogReturnProduct);

struct BacktestConfig {
  SelectionMode mode = SelectionMode::AllThreshold;
  double risk_free = 0.015;
  ReturnConvention convention = ReturnConvention::LogReturnProduct;
  SolverOptions solver;
};

struct WindowAllocation {
  Eigen::VectorXd weights;
  double window_return = 0.0;      // realized, fraction of capital
  double annual_return = 0.0;      // realized, annualized
  double sharpe = 0.0;             // realized, annualized
};

struct BacktestWindow {
  int index = 0;
  std::vector<int> selected;  // asset indices; empty = window skipped
  WindowAllocation mean_variance;
  WindowAllocation minimum_variance;
};

struct BacktestReport {
  std::vector<BacktestWindow> windows;
  double avg_return_mean_variance = 0.0;
  double avg_return_min_variance = 0.0;
  double avg_annual_return_mean_variance = 0.0;
  double avg_sharpe_mean_variance = 0.0;
};

// One predicted and one realized price matrix (window_length x assets) per
// test window. Assets are selected and weighted on predictions, performance
// is accounted on realized prices.
BacktestReport backtest(const std::vector<Eigen::MatrixXd>& predicted,
                        const std::vector<Eigen::MatrixXd>& realized,
                        const Eigen::VectorXd& market_correlation,
                        const BacktestConfig& config);

}  // namespace midcast
