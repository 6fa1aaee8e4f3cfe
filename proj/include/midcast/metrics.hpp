#pragma once

#include <Eigen/Dense>
#include <vector>

#include "midcast/errors.hpp"

namespace midcast {

// Real and predicted prices over the concatenated test windows.
struct PredictionPanel {
  Eigen::MatrixXd real;       // day x stock, > 0
  Eigen::MatrixXd predicted;  // day x stock
  std::vector<int> window_starts;  // first day index of each window
  int window_length = 60;
  int midterm_first = 30;  // inclusive, within each window
  int midterm_last = 59;   // inclusive

  Eigen::Index days() const { return real.rows(); }
  Eigen::Index stocks() const { return real.cols(); }
};

enum class ReturnConvention {
  LogReturnProduct,  // C = prod(1 + log return), literal form
  Simple,            // C = prod(X_{t+1}/X_t)
};

// 1 - mean relative absolute error across stocks on one day
double mpa(const PredictionPanel& panel, int day);

// mean of mpa over days 30..59 of every window
double midterm_mean_mpa(const PredictionPanel& panel);

// fraction of (stock, window) pairs whose predicted and real first-to-last
// directions agree (inclusive comparisons, flat counts as both)
double trend_accuracy(const PredictionPanel& panel);

Eigen::VectorXd log_returns(const Eigen::VectorXd& prices);

double cumulative_return(const Eigen::VectorXd& prices,
                         ReturnConvention conv = ReturnConvention::LogReturnProduct);

}  // namespace midcast
