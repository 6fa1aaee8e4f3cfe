#pragma once

#include <Eigen/Dense>

#include "midcast/data.hpp"
#include "midcast/errors.hpp"

namespace midcast {

// Autoregressive point predictor over the 59 lagged values of one channel.
struct LinearAutoregressor {
  Eigen::VectorXd weights;  // one per lag, oldest first
  double bias = 0.0;
  double ridge_lambda = 0.0;
};

// Fits min ||y - Xw - b||^2 + lambda ||w||^2 on the training pairs
// (channel selects the column used; the intercept is not penalized).
LinearAutoregressor fit_autoregressor(const RollingWindowSet& windows,
                                      double ridge_lambda, int channel = 0);

// Recursive full-sequence prediction, same contract as the network path.
Eigen::VectorXd predict_full_sequence_baseline(const Eigen::VectorXd& window,
                                               const LinearAutoregressor& model,
                                               int horizon);

}  // namespace midcast
