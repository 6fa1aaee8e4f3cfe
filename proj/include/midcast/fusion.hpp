#pragma once

#include <Eigen/Dense>
#include <vector>

#include "midcast/errors.hpp"
#include "midcast/hmm.hpp"

namespace midcast {

// Coefficients of the refined prediction
//   x_hat = alpha * price_pred + lambda * rho * market_pred
//         + eta * rho + gamma * state + c
// where the state term is either a scalar index or a 4-way one-hot.
struct FusionWeights {
  double alpha = 0.0;
  double lambda_ = 0.0;
  double eta = 0.0;
  Eigen::VectorXd gamma;  // size 1 (scalar mode) or 4 (one-hot mode)
  double c = 0.0;
  bool one_hot = false;
  bool rank_deficient = false;  // ridge fallback engaged during fit
};

struct FusionDataset {
  Eigen::VectorXd price_pred;
  Eigen::VectorXd market_pred;
  Eigen::VectorXd rho;     // per-window correlation, constant within a window
  Eigen::VectorXi state;   // decoded hidden state per row
  Eigen::VectorXd target;  // real normalized price

  Eigen::Index rows() const { return price_pred.size(); }
  void append(const FusionDataset& other);
};

double correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& m);

double market_beta(const Eigen::VectorXd& r, const Eigen::VectorXd& rm);

// One 60-step window: rho is computed once from the predicted price/market
// pair; states come from Viterbi over predicted (price, volume feature).
FusionDataset build_dataset(const Eigen::VectorXd& price_pred,
                            const Eigen::VectorXd& market_pred,
                            const Eigen::VectorXd& volume_pred,
                            const GaussianHmm& hmm,
                            const Eigen::VectorXd& target,
                            bool log_volume = true);

FusionWeights fit_fusion(const FusionDataset& data, bool one_hot = false);

double refine_prediction(double price_pred, double market_pred, double rho,
                         int state, const FusionWeights& weights);

double volume_feature(double volume, bool log_volume);

}  // namespace midcast
