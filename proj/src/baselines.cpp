#include "midcast/baselines.hpp"

namespace midcast {

LinearAutoregressor fit_autoregressor(const RollingWindowSet& windows,
                                      double ridge_lambda, int channel) {
  if (ridge_lambda < 0.0) throw Error("ridge_lambda must be >= 0");
  const auto n = static_cast<Eigen::Index>(windows.n_pairs());
  if (n < windows.window_length)
    throw SeriesTooShort("fit_autoregressor: need at least window_length pairs");
  const auto p = windows.inputs.front().rows();  // lags

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = windows.inputs[static_cast<std::size_t>(i)].col(channel).transpose();
    y[i] = windows.targets[static_cast<std::size_t>(i)][channel];
  }

  // center so the intercept stays unpenalized
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  LinearAutoregressor model;
  model.ridge_lambda = ridge_lambda;
  if (ridge_lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
      throw RankDeficient("fit_autoregressor: collinear lag columns with lambda = 0");
    model.weights = qr.solve(yc);
  } else {
    const Eigen::MatrixXd G =
        Xc.transpose() * Xc + ridge_lambda * Eigen::MatrixXd::Identity(p, p);
    model.weights = G.ldlt().solve(Xc.transpose() * yc);
  }
  model.bias = y_mean - x_mean * model.weights;
  return model;
}

Eigen::VectorXd predict_full_sequence_baseline(const Eigen::VectorXd& window,
                                               const LinearAutoregressor& model,
                                               int horizon) {
  if (horizon < 1) throw Error("horizon must be >= 1");
  const auto p = model.weights.size();
  if (window.size() != p)
    throw DimensionMismatch("baseline window length must equal lag count");

  Eigen::VectorXd lags = window;
  Eigen::VectorXd path(horizon);
  for (int k = 0; k < horizon; ++k) {
    const double next = model.weights.dot(lags) + model.bias;
    path[k] = next;
    // shift left, append the prediction
    lags.head(p - 1) = lags.tail(p - 1).eval();
    lags[p - 1] = next;
  }
  return path;
}

}  // namespace midcast
