#include "midcast/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace midcast {

void FusionDataset::append(const FusionDataset& other) {
  auto cat_d = [](Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    a = std::move(out);
  };
  cat_d(price_pred, other.price_pred);
  cat_d(market_pred, other.market_pred);
  cat_d(rho, other.rho);
  cat_d(target, other.target);
  Eigen::VectorXi s(state.size() + other.state.size());
  s << state, other.state;
  state = std::move(s);
}

double correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& m) {
  if (x.size() != m.size()) throw DimensionMismatch("correlation: length mismatch");
  if (x.size() < 2) throw DegenerateVector("correlation: need at least 2 points");
  const Eigen::ArrayXd xc = x.array() - x.mean();
  const Eigen::ArrayXd mc = m.array() - m.mean();
  const double sx = std::sqrt(xc.square().sum());
  const double sm = std::sqrt(mc.square().sum());
  if (sx == 0.0 || sm == 0.0)
    throw DegenerateVector("correlation: constant input");
  double rho = (xc * mc).sum() / (sx * sm);
  return std::clamp(rho, -1.0, 1.0);
}

double market_beta(const Eigen::VectorXd& r, const Eigen::VectorXd& rm) {
  if (r.size() != rm.size()) throw DimensionMismatch("market_beta: length mismatch");
  if (r.size() < 2) throw DegenerateVector("market_beta: need at least 2 points");
  const Eigen::ArrayXd rc = r.array() - r.mean();
  const Eigen::ArrayXd mc = rm.array() - rm.mean();
  const double var_m = mc.square().sum();
  if (var_m == 0.0) throw DegenerateVector("market_beta: constant market returns");
  return (rc * mc).sum() / var_m;
}

double volume_feature(double volume, bool log_volume) {
  return log_volume ? std::log1p(std::max(volume, 0.0)) : volume;
}

FusionDataset build_dataset(const Eigen::VectorXd& price_pred,
                            const Eigen::VectorXd& market_pred,
                            const Eigen::VectorXd& volume_pred,
                            const GaussianHmm& hmm,
                            const Eigen::VectorXd& target,
                            bool log_volume) {
  const auto T = price_pred.size();
  if (market_pred.size() != T || volume_pred.size() != T || target.size() != T)
    throw DimensionMismatch("build_dataset: column length mismatch");

  FusionDataset ds;
  ds.price_pred = price_pred;
  ds.market_pred = market_pred;
  ds.target = target;
  const double rho = correlation(price_pred, market_pred);
  ds.rho = Eigen::VectorXd::Constant(T, rho);

  ObservationSequence obs(T, 2);
  for (Eigen::Index t = 0; t < T; ++t) {
    obs(t, 0) = price_pred[t];
    obs(t, 1) = volume_feature(volume_pred[t], log_volume);
  }
  const std::vector<int> path = viterbi(obs, hmm);
  ds.state.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) ds.state[t] = path[static_cast<std::size_t>(t)];
  return ds;
}

FusionWeights fit_fusion(const FusionDataset& data, bool one_hot) {
  const auto n = data.rows();
  const int n_states = one_hot
                           ? (data.state.size() > 0 ? data.state.maxCoeff() + 1 : 1)
                           : 1;
  const int state_cols = one_hot ? std::max(n_states, 1) : 1;
  const int cols = 3 + state_cols + 1;
  if (n < cols)
    throw InsufficientData("fit_fusion: fewer rows than coefficients");

  Eigen::MatrixXd X(n, cols);
  for (Eigen::Index t = 0; t < n; ++t) {
    X(t, 0) = data.price_pred[t];
    X(t, 1) = data.rho[t] * data.market_pred[t];
    X(t, 2) = data.rho[t];
    if (one_hot) {
      for (int s = 0; s < state_cols; ++s) X(t, 3 + s) = data.state[t] == s ? 1.0 : 0.0;
    } else {
      X(t, 3) = static_cast<double>(data.state[t]);
    }
    X(t, cols - 1) = 1.0;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  FusionWeights w;
  w.one_hot = one_hot;
  Eigen::VectorXd beta;
  if (qr.rank() < cols) {
    // collinear regressors: ridge fallback keeps the solve well posed
    const Eigen::MatrixXd G =
        X.transpose() * X + 1e-8 * Eigen::MatrixXd::Identity(cols, cols);
    beta = G.ldlt().solve(X.transpose() * data.target);
    w.rank_deficient = true;
  } else {
    beta = qr.solve(data.target);
  }
  w.alpha = beta[0];
  w.lambda_ = beta[1];
  w.eta = beta[2];
  w.gamma = beta.segment(3, state_cols);
  w.c = beta[cols - 1];
  return w;
}

double refine_prediction(double price_pred, double market_pred, double rho,
                         int state, const FusionWeights& weights) {
  double g;
  if (weights.one_hot) {
    g = (state >= 0 && state < weights.gamma.size()) ? weights.gamma[state] : 0.0;
  } else {
    g = weights.gamma[0] * static_cast<double>(state);
  }
  return weights.alpha * price_pred + weights.lambda_ * rho * market_pred +
         weights.eta * rho + g + weights.c;
}

}  // namespace midcast
