#include "midcast/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace midcast {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log N(x; mu, diag(var)) per state, one row of T x K
Eigen::MatrixXd log_emissions(const ObservationSequence& obs,
                              const GaussianHmm& m) {
  const auto T = obs.rows();
  const auto D = obs.cols();
  Eigen::MatrixXd B(T, m.K);
  for (int k = 0; k < m.K; ++k) {
    double norm = 0.0;
    for (Eigen::Index d = 0; d < D; ++d)
      norm += -0.5 * (kLog2Pi + std::log(m.variances(k, d)));
    for (Eigen::Index t = 0; t < T; ++t) {
      double q = 0.0;
      for (Eigen::Index d = 0; d < D; ++d) {
        const double r = obs(t, d) - m.means(k, d);
        q += r * r / m.variances(k, d);
      }
      B(t, k) = norm - 0.5 * q;
    }
  }
  return B;
}

struct ForwardBackward {
  Eigen::MatrixXd gamma;                // T x K posteriors
  std::vector<Eigen::MatrixXd> xi;     // T-1 entries, K x K
  double log_likelihood = 0.0;
};

ForwardBackward forward_backward(const ObservationSequence& obs,
                                 const GaussianHmm& m) {
  const auto T = obs.rows();
  const int K = m.K;
  const Eigen::MatrixXd logB = log_emissions(obs, m);

  // scaled forward: per-step max subtracted before exponentiation
  Eigen::MatrixXd e(T, K);
  Eigen::VectorXd mshift(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    mshift[t] = logB.row(t).maxCoeff();
    e.row(t) = (logB.row(t).array() - mshift[t]).exp();
  }

  Eigen::MatrixXd alpha(T, K);
  Eigen::VectorXd scale(T);
  Eigen::VectorXd a = m.initial.cwiseProduct(e.row(0).transpose());
  scale[0] = a.sum();
  alpha.row(0) = (a / scale[0]).transpose();
  double ll = std::log(scale[0]) + mshift[0];
  for (Eigen::Index t = 1; t < T; ++t) {
    a = (m.transition.transpose() * alpha.row(t - 1).transpose())
            .cwiseProduct(e.row(t).transpose());
    scale[t] = a.sum();
    alpha.row(t) = (a / scale[t]).transpose();
    ll += std::log(scale[t]) + mshift[t];
  }

  Eigen::MatrixXd beta(T, K);
  beta.row(T - 1).setOnes();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const Eigen::VectorXd w =
        e.row(t + 1).transpose().cwiseProduct(beta.row(t + 1).transpose());
    beta.row(t) = (m.transition * w).transpose() / scale[t + 1];
  }

  ForwardBackward fb;
  fb.log_likelihood = ll;
  fb.gamma = alpha.cwiseProduct(beta);
  for (Eigen::Index t = 0; t < T; ++t) fb.gamma.row(t) /= fb.gamma.row(t).sum();
  fb.xi.reserve(static_cast<std::size_t>(T - 1));
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    Eigen::MatrixXd x(K, K);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        x(i, j) = alpha(t, i) * m.transition(i, j) * e(t + 1, j) *
                  beta(t + 1, j) / scale[t + 1];
    x /= x.sum();
    fb.xi.push_back(std::move(x));
  }
  return fb;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

GaussianHmm init_model(const std::vector<ObservationSequence>& sequences, int K) {
  const auto D = sequences.front().cols();
  Eigen::Index total = 0;
  for (const auto& s : sequences) total += s.rows();

  std::vector<std::vector<double>> dims(static_cast<std::size_t>(D));
  for (const auto& s : sequences)
    for (Eigen::Index t = 0; t < s.rows(); ++t)
      for (Eigen::Index d = 0; d < D; ++d)
        dims[static_cast<std::size_t>(d)].push_back(s(t, d));

  GaussianHmm m;
  m.K = K;
  m.means.resize(K, D);
  m.variances.resize(K, D);
  if (K == 4 && D == 2) {
    // quadrant seeding across the two dimensions
    const double q0[2] = {quantile(dims[0], 0.25), quantile(dims[0], 0.75)};
    const double q1[2] = {quantile(dims[1], 0.25), quantile(dims[1], 0.75)};
    int k = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        m.means(k, 0) = q0[a];
        m.means(k, 1) = q1[b];
        ++k;
      }
  } else {
    for (int k = 0; k < K; ++k)
      for (Eigen::Index d = 0; d < D; ++d)
        m.means(k, d) = quantile(dims[static_cast<std::size_t>(d)],
                                 (k + 0.5) / static_cast<double>(K));
  }
  for (Eigen::Index d = 0; d < D; ++d) {
    double mean = 0.0;
    for (double x : dims[static_cast<std::size_t>(d)]) mean += x;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (double x : dims[static_cast<std::size_t>(d)]) var += (x - mean) * (x - mean);
    var /= static_cast<double>(total);
    var = std::max(var, kVarianceFloor);
    for (int k = 0; k < K; ++k) m.variances(k, d) = var;
  }

  // uniform plus a small deterministic perturbation, renormalized
  m.initial.setConstant(K, 1.0 / K);
  m.transition.resize(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j)
      m.transition(i, j) = 1.0 / K + ((i + j) % 2 == 0 ? 1e-3 : -1e-3);
    m.transition.row(i) /= m.transition.row(i).sum();
  }
  return m;
}

}  // namespace

double forward_log_likelihood(const ObservationSequence& obs,
                              const GaussianHmm& model) {
  if (obs.rows() == 0) throw DimensionMismatch("empty observation sequence");
  if (obs.cols() != model.dim())
    throw DimensionMismatch("observation dimension does not match model");
  return forward_backward(obs, model).log_likelihood;
}

BaumWelchResult baum_welch(const std::vector<ObservationSequence>& sequences,
                           int K, int iterations) {
  if (K < 1 || iterations < 1) throw Error("baum_welch: K and iterations must be >= 1");
  Eigen::Index total = 0;
  for (const auto& s : sequences) total += s.rows();
  if (sequences.empty() || total < K)
    throw InsufficientData("baum_welch: need at least K observations");

  const auto D = sequences.front().cols();
  BaumWelchResult result;
  result.model = init_model(sequences, K);
  GaussianHmm& m = result.model;

  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd init_acc = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd trans_num = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd trans_den = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd gamma_sum = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd mean_acc = Eigen::MatrixXd::Zero(K, D);
    double ll = 0.0;

    std::vector<Eigen::MatrixXd> gammas;
    gammas.reserve(sequences.size());
    for (const auto& obs : sequences) {
      ForwardBackward fb = forward_backward(obs, m);
      ll += fb.log_likelihood;
      init_acc += fb.gamma.row(0).transpose();
      for (const auto& x : fb.xi) trans_num += x;
      for (Eigen::Index t = 0; t + 1 < obs.rows(); ++t)
        trans_den += fb.gamma.row(t).transpose();
      for (Eigen::Index t = 0; t < obs.rows(); ++t) {
        gamma_sum += fb.gamma.row(t).transpose();
        mean_acc += fb.gamma.row(t).transpose() * obs.row(t);
      }
      gammas.push_back(std::move(fb.gamma));
    }
    result.log_likelihood.push_back(ll);

    m.initial = init_acc / static_cast<double>(sequences.size());
    for (int i = 0; i < K; ++i) {
      if (trans_den[i] > 0.0)
        m.transition.row(i) = trans_num.row(i) / trans_den[i];
      m.transition.row(i) /= m.transition.row(i).sum();
    }
    Eigen::MatrixXd new_means = m.means;
    for (int k = 0; k < K; ++k)
      if (gamma_sum[k] > 0.0) new_means.row(k) = mean_acc.row(k) / gamma_sum[k];

    Eigen::MatrixXd var_acc = Eigen::MatrixXd::Zero(K, D);
    std::size_t si = 0;
    for (const auto& obs : sequences) {
      const Eigen::MatrixXd& g = gammas[si++];
      for (Eigen::Index t = 0; t < obs.rows(); ++t)
        for (int k = 0; k < K; ++k)
          var_acc.row(k) += g(t, k) * (obs.row(t) - new_means.row(k))
                                          .array()
                                          .square()
                                          .matrix();
    }
    m.means = new_means;
    for (int k = 0; k < K; ++k)
      for (Eigen::Index d = 0; d < D; ++d)
        m.variances(k, d) = gamma_sum[k] > 0.0
                                ? std::max(var_acc(k, d) / gamma_sum[k], kVarianceFloor)
                                : m.variances(k, d);
  }
  return result;
}

std::vector<int> viterbi(const ObservationSequence& obs, const GaussianHmm& model) {
  const auto T = obs.rows();
  const int K = model.K;
  if (T == 0) throw DimensionMismatch("empty observation sequence");
  const Eigen::MatrixXd logB = log_emissions(obs, model);

  Eigen::MatrixXd delta(T, K);
  Eigen::MatrixXi from(T, K);
  const double tiny = -1e300;
  for (int k = 0; k < K; ++k)
    delta(0, k) = (model.initial[k] > 0.0 ? std::log(model.initial[k]) : tiny) +
                  logB(0, k);
  from.row(0).setZero();
  for (Eigen::Index t = 1; t < T; ++t) {
    for (int j = 0; j < K; ++j) {
      double best = -1e308;
      int arg = 0;
      for (int i = 0; i < K; ++i) {
        const double lp = model.transition(i, j) > 0.0
                              ? std::log(model.transition(i, j))
                              : tiny;
        const double cand = delta(t - 1, i) + lp;
        if (cand > best) {  // strict: ties resolve to the lower index
          best = cand;
          arg = i;
        }
      }
      delta(t, j) = best + logB(t, j);
      from(t, j) = arg;
    }
  }

  std::vector<int> path(static_cast<std::size_t>(T));
  int best = 0;
  for (int k = 1; k < K; ++k)
    if (delta(T - 1, k) > delta(T - 1, best)) best = k;
  path.back() = best;
  for (Eigen::Index t = T - 1; t > 0; --t)
    path[static_cast<std::size_t>(t - 1)] = from(t, path[static_cast<std::size_t>(t)]);
  return path;
}

StateLabels state_labels(const GaussianHmm& model) {
  if (model.K != 4) throw WrongStateCount("state_labels requires K = 4");
  if (model.dim() != 2) throw DimensionMismatch("state_labels requires 2-dim emissions");

  auto median4 = [](Eigen::VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    return 0.5 * (v[1] + v[2]);
  };
  const double med_price = median4(model.means.col(0));
  const double med_vol = median4(model.means.col(1));

  StateLabels out;
  out.labels.resize(4);
  std::set<std::pair<bool, bool>> seen;
  for (int k = 0; k < 4; ++k) {
    const bool high_price = model.means(k, 0) > med_price;
    const bool high_vol = model.means(k, 1) > med_vol;
    seen.insert({high_vol, high_price});
    if (high_vol && high_price)
      out.labels[k] = Regime::HighVolumeHighPrice;
    else if (high_vol)
      out.labels[k] = Regime::HighVolumeLowPrice;
    else if (high_price)
      out.labels[k] = Regime::LowVolumeHighPrice;
    else
      out.labels[k] = Regime::LowVolumeLowPrice;
  }
  if (seen.size() != 4) {
    out.degenerate = true;
    out.labels = {Regime::HighVolumeHighPrice, Regime::HighVolumeLowPrice,
                  Regime::LowVolumeHighPrice, Regime::LowVolumeLowPrice};
  }
  return out;
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::HighVolumeHighPrice: return "high-volume/high-price";
    case Regime::HighVolumeLowPrice: return "high-volume/low-price";
    case Regime::LowVolumeHighPrice: return "low-volume/high-price";
    case Regime::LowVolumeLowPrice: return "low-volume/low-price";
  }
  return "unknown";
}

}  // namespace midcast
