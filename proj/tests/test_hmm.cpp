#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "midcast/hmm.hpp"
#include "midcast/rng.hpp"

using namespace midcast;

namespace {

double log_density(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& mean,
                   const Eigen::RowVectorXd& var) {
  double acc = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double r = x[d] - mean[d];
    acc += -0.5 * (std::log(2.0 * M_PI * var[d]) + r * r / var[d]);
  }
  return acc;
}

double path_log_prob(const ObservationSequence& obs, const GaussianHmm& m,
                     const std::vector<int>& path) {
  double lp = std::log(m.initial[path[0]]) +
              log_density(obs.row(0), m.means.row(path[0]),
                          m.variances.row(path[0]));
  for (Eigen::Index t = 1; t < obs.rows(); ++t)
    lp += std::log(m.transition(path[t - 1], path[t])) +
          log_density(obs.row(t), m.means.row(path[t]),
                      m.variances.row(path[t]));
  return lp;
}

// exhaustive sum over all K^T state paths
double brute_force_ll(const ObservationSequence& obs, const GaussianHmm& m) {
  const auto T = static_cast<int>(obs.rows());
  std::vector<double> lps;
  std::vector<int> path(T, 0);
  long total = 1;
  for (int t = 0; t < T; ++t) total *= m.K;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % m.K);
      c /= m.K;
    }
    lps.push_back(path_log_prob(obs, m, path));
  }
  const double mx = *std::max_element(lps.begin(), lps.end());
  double s = 0.0;
  for (double lp : lps) s += std::exp(lp - mx);
  return mx + std::log(s);
}

// exhaustive argmax with lower-lexicographic tie preference
std::vector<int> brute_force_viterbi(const ObservationSequence& obs,
                                     const GaussianHmm& m) {
  const auto T = static_cast<int>(obs.rows());
  std::vector<int> best, path(T, 0);
  double best_lp = -1e308;
  long total = 1;
  for (int t = 0; t < T; ++t) total *= m.K;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % m.K);
      c /= m.K;
    }
    const double lp = path_log_prob(obs, m, path);
    if (lp > best_lp + 1e-12) {
      best_lp = lp;
      best = path;
    }
  }
  return best;
}

GaussianHmm random_model(int K, int D, Rng& rng) {
  GaussianHmm m;
  m.K = K;
  m.initial.resize(K);
  m.transition.resize(K, K);
  m.means.resize(K, D);
  m.variances.resize(K, D);
  for (int k = 0; k < K; ++k) {
    m.initial[k] = 0.1 + rng.next_unit();
    for (int j = 0; j < K; ++j) m.transition(k, j) = 0.1 + rng.next_unit();
    m.transition.row(k) /= m.transition.row(k).sum();
    for (int d = 0; d < D; ++d) {
      m.means(k, d) = rng.next_uniform(-2.0, 2.0);
      m.variances(k, d) = rng.next_uniform(0.2, 1.5);
    }
  }
  m.initial /= m.initial.sum();
  return m;
}

ObservationSequence random_obs(int T, int D, Rng& rng) {
  ObservationSequence obs(T, D);
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) obs(t, d) = rng.next_uniform(-2.5, 2.5);
  return obs;
}

}  // namespace

TEST_CASE("single state likelihood is the sum of per-step log densities") {
  Rng rng(1);
  const GaussianHmm m = random_model(1, 2, rng);
  const ObservationSequence obs = random_obs(20, 2, rng);
  double expected = 0.0;
  for (int t = 0; t < 20; ++t)
    expected += log_density(obs.row(t), m.means.row(0), m.variances.row(0));
  CHECK(forward_log_likelihood(obs, m) ==
        doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("one observation under two states is a log mixture") {
  Rng rng(2);
  const GaussianHmm m = random_model(2, 2, rng);
  const ObservationSequence obs = random_obs(1, 2, rng);
  const double mix =
      m.initial[0] *
          std::exp(log_density(obs.row(0), m.means.row(0), m.variances.row(0))) +
      m.initial[1] *
          std::exp(log_density(obs.row(0), m.means.row(1), m.variances.row(1)));
  CHECK(forward_log_likelihood(obs, m) ==
        doctest::Approx(std::log(mix)).epsilon(1e-10));
}

TEST_CASE("three steps of two states match exhaustive path enumeration") {
  GaussianHmm m;
  m.K = 2;
  m.initial.resize(2);
  m.initial << 0.6, 0.4;
  m.transition.resize(2, 2);
  m.transition << 0.7, 0.3, 0.2, 0.8;
  m.means.resize(2, 2);
  m.means << 0.0, 0.0, 1.0, 2.0;
  m.variances = Eigen::MatrixXd::Constant(2, 2, 0.5);
  ObservationSequence obs(3, 2);
  obs << 0.1, -0.2, 0.9, 1.8, 1.1, 2.2;
  CHECK(forward_log_likelihood(obs, m) ==
        doctest::Approx(brute_force_ll(obs, m)).epsilon(1e-10));
}

TEST_CASE("forward and viterbi agree with brute force on small instances") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + static_cast<int>(rng.next_u64() % 2);
    const int T = 2 + static_cast<int>(rng.next_u64() % 5);
    const GaussianHmm m = random_model(K, 2, rng);
    const ObservationSequence obs = random_obs(T, 2, rng);
    CHECK(forward_log_likelihood(obs, m) ==
          doctest::Approx(brute_force_ll(obs, m)).epsilon(1e-8));
    const std::vector<int> path = viterbi(obs, m);
    const std::vector<int> oracle = brute_force_viterbi(obs, m);
    CHECK(path_log_prob(obs, m, path) ==
          doctest::Approx(path_log_prob(obs, m, oracle)).epsilon(1e-9));
  }
}

TEST_CASE("state relabeling leaves the likelihood unchanged") {
  Rng rng(4);
  const GaussianHmm m = random_model(3, 2, rng);
  const ObservationSequence obs = random_obs(15, 2, rng);
  const int perm[3] = {2, 0, 1};
  GaussianHmm p = m;
  for (int i = 0; i < 3; ++i) {
    p.initial[perm[i]] = m.initial[i];
    p.means.row(perm[i]) = m.means.row(i);
    p.variances.row(perm[i]) = m.variances.row(i);
    for (int j = 0; j < 3; ++j) p.transition(perm[i], perm[j]) = m.transition(i, j);
  }
  CHECK(forward_log_likelihood(obs, p) ==
        doctest::Approx(forward_log_likelihood(obs, m)).epsilon(1e-12));
}

TEST_CASE("single-state EM reduces to sample moments") {
  Rng rng(5);
  ObservationSequence obs = random_obs(200, 2, rng);
  const BaumWelchResult r = baum_welch({obs}, 1, 3);
  for (int d = 0; d < 2; ++d) {
    const double mean = obs.col(d).mean();
    const double var = (obs.col(d).array() - mean).square().mean();
    CHECK(r.model.means(0, d) == doctest::Approx(mean).epsilon(1e-9));
    CHECK(r.model.variances(0, d) == doctest::Approx(var).epsilon(1e-9));
  }
}

TEST_CASE("likelihood is monotone and rows stay stochastic through EM") {
  Rng rng(6);
  // one 60 x 2 window with mixed regimes
  ObservationSequence obs(60, 2);
  for (int t = 0; t < 60; ++t) {
    const bool high = (t / 15) % 2 == 0;
    obs(t, 0) = (high ? 0.8 : 0.2) + 0.05 * rng.next_gaussian();
    obs(t, 1) = (t % 2 == 0 ? 14.0 : 13.0) + 0.1 * rng.next_gaussian();
  }
  const BaumWelchResult r = baum_welch({obs}, 4, 10);
  REQUIRE(r.log_likelihood.size() == 10);
  for (std::size_t it = 1; it < 10; ++it)
    CHECK(r.log_likelihood[it] >= r.log_likelihood[it - 1] - 1e-8);
  CHECK(r.model.initial.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.model.initial.minCoeff() >= 0.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.model.transition.row(i).sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.model.transition.row(i).minCoeff() >= 0.0);
  }
  CHECK(r.model.variances.minCoeff() >= kVarianceFloor);
}

TEST_CASE("a planted two-state model is recovered") {
  Rng rng(7);
  GaussianHmm truth;
  truth.K = 2;
  truth.initial.resize(2);
  truth.initial << 0.5, 0.5;
  truth.transition.resize(2, 2);
  truth.transition << 0.9, 0.1, 0.1, 0.9;
  truth.means.resize(2, 2);
  truth.means << 0.0, 0.0, 3.0, -3.0;
  truth.variances = Eigen::MatrixXd::Constant(2, 2, 0.25);

  std::vector<ObservationSequence> seqs;
  for (int s = 0; s < 5; ++s) {
    ObservationSequence obs(200, 2);
    int state = rng.next_unit() < 0.5 ? 0 : 1;
    for (int t = 0; t < 200; ++t) {
      if (t > 0 && rng.next_unit() < 0.1) state = 1 - state;
      for (int d = 0; d < 2; ++d)
        obs(t, d) = truth.means(state, d) + 0.5 * rng.next_gaussian();
    }
    seqs.push_back(obs);
  }
  const BaumWelchResult r = baum_welch(seqs, 2, 30);
  // match recovered states to the truth by the first mean dimension
  const int a = r.model.means(0, 0) < r.model.means(1, 0) ? 0 : 1;
  CHECK(std::abs(r.model.means(a, 0) - 0.0) < 0.1);
  CHECK(std::abs(r.model.means(a, 1) - 0.0) < 0.1);
  CHECK(std::abs(r.model.means(1 - a, 0) - 3.0) < 0.1);
  CHECK(std::abs(r.model.means(1 - a, 1) + 3.0) < 0.1);
}

TEST_CASE("too little data raises InsufficientData") {
  CHECK_THROWS_AS(baum_welch({}, 2, 5), InsufficientData);
  ObservationSequence one(1, 2);
  one << 0.5, 0.5;
  CHECK_THROWS_AS(baum_welch({one}, 4, 5), InsufficientData);
}

TEST_CASE("viterbi degenerate and emission-dominated cases") {
  Rng rng(8);
  const GaussianHmm single = random_model(1, 2, rng);
  const ObservationSequence obs = random_obs(12, 2, rng);
  for (int s : viterbi(obs, single)) CHECK(s == 0);

  // two far-apart states, near-uniform transitions: emissions decide
  GaussianHmm m = random_model(2, 2, rng);
  m.initial << 0.5, 0.5;
  m.transition << 0.5, 0.5, 0.5, 0.5;
  m.means << -5.0, -5.0, 5.0, 5.0;
  m.variances = Eigen::MatrixXd::Constant(2, 2, 0.5);
  ObservationSequence alt(8, 2);
  for (int t = 0; t < 8; ++t) {
    const double center = t % 2 == 0 ? -5.0 : 5.0;
    alt(t, 0) = center + 0.1 * rng.next_gaussian();
    alt(t, 1) = center + 0.1 * rng.next_gaussian();
  }
  const std::vector<int> path = viterbi(alt, m);
  for (int t = 0; t < 8; ++t) CHECK(path[t] == t % 2);
}

TEST_CASE("exact ties resolve to the lower state index") {
  GaussianHmm m;
  m.K = 2;
  m.initial.resize(2);
  m.initial << 0.5, 0.5;
  m.transition.resize(2, 2);
  m.transition << 0.5, 0.5, 0.5, 0.5;
  m.means = Eigen::MatrixXd::Zero(2, 2);  // identical states
  m.variances = Eigen::MatrixXd::Constant(2, 2, 1.0);
  ObservationSequence obs = Eigen::MatrixXd::Zero(6, 2);
  for (int s : viterbi(obs, m)) CHECK(s == 0);
}

TEST_CASE("quadrant means get the four regime labels") {
  GaussianHmm m;
  m.K = 4;
  m.initial = Eigen::VectorXd::Constant(4, 0.25);
  m.transition = Eigen::MatrixXd::Constant(4, 4, 0.25);
  m.means.resize(4, 2);  // columns are (price, volume)
  m.means << 0.9, 0.9,   // high price, high volume
             0.1, 0.9,   // low price, high volume
             0.9, 0.1,   // high price, low volume
             0.1, 0.1;   // low price, low volume
  m.variances = Eigen::MatrixXd::Constant(4, 2, 0.01);
  const StateLabels labels = state_labels(m);
  CHECK_FALSE(labels.degenerate);
  CHECK(labels.labels[0] == Regime::HighVolumeHighPrice);
  CHECK(labels.labels[1] == Regime::HighVolumeLowPrice);
  CHECK(labels.labels[2] == Regime::LowVolumeHighPrice);
  CHECK(labels.labels[3] == Regime::LowVolumeLowPrice);

  std::set<std::string> names;
  for (Regime r : labels.labels) names.insert(regime_name(r));
  CHECK(names.size() == 4);
}

TEST_CASE("identical means degrade to index-ordered labels") {
  GaussianHmm m;
  m.K = 4;
  m.initial = Eigen::VectorXd::Constant(4, 0.25);
  m.transition = Eigen::MatrixXd::Constant(4, 4, 0.25);
  m.means = Eigen::MatrixXd::Constant(4, 2, 0.5);
  m.variances = Eigen::MatrixXd::Constant(4, 2, 0.01);
  const StateLabels labels = state_labels(m);
  CHECK(labels.degenerate);
  CHECK(labels.labels[0] == Regime::HighVolumeHighPrice);
  CHECK(labels.labels[3] == Regime::LowVolumeLowPrice);

  GaussianHmm three = m;
  three.K = 3;
  three.initial = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  three.transition = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  three.means = Eigen::MatrixXd::Constant(3, 2, 0.5);
  three.variances = Eigen::MatrixXd::Constant(3, 2, 0.01);
  CHECK_THROWS_AS(state_labels(three), WrongStateCount);
}
