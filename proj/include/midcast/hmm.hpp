#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "midcast/errors.hpp"

namespace midcast {

// rows: (normalized price, volume feature), one per day
using ObservationSequence = Eigen::MatrixXd;

// K-state chain with diagonal-Gaussian emissions over 2-dim observations.
struct GaussianHmm {
  int K = 4;
  Eigen::VectorXd initial;     // K, sums to 1
  Eigen::MatrixXd transition;  // K x K, rows sum to 1
  Eigen::MatrixXd means;       // K x D
  Eigen::MatrixXd variances;   // K x D, >= variance floor

  Eigen::Index dim() const { return means.cols(); }
};

constexpr double kVarianceFloor = 1e-6;

double forward_log_likelihood(const ObservationSequence& obs,
                              const GaussianHmm& model);

struct BaumWelchResult {
  GaussianHmm model;
  std::vector<double> log_likelihood;  // total, one entry per iteration
};

BaumWelchResult baum_welch(const std::vector<ObservationSequence>& sequences,
                           int K, int iterations);

std::vector<int> viterbi(const ObservationSequence& obs, const GaussianHmm& model);

// Semantic regime names for K = 4, dims ordered (price, volume).
enum class Regime {
  HighVolumeHighPrice,
  HighVolumeLowPrice,
  LowVolumeHighPrice,
  LowVolumeLowPrice,
};

struct StateLabels {
  std::vector<Regime> labels;  // per state index
  bool degenerate = false;     // means indistinguishable, labels by index
};

StateLabels state_labels(const GaussianHmm& model);

std::string regime_name(Regime r);

}  // namespace midcast
