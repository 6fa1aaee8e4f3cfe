#pragma once

#include <json.hpp>
#include <string>

#include "midcast/data.hpp"
#include "midcast/fusion.hpp"
#include "midcast/hmm.hpp"
#include "midcast/lstm.hpp"

namespace midcast {

using Json = nlohmann::json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json lstm_to_json(const LstmNetwork& net);
LstmNetwork lstm_from_json(const Json& j);

Json hmm_to_json(const GaussianHmm& model);
GaussianHmm hmm_from_json(const Json& j);

Json fusion_to_json(const FusionWeights& w);
FusionWeights fusion_from_json(const Json& j);

Json normalization_to_json(const NormalizationParams& p);
NormalizationParams normalization_from_json(const Json& j);

// Per-stock container: network, HMM, fusion weights, normalization params
// and the training config, versioned so reloads are checked.
struct Checkpoint {
  int version = 1;
  std::string ticker;
  LstmNetwork lstm;
  GaussianHmm hmm;
  FusionWeights fusion;
  NormalizationParams price_norm;
  NormalizationParams market_norm;
  NormalizationParams volume_norm;
  Json train_config;
};

void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace midcast
