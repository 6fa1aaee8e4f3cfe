#include "midcast/checkpoint.hpp"

#include <fstream>

namespace midcast {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = data;  // column-major
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw Error("checkpoint: matrix payload size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(),
                                           static_cast<Eigen::Index>(data.size()));
}

Json lstm_to_json(const LstmNetwork& net) {
  Json j;
  j["input_dim"] = net.input_dim;
  j["hidden_dims"] = net.hidden_dims;
  j["dropout_rate"] = net.dropout_rate;
  j["dropout_after"] = std::vector<int>(net.dropout_after.begin(), net.dropout_after.end());
  Json layers = Json::array();
  for (const auto& p : net.layers) {
    Json l;
    l["W_i"] = matrix_to_json(p.W_i);
    l["W_f"] = matrix_to_json(p.W_f);
    l["W_o"] = matrix_to_json(p.W_o);
    l["W_c"] = matrix_to_json(p.W_c);
    l["b_i"] = vector_to_json(p.b_i);
    l["b_f"] = vector_to_json(p.b_f);
    l["b_o"] = vector_to_json(p.b_o);
    l["b_c"] = vector_to_json(p.b_c);
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  j["dense_W"] = matrix_to_json(net.dense.W);
  j["dense_b"] = vector_to_json(net.dense.b);
  return j;
}

LstmNetwork lstm_from_json(const Json& j) {
  LstmNetwork net;
  net.input_dim = j.at("input_dim").get<int>();
  net.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  net.dropout_rate = j.at("dropout_rate").get<double>();
  for (int f : j.at("dropout_after").get<std::vector<int>>())
    net.dropout_after.push_back(f != 0);
  for (const auto& l : j.at("layers")) {
    LstmLayerParams p;
    p.W_i = matrix_from_json(l.at("W_i"));
    p.W_f = matrix_from_json(l.at("W_f"));
    p.W_o = matrix_from_json(l.at("W_o"));
    p.W_c = matrix_from_json(l.at("W_c"));
    p.b_i = vector_from_json(l.at("b_i"));
    p.b_f = vector_from_json(l.at("b_f"));
    p.b_o = vector_from_json(l.at("b_o"));
    p.b_c = vector_from_json(l.at("b_c"));
    net.layers.push_back(std::move(p));
  }
  net.dense.W = matrix_from_json(j.at("dense_W"));
  net.dense.b = vector_from_json(j.at("dense_b"));
  return net;
}

Json hmm_to_json(const GaussianHmm& model) {
  Json j;
  j["K"] = model.K;
  j["initial"] = vector_to_json(model.initial);
  j["transition"] = matrix_to_json(model.transition);
  j["means"] = matrix_to_json(model.means);
  j["variances"] = matrix_to_json(model.variances);
  return j;
}

GaussianHmm hmm_from_json(const Json& j) {
  GaussianHmm m;
  m.K = j.at("K").get<int>();
  m.initial = vector_from_json(j.at("initial"));
  m.transition = matrix_from_json(j.at("transition"));
  m.means = matrix_from_json(j.at("means"));
  m.variances = matrix_from_json(j.at("variances"));
  return m;
}

Json fusion_to_json(const FusionWeights& w) {
  Json j;
  j["alpha"] = w.alpha;
  j["lambda"] = w.lambda_;
  j["eta"] = w.eta;
  j["gamma"] = vector_to_json(w.gamma);
  j["c"] = w.c;
  j["one_hot"] = w.one_hot;
  j["rank_deficient"] = w.rank_deficient;
  return j;
}

FusionWeights fusion_from_json(const Json& j) {
  FusionWeights w;
  w.alpha = j.at("alpha").get<double>();
  w.lambda_ = j.at("lambda").get<double>();
  w.eta = j.at("eta").get<double>();
  w.gamma = vector_from_json(j.at("gamma"));
  w.c = j.at("c").get<double>();
  w.one_hot = j.at("one_hot").get<bool>();
  w.rank_deficient = j.at("rank_deficient").get<bool>();
  return w;
}

Json normalization_to_json(const NormalizationParams& p) {
  return Json{{"min", p.min_value}, {"max", p.max_value}};
}

NormalizationParams normalization_from_json(const Json& j) {
  return NormalizationParams(j.at("min").get<double>(), j.at("max").get<double>());
}

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  Json j;
  j["version"] = cp.version;
  j["ticker"] = cp.ticker;
  j["lstm"] = lstm_to_json(cp.lstm);
  j["hmm"] = hmm_to_json(cp.hmm);
  j["fusion"] = fusion_to_json(cp.fusion);
  j["price_norm"] = normalization_to_json(cp.price_norm);
  j["market_norm"] = normalization_to_json(cp.market_norm);
  j["volume_norm"] = normalization_to_json(cp.volume_norm);
  j["train_config"] = cp.train_config;
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  Json j;
  in >> j;
  if (j.at("version").get<int>() != 1)
    throw Error("unsupported checkpoint version in '" + path + "'");
  Checkpoint cp;
  cp.ticker = j.at("ticker").get<std::string>();
  cp.lstm = lstm_from_json(j.at("lstm"));
  cp.hmm = hmm_from_json(j.at("hmm"));
  cp.fusion = fusion_from_json(j.at("fusion"));
  cp.price_norm = normalization_from_json(j.at("price_norm"));
  cp.market_norm = normalization_from_json(j.at("market_norm"));
  cp.volume_norm = normalization_from_json(j.at("volume_norm"));
  cp.train_config = j.at("train_config");
  return cp;
}

}  // namespace midcast
