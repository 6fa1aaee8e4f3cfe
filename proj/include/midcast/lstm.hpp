#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "midcast/data.hpp"
#include "midcast/errors.hpp"
#include "midcast/rng.hpp"

namespace midcast {

// One stacked-cell layer: gate weights act on the concatenation
// [h_{t-1}; x_t], so each matrix is hidden x (hidden + input).
struct LstmLayerParams {
  Eigen::MatrixXd W_i, W_f, W_o, W_c;
  Eigen::VectorXd b_i, b_f, b_o, b_c;

  Eigen::Index hidden() const { return W_i.rows(); }
  Eigen::Index input() const { return W_i.cols() - W_i.rows(); }
};

// Runtime cell state with the gate activations kept for backprop.
struct CellState {
  Eigen::VectorXd h, c;
  Eigen::VectorXd i, f, o, c_hat;
};

struct DenseParams {
  Eigen::MatrixXd W;  // out x hidden
  Eigen::VectorXd b;  // out
};

struct LstmNetwork {
  std::vector<LstmLayerParams> layers;
  std::vector<bool> dropout_after;  // per layer: dropout on its output
  DenseParams dense;
  double dropout_rate = 0.2;
  int input_dim = 0;
  std::vector<int> hidden_dims;

  int output_dim() const { return static_cast<int>(dense.b.size()); }
};

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Everything forward() records so backward() can reproduce exact BPTT
// gradients: per-step per-layer cell states, post-dropout layer inputs,
// and the sampled dropout masks (empty when inactive).
struct ForwardTape {
  std::vector<std::vector<CellState>> states;            // [t][layer]
  std::vector<std::vector<Eigen::VectorXd>> layer_in;    // [t][layer] input fed to layer
  std::vector<std::vector<Eigen::VectorXd>> masks;       // [t][layer] dropout mask on layer output
  std::vector<Eigen::VectorXd> dense_in;                 // [t] input fed to dense
  std::vector<Eigen::VectorXd> outputs;                  // [t] dense outputs
};

struct LstmTrainConfig {
  std::vector<int> hidden_dims = {64, 64, 32};
  double dropout_rate = 0.2;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 50;
  int batch_size = 0;  // 0 = full window set per update
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

struct TrainResult {
  LstmNetwork net;
  std::vector<double> epoch_loss;
};

CellState cell_forward(const Eigen::VectorXd& x, const CellState& prev,
                       const LstmLayerParams& params);

LstmNetwork make_network(int input_dim, const std::vector<int>& hidden_dims,
                         int output_dim, double dropout_rate, Rng& rng);

ForwardTape forward(const std::vector<Eigen::VectorXd>& sequence,
                    const LstmNetwork& net, bool training, Rng* rng = nullptr);

// MSE over the last targets.size() steps: L = (1/K) sum_k |y_k - t_k|^2.
// Returns gradients in a network-shaped container plus the loss value.
struct BackwardResult {
  LstmNetwork grads;  // same shapes as the network, values are d loss / d param
  double loss = 0.0;
};
BackwardResult backward(const ForwardTape& tape, const LstmNetwork& net,
                        const std::vector<Eigen::VectorXd>& targets);

// flat parameter vector helpers (fixed traversal order)
Eigen::VectorXd flatten(const LstmNetwork& net);
void unflatten(const Eigen::VectorXd& theta, LstmNetwork& net);
Eigen::Index parameter_count(const LstmNetwork& net);

void adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                 AdamState& state);
void adam_step(LstmNetwork& net, const LstmNetwork& grads, AdamState& state);

TrainResult train(const RollingWindowSet& windows, const LstmTrainConfig& config);

// Incremental recursive predictor: consumes the real input window, then
// feeds each prediction back as the next input.
class RecursivePredictor {
 public:
  RecursivePredictor(const LstmNetwork& net, const Eigen::MatrixXd& window);
  Eigen::VectorXd step();  // one more predicted point

 private:
  const LstmNetwork& net_;
  std::vector<CellState> states_;
  Eigen::VectorXd last_output_;

  Eigen::VectorXd consume(const Eigen::VectorXd& x);
};

// horizon predicted rows, one per step (columns = output channels)
Eigen::MatrixXd predict_full_sequence(const Eigen::MatrixXd& window,
                                      const LstmNetwork& net, int horizon);

}  // namespace midcast
