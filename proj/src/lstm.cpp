#include "midcast/lstm.hpp"

#include <cmath>

namespace midcast {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

Eigen::VectorXd concat(const Eigen::VectorXd& h, const Eigen::VectorXd& x) {
  Eigen::VectorXd z(h.size() + x.size());
  z << h, x;
  return z;
}

LstmLayerParams zeros_like(const LstmLayerParams& p) {
  LstmLayerParams g;
  g.W_i = Eigen::MatrixXd::Zero(p.W_i.rows(), p.W_i.cols());
  g.W_f = g.W_i;
  g.W_o = g.W_i;
  g.W_c = g.W_i;
  g.b_i = Eigen::VectorXd::Zero(p.b_i.size());
  g.b_f = g.b_i;
  g.b_o = g.b_i;
  g.b_c = g.b_i;
  return g;
}

LstmNetwork zeros_like(const LstmNetwork& net) {
  LstmNetwork g = net;
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    g.layers[l] = zeros_like(net.layers[l]);
  g.dense.W = Eigen::MatrixXd::Zero(net.dense.W.rows(), net.dense.W.cols());
  g.dense.b = Eigen::VectorXd::Zero(net.dense.b.size());
  return g;
}

void accumulate(LstmNetwork& acc, const LstmNetwork& g) {
  for (std::size_t l = 0; l < acc.layers.size(); ++l) {
    acc.layers[l].W_i += g.layers[l].W_i;
    acc.layers[l].W_f += g.layers[l].W_f;
    acc.layers[l].W_o += g.layers[l].W_o;
    acc.layers[l].W_c += g.layers[l].W_c;
    acc.layers[l].b_i += g.layers[l].b_i;
    acc.layers[l].b_f += g.layers[l].b_f;
    acc.layers[l].b_o += g.layers[l].b_o;
    acc.layers[l].b_c += g.layers[l].b_c;
  }
  acc.dense.W += g.dense.W;
  acc.dense.b += g.dense.b;
}

}  // namespace

CellState cell_forward(const Eigen::VectorXd& x, const CellState& prev,
                       const LstmLayerParams& params) {
  const auto H = params.hidden();
  if (x.size() != params.input() || prev.h.size() != H || prev.c.size() != H)
    throw DimensionMismatch("cell_forward: input/state sizes do not match params");

  const Eigen::VectorXd z = concat(prev.h, x);
  CellState s;
  s.i = sigmoid(params.W_i * z + params.b_i);
  s.c_hat = (params.W_c * z + params.b_c).array().tanh();
  s.f = sigmoid(params.W_f * z + params.b_f);
  s.c = (s.f.array() * prev.c.array() + s.i.array() * s.c_hat.array()).matrix();
  s.o = sigmoid(params.W_o * z + params.b_o);
  s.h = (s.o.array() * s.c.array().tanh()).matrix();
  return s;
}

LstmNetwork make_network(int input_dim, const std::vector<int>& hidden_dims,
                         int output_dim, double dropout_rate, Rng& rng) {
  LstmNetwork net;
  net.input_dim = input_dim;
  net.hidden_dims = hidden_dims;
  net.dropout_rate = dropout_rate;
  int in = input_dim;
  for (std::size_t l = 0; l < hidden_dims.size(); ++l) {
    const int H = hidden_dims[l];
    LstmLayerParams p;
    const int cols = H + in;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    auto init = [&](Eigen::MatrixXd& W) {
      W.resize(H, cols);
      for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (Eigen::Index c = 0; c < W.cols(); ++c)
          W(r, c) = rng.next_uniform(-bound, bound);
    };
    init(p.W_i);
    init(p.W_f);
    init(p.W_o);
    init(p.W_c);
    p.b_i = Eigen::VectorXd::Zero(H);
    p.b_f = Eigen::VectorXd::Ones(H);  // standard forget-gate bias
    p.b_o = Eigen::VectorXd::Zero(H);
    p.b_c = Eigen::VectorXd::Zero(H);
    net.layers.push_back(std::move(p));
    in = H;
  }
  // dropout sites: after the first and after the last recurrent layer
  net.dropout_after.assign(hidden_dims.size(), false);
  if (dropout_rate > 0.0 && hidden_dims.size() >= 2) {
    net.dropout_after.front() = true;
    net.dropout_after.back() = true;
  } else if (dropout_rate > 0.0 && !hidden_dims.empty()) {
    net.dropout_after.back() = true;
  }
  const int top = hidden_dims.empty() ? input_dim : hidden_dims.back();
  const double bound = 1.0 / std::sqrt(static_cast<double>(top));
  net.dense.W.resize(output_dim, top);
  for (Eigen::Index r = 0; r < net.dense.W.rows(); ++r)
    for (Eigen::Index c = 0; c < net.dense.W.cols(); ++c)
      net.dense.W(r, c) = rng.next_uniform(-bound, bound);
  net.dense.b = Eigen::VectorXd::Zero(output_dim);
  return net;
}

ForwardTape forward(const std::vector<Eigen::VectorXd>& sequence,
                    const LstmNetwork& net, bool training, Rng* rng) {
  if (sequence.empty()) throw DimensionMismatch("forward: empty sequence");
  const auto T = sequence.size();
  const auto L = net.layers.size();

  std::vector<CellState> prev(L);
  for (std::size_t l = 0; l < L; ++l) {
    prev[l].h = Eigen::VectorXd::Zero(net.layers[l].hidden());
    prev[l].c = Eigen::VectorXd::Zero(net.layers[l].hidden());
  }

  ForwardTape tape;
  tape.states.resize(T);
  tape.layer_in.resize(T);
  tape.masks.resize(T);
  tape.dense_in.resize(T);
  tape.outputs.resize(T);

  const double keep = 1.0 - net.dropout_rate;
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::VectorXd in = sequence[t];
    tape.states[t].resize(L);
    tape.layer_in[t].resize(L);
    tape.masks[t].resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      tape.layer_in[t][l] = in;
      CellState s = cell_forward(in, prev[l], net.layers[l]);
      Eigen::VectorXd out = s.h;
      if (net.dropout_after[l] && training && net.dropout_rate > 0.0) {
        if (rng == nullptr)
          throw Error("forward: training dropout requires an rng");
        Eigen::VectorXd mask(out.size());
        for (Eigen::Index k = 0; k < mask.size(); ++k)
          mask[k] = rng->next_unit() < keep ? 1.0 / keep : 0.0;
        out = out.cwiseProduct(mask);
        tape.masks[t][l] = mask;
      }
      tape.states[t][l] = s;
      prev[l] = tape.states[t][l];
      in = out;
    }
    tape.dense_in[t] = in;
    tape.outputs[t] = net.dense.W * in + net.dense.b;
  }
  return tape;
}

BackwardResult backward(const ForwardTape& tape, const LstmNetwork& net,
                        const std::vector<Eigen::VectorXd>& targets) {
  const auto T = tape.outputs.size();
  const auto K = targets.size();
  if (K == 0 || K > T)
    throw DimensionMismatch("backward: target count must be in [1, sequence length]");
  const auto offset = T - K;
  const auto L = net.layers.size();

  BackwardResult res;
  res.grads = zeros_like(net);

  // per-layer recurrent carries
  std::vector<Eigen::VectorXd> carry_dh(L), carry_dc(L);
  for (std::size_t l = 0; l < L; ++l) {
    carry_dh[l] = Eigen::VectorXd::Zero(net.layers[l].hidden());
    carry_dc[l] = Eigen::VectorXd::Zero(net.layers[l].hidden());
  }

  for (std::size_t ti = T; ti-- > 0;) {
    Eigen::VectorXd d_top;
    if (ti >= offset) {
      const Eigen::VectorXd err = tape.outputs[ti] - targets[ti - offset];
      res.loss += err.squaredNorm();
      const Eigen::VectorXd dy = (2.0 / static_cast<double>(K)) * err;
      res.grads.dense.W += dy * tape.dense_in[ti].transpose();
      res.grads.dense.b += dy;
      d_top = net.dense.W.transpose() * dy;
    } else {
      d_top = Eigen::VectorXd::Zero(tape.dense_in[ti].size());
    }

    Eigen::VectorXd d_out = d_top;  // gradient wrt post-dropout output of layer l
    for (std::size_t l = L; l-- > 0;) {
      const LstmLayerParams& p = net.layers[l];
      LstmLayerParams& g = res.grads.layers[l];
      const CellState& s = tape.states[ti][l];

      Eigen::VectorXd dh = d_out;
      if (tape.masks[ti][l].size() > 0) dh = dh.cwiseProduct(tape.masks[ti][l]);
      dh += carry_dh[l];

      const Eigen::ArrayXd tanh_c = s.c.array().tanh();
      const Eigen::ArrayXd d_o = dh.array() * tanh_c;
      Eigen::ArrayXd dc = carry_dc[l].array() + dh.array() * s.o.array() * (1.0 - tanh_c.square());

      const Eigen::VectorXd c_prev =
          ti > 0 ? tape.states[ti - 1][l].c
                 : Eigen::VectorXd::Zero(p.hidden());
      const Eigen::VectorXd h_prev =
          ti > 0 ? tape.states[ti - 1][l].h
                 : Eigen::VectorXd::Zero(p.hidden());

      const Eigen::ArrayXd d_i = dc * s.c_hat.array();
      const Eigen::ArrayXd d_chat = dc * s.i.array();
      const Eigen::ArrayXd d_f = dc * c_prev.array();
      carry_dc[l] = (dc * s.f.array()).matrix();

      const Eigen::VectorXd a_i = (d_i * s.i.array() * (1.0 - s.i.array())).matrix();
      const Eigen::VectorXd a_f = (d_f * s.f.array() * (1.0 - s.f.array())).matrix();
      const Eigen::VectorXd a_o = (d_o * s.o.array() * (1.0 - s.o.array())).matrix();
      const Eigen::VectorXd a_c = (d_chat * (1.0 - s.c_hat.array().square())).matrix();

      const Eigen::VectorXd z = concat(h_prev, tape.layer_in[ti][l]);
      g.W_i += a_i * z.transpose();
      g.W_f += a_f * z.transpose();
      g.W_o += a_o * z.transpose();
      g.W_c += a_c * z.transpose();
      g.b_i += a_i;
      g.b_f += a_f;
      g.b_o += a_o;
      g.b_c += a_c;

      const Eigen::VectorXd dz = p.W_i.transpose() * a_i + p.W_f.transpose() * a_f +
                                 p.W_o.transpose() * a_o + p.W_c.transpose() * a_c;
      carry_dh[l] = dz.head(p.hidden());
      d_out = dz.tail(p.input());
    }
  }
  res.loss /= static_cast<double>(K);
  return res;
}

Eigen::Index parameter_count(const LstmNetwork& net) {
  Eigen::Index n = 0;
  for (const auto& p : net.layers)
    n += 4 * p.W_i.size() + 4 * p.b_i.size();
  n += net.dense.W.size() + net.dense.b.size();
  return n;
}

Eigen::VectorXd flatten(const LstmNetwork& net) {
  Eigen::VectorXd theta(parameter_count(net));
  Eigen::Index pos = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    theta.segment(pos, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    pos += m.size();
  };
  for (const auto& p : net.layers) {
    put(p.W_i);
    put(p.W_f);
    put(p.W_o);
    put(p.W_c);
    put(p.b_i);
    put(p.b_f);
    put(p.b_o);
    put(p.b_c);
  }
  put(net.dense.W);
  put(net.dense.b);
  return theta;
}

void unflatten(const Eigen::VectorXd& theta, LstmNetwork& net) {
  Eigen::Index pos = 0;
  auto take = [&](Eigen::MatrixXd& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = theta.segment(pos, m.size());
    pos += m.size();
  };
  auto take_v = [&](Eigen::VectorXd& v) {
    v = theta.segment(pos, v.size());
    pos += v.size();
  };
  for (auto& p : net.layers) {
    take(p.W_i);
    take(p.W_f);
    take(p.W_o);
    take(p.W_c);
    take_v(p.b_i);
    take_v(p.b_f);
    take_v(p.b_o);
    take_v(p.b_c);
  }
  take(net.dense.W);
  take_v(net.dense.b);
  if (pos != theta.size())
    throw DimensionMismatch("unflatten: parameter vector size mismatch");
}

void adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                 AdamState& state) {
  if (params.size() != grads.size())
    throw DimensionMismatch("adam_update: shape mismatch");
  if (state.first_moment.size() == 0) {
    state.first_moment = Eigen::VectorXd::Zero(params.size());
    state.second_moment = Eigen::VectorXd::Zero(params.size());
  }
  state.step_count += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment =
      (state.beta2 * state.second_moment.array() +
       (1.0 - state.beta2) * grads.array().square())
          .matrix();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  params.array() -= state.learning_rate * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + state.epsilon);
}

void adam_step(LstmNetwork& net, const LstmNetwork& grads, AdamState& state) {
  Eigen::VectorXd theta = flatten(net);
  const Eigen::VectorXd g = flatten(grads);
  adam_update(theta, g, state);
  unflatten(theta, net);
}

TrainResult train(const RollingWindowSet& windows, const LstmTrainConfig& config) {
  if (windows.inputs.empty())
    throw SeriesTooShort("train: no rolling windows supplied");
  const int C = static_cast<int>(windows.inputs.front().cols());

  Rng rng(config.seed);
  TrainResult result;
  result.net = make_network(C, config.hidden_dims, C, config.dropout_rate, rng);
  LstmNetwork& net = result.net;

  AdamState adam;
  adam.learning_rate = config.learning_rate;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.epsilon = config.epsilon;

  const std::size_t N = windows.n_pairs();
  const std::size_t B = config.batch_size > 0
                            ? static_cast<std::size_t>(config.batch_size)
                            : N;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t start = 0;
    while (start < N) {
      const std::size_t end = std::min(start + B, N);
      LstmNetwork acc = zeros_like(net);
      for (std::size_t w = start; w < end; ++w) {
        const Eigen::MatrixXd& in = windows.inputs[w];
        std::vector<Eigen::VectorXd> seq(static_cast<std::size_t>(in.rows()));
        for (Eigen::Index r = 0; r < in.rows(); ++r)
          seq[static_cast<std::size_t>(r)] = in.row(r).transpose();
        ForwardTape tape = forward(seq, net, /*training=*/true, &rng);
        std::vector<Eigen::VectorXd> tgt{windows.targets[w].transpose()};
        BackwardResult bw = backward(tape, net, tgt);
        epoch_loss += bw.loss;
        accumulate(acc, bw.grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      Eigen::VectorXd g = flatten(acc) * scale;
      const double gnorm = g.norm();
      if (config.clip_norm > 0.0 && gnorm > config.clip_norm)
        g *= config.clip_norm / gnorm;
      Eigen::VectorXd theta = flatten(net);
      adam_update(theta, g, adam);
      unflatten(theta, net);
      start = end;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(N));
  }
  return result;
}

RecursivePredictor::RecursivePredictor(const LstmNetwork& net,
                                       const Eigen::MatrixXd& window)
    : net_(net) {
  states_.resize(net.layers.size());
  for (std::size_t l = 0; l < states_.size(); ++l) {
    states_[l].h = Eigen::VectorXd::Zero(net.layers[l].hidden());
    states_[l].c = Eigen::VectorXd::Zero(net.layers[l].hidden());
  }
  if (window.rows() == 0)
    throw DimensionMismatch("predictor needs a non-empty input window");
  Eigen::VectorXd out;
  for (Eigen::Index r = 0; r < window.rows(); ++r)
    out = consume(window.row(r).transpose());
  last_output_ = out;
}

Eigen::VectorXd RecursivePredictor::consume(const Eigen::VectorXd& x) {
  Eigen::VectorXd in = x;
  for (std::size_t l = 0; l < states_.size(); ++l) {
    states_[l] = cell_forward(in, states_[l], net_.layers[l]);
    in = states_[l].h;  // dropout is identity at inference
  }
  return net_.dense.W * in + net_.dense.b;
}

Eigen::VectorXd RecursivePredictor::step() {
  Eigen::VectorXd pred = last_output_;
  last_output_ = consume(pred);
  return pred;
}

Eigen::MatrixXd predict_full_sequence(const Eigen::MatrixXd& window,
                                      const LstmNetwork& net, int horizon) {
  if (horizon < 1) throw Error("horizon must be >= 1");
  RecursivePredictor pred(net, window);
  Eigen::MatrixXd path(horizon, net.output_dim());
  for (int k = 0; k < horizon; ++k) path.row(k) = pred.step().transpose();
  return path;
}

}  // namespace midcast
