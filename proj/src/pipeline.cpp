#include "midcast/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "midcast/baselines.hpp"
#include "midcast/checkpoint.hpp"
#include "midcast/fusion.hpp"
#include "midcast/hmm.hpp"
#include "midcast/metrics.hpp"
#include "midcast/rng.hpp"

namespace midcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMethods = {"linear", "lstm", "mid_lstm", "ridge"};
constexpr double kRidgeLambda = 1.0;

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& path) {
  for (const auto& [key, value] : j.items())
    if (allowed.find(key) == allowed.end())
      throw ConfigError("unknown config key '" + path + key + "'");
}

int worker_count(const RunConfig& config) {
  if (config.jobs > 0) return config.jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// runs fn(stock_index) over a bounded pool; first failure wins
void parallel_for_stocks(int n, int jobs, const std::vector<std::string>& tickers,
                         const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!failed.load()) {
      const int l = next.fetch_add(1);
      if (l >= n) return;
      try {
        fn(l);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true))
          error = "stock '" + tickers[static_cast<std::size_t>(l)] + "': " + e.what();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failed.load()) throw Error(error);
}

struct StockFrame {
  Eigen::MatrixXd channels;  // T x 3 normalized (price, market, volume)
  NormalizationParams price_norm, market_norm, volume_norm;
  Eigen::Index train_len = 0;
  RollingWindowSet train_ws, test_ws;
};

StockFrame build_frame(const PriceTable& table, int l, const RunConfig& config) {
  const auto T = table.days();
  const auto train_len = static_cast<Eigen::Index>(
      std::floor(config.split_fraction * static_cast<double>(T)));
  if (train_len < 2)
    throw SeriesTooShort("training portion too short for normalization");

  StockFrame f;
  f.train_len = train_len;
  auto fit = [&](const Eigen::VectorXd& v) {
    return minmax_normalize(v.head(train_len)).second;
  };
  f.price_norm = fit(table.close.col(l));
  f.market_norm = fit(table.market);
  f.volume_norm = fit(table.volume.col(l));

  f.channels.resize(T, 3);
  f.channels.col(0) = normalize_with(table.close.col(l), f.price_norm);
  f.channels.col(1) = normalize_with(table.market, f.market_norm);
  f.channels.col(2) = normalize_with(table.volume.col(l), f.volume_norm);

  auto [train_ws, test_ws] =
      make_windows(f.channels, config.window_length, config.split_fraction);
  f.train_ws = std::move(train_ws);
  f.test_ws = std::move(test_ws);
  return f;
}

// observation pair fed to the HMM: (normalized price, volume feature)
ObservationSequence hmm_observations(const Eigen::VectorXd& price_n,
                                     const Eigen::VectorXd& volume_raw,
                                     bool log_volume) {
  ObservationSequence obs(price_n.size(), 2);
  for (Eigen::Index t = 0; t < price_n.size(); ++t) {
    obs(t, 0) = price_n[t];
    obs(t, 1) = volume_feature(volume_raw[t], log_volume);
  }
  return obs;
}

std::string checkpoint_path(const RunConfig& config, const std::string& ticker) {
  return (fs::path(config.output_dir) / ticker / "checkpoint.json").string();
}

Checkpoint train_stock(const PriceTable& table, int l, const RunConfig& config) {
  const StockFrame frame = build_frame(table, l, config);
  const int W = config.window_length;

  LstmTrainConfig lcfg = config.lstm;
  Rng seeder(config.seed);
  lcfg.seed = seeder.fork(static_cast<std::uint64_t>(l));
  TrainResult tr = train(frame.train_ws, lcfg);

  // HMM on disjoint full windows of the training portion
  std::vector<ObservationSequence> hmm_train;
  const auto n_train_seg = frame.train_len / W;
  for (Eigen::Index s = 0; s < n_train_seg; ++s) {
    const auto start = s * W;
    hmm_train.push_back(hmm_observations(
        frame.channels.col(0).segment(start, W),
        denormalize(frame.channels.col(2).segment(start, W), frame.volume_norm),
        config.hmm.log_volume));
  }
  if (hmm_train.empty())
    throw SeriesTooShort("training portion shorter than one window");
  GaussianHmm hmm =
      baum_welch(hmm_train, config.hmm.states, config.hmm.iterations).model;

  // fusion fit over the trailing training segment pairs
  const auto n_pairs = n_train_seg - 1;
  const auto n_fit = std::min<Eigen::Index>(n_pairs, config.fusion.train_windows);
  if (n_fit < 1)
    throw SeriesTooShort("not enough training segments to fit fusion weights");
  FusionDataset all;
  bool have_rows = false;
  for (Eigen::Index k = n_train_seg - n_fit; k < n_train_seg; ++k) {
    const auto target_start = k * W;
    const Eigen::MatrixXd input =
        frame.channels.middleRows(target_start - (W - 1), W - 1);
    const Eigen::MatrixXd pred = predict_full_sequence(input, tr.net, W);
    FusionDataset ds = build_dataset(
        pred.col(0), pred.col(1), denormalize(pred.col(2), frame.volume_norm),
        hmm, frame.channels.col(0).segment(target_start, W),
        config.hmm.log_volume);
    if (!have_rows) {
      all = std::move(ds);
      have_rows = true;
    } else {
      all.append(ds);
    }
  }
  const FusionWeights weights = fit_fusion(all, config.fusion.one_hot);

  Checkpoint cp;
  cp.ticker = table.tickers[static_cast<std::size_t>(l)];
  cp.lstm = std::move(tr.net);
  cp.hmm = std::move(hmm);
  cp.fusion = weights;
  cp.price_norm = frame.price_norm;
  cp.market_norm = frame.market_norm;
  cp.volume_norm = frame.volume_norm;
  cp.train_config = {{"epochs", lcfg.epochs},
                     {"learning_rate", lcfg.learning_rate},
                     {"batch_size", lcfg.batch_size},
                     {"hidden_dims", lcfg.hidden_dims},
                     {"dropout_rate", lcfg.dropout_rate},
                     {"seed", lcfg.seed}};
  return cp;
}

struct StockPredictions {
  // method -> concatenated predicted prices over the prediction windows
  std::map<std::string, Eigen::VectorXd> predicted;
  Eigen::VectorXd real;           // same layout
  std::vector<std::string> dates;
};

StockPredictions predict_stock(const PriceTable& table, int l,
                               const RunConfig& config, const Checkpoint& cp) {
  const StockFrame frame = build_frame(table, l, config);
  const int W = config.window_length;
  const auto n_seg = static_cast<Eigen::Index>(frame.test_ws.n_segments());
  if (n_seg < 2)
    throw SeriesTooShort("test portion yields no prediction window");
  const auto n_windows = n_seg - 1;

  LinearAutoregressor linear;
  try {
    linear = fit_autoregressor(frame.train_ws, 0.0);
  } catch (const RankDeficient&) {
    linear = fit_autoregressor(frame.train_ws, 1e-8);
  }
  const LinearAutoregressor ridge = fit_autoregressor(frame.train_ws, kRidgeLambda);

  StockPredictions out;
  const auto total = n_windows * W;
  for (const auto& m : kMethods) out.predicted[m] = Eigen::VectorXd(total);
  out.real.resize(total);
  out.dates.reserve(static_cast<std::size_t>(total));

  for (Eigen::Index k = 1; k < n_seg; ++k) {
    const auto target_start = frame.train_len + k * W;  // global day index
    const Eigen::MatrixXd input =
        frame.channels.middleRows(target_start - (W - 1), W - 1);
    const Eigen::MatrixXd pred = predict_full_sequence(input, cp.lstm, W);

    FusionDataset ds = build_dataset(
        pred.col(0), pred.col(1), denormalize(pred.col(2), cp.volume_norm),
        cp.hmm, Eigen::VectorXd::Zero(W), config.hmm.log_volume);
    Eigen::VectorXd refined(W);
    for (Eigen::Index t = 0; t < W; ++t)
      refined[t] = refine_prediction(ds.price_pred[t], ds.market_pred[t],
                                     ds.rho[t], ds.state[t], cp.fusion);

    const Eigen::VectorXd price_input = input.col(0);
    const auto offset = (k - 1) * W;
    out.predicted["lstm"].segment(offset, W) = denormalize(pred.col(0), cp.price_norm);
    out.predicted["mid_lstm"].segment(offset, W) = denormalize(refined, cp.price_norm);
    out.predicted["linear"].segment(offset, W) = denormalize(
        predict_full_sequence_baseline(price_input, linear, W), cp.price_norm);
    out.predicted["ridge"].segment(offset, W) = denormalize(
        predict_full_sequence_baseline(price_input, ridge, W), cp.price_norm);
    out.real.segment(offset, W) = table.close.col(l).segment(target_start, W);
    for (Eigen::Index t = 0; t < W; ++t)
      out.dates.push_back(table.dates[static_cast<std::size_t>(target_start + t)]);
  }
  return out;
}

struct PredictionsFile {
  std::vector<std::string> tickers;                 // in file order
  std::vector<std::string> dates;                   // per row index of one method
  std::map<std::string, Eigen::MatrixXd> predicted; // method -> day x stock
  Eigen::MatrixXd real;                             // day x stock
  int n_windows = 0;
  int window_length = 0;
};

PredictionsFile read_predictions(const RunConfig& config) {
  const std::string path = (fs::path(config.output_dir) / "predictions.csv").string();
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' (run the predict stage first)");
  std::string line;
  std::getline(in, line);  // header

  struct Cell {
    double pred;
    double real;
  };
  std::map<std::string, std::map<std::string, std::vector<Cell>>> rows;  // method->ticker
  std::map<std::string, std::vector<std::string>> dates;                 // per ticker
  std::vector<std::string> ticker_order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string date, ticker, method, pred, real;
    std::getline(ss, date, ',');
    std::getline(ss, ticker, ',');
    std::getline(ss, method, ',');
    std::getline(ss, pred, ',');
    std::getline(ss, real, ',');
    auto& per_ticker = rows[method];
    if (per_ticker.find(ticker) == per_ticker.end() && method == kMethods[0])
      ticker_order.push_back(ticker);
    per_ticker[ticker].push_back({std::stod(pred), std::stod(real)});
    if (method == kMethods[0]) dates[ticker].push_back(date);
  }
  if (rows.empty()) throw Error("no prediction rows in '" + path + "'");

  PredictionsFile pf;
  pf.tickers = ticker_order;
  pf.window_length = config.window_length;
  const auto days = rows.begin()->second.begin()->second.size();
  pf.n_windows = static_cast<int>(days) / config.window_length;
  pf.real.resize(static_cast<Eigen::Index>(days), static_cast<Eigen::Index>(ticker_order.size()));
  pf.dates = dates[ticker_order.front()];
  for (const auto& method : kMethods) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(days),
                      static_cast<Eigen::Index>(ticker_order.size()));
    for (std::size_t j = 0; j < ticker_order.size(); ++j) {
      const auto& cells = rows.at(method).at(ticker_order[j]);
      if (cells.size() != days) throw Error("ragged predictions file");
      for (std::size_t t = 0; t < days; ++t) {
        m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = cells[t].pred;
        pf.real(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
            cells[t].real;
      }
    }
    pf.predicted[method] = std::move(m);
  }
  return pf;
}

PredictionPanel make_panel(const PredictionsFile& pf, const std::string& method) {
  PredictionPanel panel;
  panel.real = pf.real;
  panel.predicted = pf.predicted.at(method);
  panel.window_length = pf.window_length;
  panel.midterm_first = pf.window_length / 2;  // days 30-59 at the default length
  panel.midterm_last = pf.window_length - 1;
  for (int w = 0; w < pf.n_windows; ++w)
    panel.window_starts.push_back(w * pf.window_length);
  return panel;
}

Eigen::VectorXd training_market_correlation(const PriceTable& table,
                                            const RunConfig& config) {
  const auto train_len = static_cast<Eigen::Index>(
      std::floor(config.split_fraction * static_cast<double>(table.days())));
  Eigen::VectorXd corr(table.n_tickers());
  for (Eigen::Index l = 0; l < table.n_tickers(); ++l)
    corr[l] = correlation(table.close.col(l).head(train_len),
                          table.market.head(train_len));
  return corr;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  check_keys(j, {"data", "window_length", "split_fraction", "lstm", "hmm",
                 "fusion", "portfolio", "seed", "jobs", "output_dir"},
             "");
  RunConfig c;
  if (!j.contains("data")) throw ConfigError("missing 'data' section");
  const json& d = j.at("data");
  check_keys(d, {"csv", "market_ticker", "wide", "synth"}, "data.");
  if (d.contains("csv") == d.contains("synth"))
    throw ConfigError("data: exactly one of 'csv' or 'synth' required");
  if (d.contains("csv")) {
    c.csv_path = d.at("csv").get<std::string>();
    if (d.contains("market_ticker"))
      c.schema.market_ticker = d.at("market_ticker").get<std::string>();
    if (d.contains("wide")) c.schema.wide = d.at("wide").get<bool>();
  } else {
    const json& s = d.at("synth");
    check_keys(s,
               {"days", "n_stocks", "loadings", "market_level", "market_trend",
                "market_amplitude", "market_period", "idio_noise", "seed",
                "volume_base", "volume_high_factor", "volume_noise"},
               "data.synth.");
    FactorMarketConfig fm;
    if (s.contains("days")) fm.days = s.at("days").get<int>();
    if (s.contains("n_stocks")) fm.n_stocks = s.at("n_stocks").get<int>();
    if (s.contains("loadings")) fm.loadings = s.at("loadings").get<std::vector<double>>();
    if (s.contains("market_level")) fm.market_level = s.at("market_level").get<double>();
    if (s.contains("market_trend")) fm.market_trend = s.at("market_trend").get<double>();
    if (s.contains("market_amplitude"))
      fm.market_amplitude = s.at("market_amplitude").get<double>();
    if (s.contains("market_period")) fm.market_period = s.at("market_period").get<double>();
    if (s.contains("idio_noise")) fm.idio_noise = s.at("idio_noise").get<double>();
    if (s.contains("seed")) fm.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("volume_base")) fm.volume_base = s.at("volume_base").get<double>();
    if (s.contains("volume_high_factor"))
      fm.volume_high_factor = s.at("volume_high_factor").get<double>();
    if (s.contains("volume_noise")) fm.volume_noise = s.at("volume_noise").get<double>();
    c.synth = fm;
  }

  if (j.contains("window_length")) c.window_length = j.at("window_length").get<int>();
  if (j.contains("split_fraction"))
    c.split_fraction = j.at("split_fraction").get<double>();
  if (c.window_length < 2) throw ConfigError("window_length must be >= 2");
  if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0))
    throw ConfigError("split_fraction must lie in (0,1)");

  if (j.contains("lstm")) {
    const json& L = j.at("lstm");
    check_keys(L,
               {"hidden_dims", "dropout_rate", "learning_rate", "beta1", "beta2",
                "epsilon", "epochs", "batch_size", "clip_norm"},
               "lstm.");
    if (L.contains("hidden_dims"))
      c.lstm.hidden_dims = L.at("hidden_dims").get<std::vector<int>>();
    if (L.contains("dropout_rate")) c.lstm.dropout_rate = L.at("dropout_rate").get<double>();
    if (L.contains("learning_rate"))
      c.lstm.learning_rate = L.at("learning_rate").get<double>();
    if (L.contains("beta1")) c.lstm.beta1 = L.at("beta1").get<double>();
    if (L.contains("beta2")) c.lstm.beta2 = L.at("beta2").get<double>();
    if (L.contains("epsilon")) c.lstm.epsilon = L.at("epsilon").get<double>();
    if (L.contains("epochs")) c.lstm.epochs = L.at("epochs").get<int>();
    if (L.contains("batch_size")) c.lstm.batch_size = L.at("batch_size").get<int>();
    if (L.contains("clip_norm")) c.lstm.clip_norm = L.at("clip_norm").get<double>();
    if (c.lstm.dropout_rate < 0.0 || c.lstm.dropout_rate >= 1.0)
      throw ConfigError("lstm.dropout_rate must lie in [0,1)");
  }
  if (j.contains("hmm")) {
    const json& H = j.at("hmm");
    check_keys(H, {"states", "iterations", "log_volume"}, "hmm.");
    if (H.contains("states")) c.hmm.states = H.at("states").get<int>();
    if (H.contains("iterations")) c.hmm.iterations = H.at("iterations").get<int>();
    if (H.contains("log_volume")) c.hmm.log_volume = H.at("log_volume").get<bool>();
  }
  if (j.contains("fusion")) {
    const json& F = j.at("fusion");
    check_keys(F, {"one_hot", "train_windows"}, "fusion.");
    if (F.contains("one_hot")) c.fusion.one_hot = F.at("one_hot").get<bool>();
    if (F.contains("train_windows"))
      c.fusion.train_windows = F.at("train_windows").get<int>();
  }
  if (j.contains("portfolio")) {
    const json& P = j.at("portfolio");
    check_keys(P, {"mode", "risk_free", "convention"}, "portfolio.");
    if (P.contains("mode")) {
      const auto mode = P.at("mode").get<std::string>();
      if (mode == "all")
        c.portfolio.mode = SelectionMode::AllThreshold;
      else if (mode == "hc50")
        c.portfolio.mode = SelectionMode::Hc50Threshold;
      else
        throw ConfigError("portfolio.mode must be 'all' or 'hc50'");
    }
    if (P.contains("risk_free")) c.portfolio.risk_free = P.at("risk_free").get<double>();
    if (P.contains("convention")) {
      const auto conv = P.at("convention").get<std::string>();
      if (conv == "log_product")
        c.portfolio.convention = ReturnConvention::LogReturnProduct;
      else if (conv == "simple")
        c.portfolio.convention = ReturnConvention::Simple;
      else
        throw ConfigError("portfolio.convention must be 'log_product' or 'simple'");
    }
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  in >> j;
  return parse_run_config(j);
}

PriceTable load_input_table(const RunConfig& config) {
  if (config.synth) return generate_factor_market(*config.synth);
  return load_price_table(*config.csv_path, config.schema);
}

void stage_synth(const RunConfig& config) {
  if (!config.synth) throw ConfigError("synth stage requires a synth data source");
  fs::create_directories(config.output_dir);
  const PriceTable table = generate_factor_market(*config.synth);
  write_price_table_csv(table, (fs::path(config.output_dir) / "data.csv").string(),
                        config.schema.market_ticker);
}

void stage_train(const RunConfig& config) {
  const PriceTable table = load_input_table(config);
  fs::create_directories(config.output_dir);
  const int n = static_cast<int>(table.n_tickers());
  parallel_for_stocks(n, worker_count(config), table.tickers, [&](int l) {
    const Checkpoint cp = train_stock(table, l, config);
    fs::create_directories(fs::path(config.output_dir) / cp.ticker);
    save_checkpoint(cp, checkpoint_path(config, cp.ticker));
  });
}

void stage_predict(const RunConfig& config) {
  const PriceTable table = load_input_table(config);
  const int n = static_cast<int>(table.n_tickers());
  std::vector<StockPredictions> results(static_cast<std::size_t>(n));
  parallel_for_stocks(n, worker_count(config), table.tickers, [&](int l) {
    const Checkpoint cp =
        load_checkpoint(checkpoint_path(config, table.tickers[static_cast<std::size_t>(l)]));
    results[static_cast<std::size_t>(l)] = predict_stock(table, l, config, cp);
  });

  std::ofstream out(fs::path(config.output_dir) / "predictions.csv");
  if (!out) throw Error("cannot write predictions.csv");
  out << "date,ticker,method,predicted,real\n";
  for (int l = 0; l < n; ++l) {
    const StockPredictions& sp = results[static_cast<std::size_t>(l)];
    for (const auto& method : kMethods) {
      const Eigen::VectorXd& pred = sp.predicted.at(method);
      for (Eigen::Index t = 0; t < pred.size(); ++t)
        out << sp.dates[static_cast<std::size_t>(t)] << ','
            << table.tickers[static_cast<std::size_t>(l)] << ',' << method << ','
            << fmt_double(pred[t]) << ',' << fmt_double(sp.real[t]) << '\n';
    }
  }
}

void stage_evaluate(const RunConfig& config) {
  const PredictionsFile pf = read_predictions(config);

  json metrics;
  metrics["stocks"] = pf.tickers.size();
  metrics["windows"] = pf.n_windows;
  json methods;
  std::ofstream mpa_out(fs::path(config.output_dir) / "mpa.csv");
  mpa_out << "day,method,mpa\n";
  for (const auto& method : kMethods) {
    const PredictionPanel panel = make_panel(pf, method);
    json m;
    m["midterm_mean_mpa"] = midterm_mean_mpa(panel);
    m["trend_accuracy"] = trend_accuracy(panel);
    double full = 0.0;
    for (Eigen::Index d = 0; d < panel.days(); ++d) {
      const double v = mpa(panel, static_cast<int>(d));
      full += v;
      mpa_out << d << ',' << method << ',' << fmt_double(v) << '\n';
    }
    m["mean_mpa"] = full / static_cast<double>(panel.days());
    methods[method] = std::move(m);
  }
  metrics["methods"] = std::move(methods);

  std::ofstream out(fs::path(config.output_dir) / "metrics.json");
  out << metrics.dump(2) << '\n';
}

void stage_backtest(const RunConfig& config) {
  const PriceTable table = load_input_table(config);
  const PredictionsFile pf = read_predictions(config);
  const Eigen::VectorXd corr = training_market_correlation(table, config);
  const int W = pf.window_length;
  const auto L = static_cast<Eigen::Index>(pf.tickers.size());

  // composite path: first month from the short-term baseline (ridge),
  // second month from the refined prediction
  std::vector<Eigen::MatrixXd> predicted, realized;
  const Eigen::MatrixXd& ridge = pf.predicted.at("ridge");
  const Eigen::MatrixXd& mid = pf.predicted.at("mid_lstm");
  for (int w = 0; w < pf.n_windows; ++w) {
    Eigen::MatrixXd p(W, L);
    const int half = W / 2;
    p.topRows(half) = ridge.middleRows(w * W, half);
    p.bottomRows(W - half) = mid.middleRows(w * W + half, W - half);
    predicted.push_back(std::move(p));
    realized.push_back(pf.real.middleRows(w * W, W));
  }

  BacktestConfig bcfg;
  bcfg.mode = config.portfolio.mode;
  bcfg.risk_free = config.portfolio.risk_free;
  bcfg.convention = config.portfolio.convention;
  bcfg.solver.seed = config.seed;
  const BacktestReport report = backtest(predicted, realized, corr, bcfg);

  json j;
  j["avg_return_mean_variance"] = report.avg_return_mean_variance;
  j["avg_return_min_variance"] = report.avg_return_min_variance;
  j["avg_annual_return_mean_variance"] = report.avg_annual_return_mean_variance;
  j["avg_sharpe_mean_variance"] = report.avg_sharpe_mean_variance;
  json windows = json::array();
  for (const auto& bw : report.windows) {
    json wj;
    wj["window"] = bw.index;
    json tickers = json::array();
    for (int l : bw.selected) tickers.push_back(pf.tickers[static_cast<std::size_t>(l)]);
    wj["selected"] = std::move(tickers);
    if (!bw.selected.empty()) {
      wj["mean_variance"] = {
          {"weights", std::vector<double>(bw.mean_variance.weights.data(),
                                          bw.mean_variance.weights.data() +
                                              bw.mean_variance.weights.size())},
          {"window_return", bw.mean_variance.window_return},
          {"annual_return", bw.mean_variance.annual_return},
          {"sharpe", bw.mean_variance.sharpe}};
      wj["minimum_variance"] = {
          {"weights", std::vector<double>(bw.minimum_variance.weights.data(),
                                          bw.minimum_variance.weights.data() +
                                              bw.minimum_variance.weights.size())},
          {"window_return", bw.minimum_variance.window_return},
          {"annual_return", bw.minimum_variance.annual_return},
          {"sharpe", bw.minimum_variance.sharpe}};
    } else {
      wj["skipped"] = "empty selection";
    }
    windows.push_back(std::move(wj));
  }
  j["windows"] = std::move(windows);
  std::ofstream out(fs::path(config.output_dir) / "backtest.json");
  out << j.dump(2) << '\n';

  // frontier scatter from the last allocated window: random simplex samples
  std::ofstream frontier(fs::path(config.output_dir) / "frontier.csv");
  frontier << "sigma,return,tag\n";
  for (auto it = report.windows.rbegin(); it != report.windows.rend(); ++it) {
    if (it->selected.empty()) continue;
    const int w = it->index;
    const auto n = static_cast<Eigen::Index>(it->selected.size());
    Eigen::MatrixXd rets(W - 1, n);
    for (Eigen::Index jx = 0; jx < n; ++jx)
      rets.col(jx) =
          log_returns(predicted[static_cast<std::size_t>(w)].col(it->selected[static_cast<std::size_t>(jx)]));
    ReturnPanel panel{rets};
    Rng rng(config.seed ^ 0x5eedULL);
    auto emit = [&](const Eigen::VectorXd& wts, const std::string& tag) {
      PortfolioWeights pw{wts};
      frontier << fmt_double(std::sqrt(portfolio_variance(pw, panel))) << ','
               << fmt_double(annualized_return(pw, panel)) << ',' << tag << '\n';
    };
    for (int s = 0; s < 500; ++s) {
      Eigen::VectorXd wts(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double u = rng.next_unit();
        while (u <= 0.0) u = rng.next_unit();
        wts[i] = -std::log(u);
      }
      emit(wts / wts.sum(), "sample");
    }
    emit(it->mean_variance.weights, "mean_variance");
    emit(it->minimum_variance.weights, "minimum_variance");
    break;
  }
}

void stage_report(const RunConfig& config) {
  const fs::path dir(config.output_dir);
  std::ifstream min(dir / "metrics.json");
  if (min) {
    json metrics;
    min >> metrics;
    std::cout << "prediction metrics (" << metrics["stocks"] << " stocks, "
              << metrics["windows"] << " windows)\n";
    for (const auto& [method, m] : metrics.at("methods").items())
      std::cout << "  " << method
                << ": midterm MPA=" << m.at("midterm_mean_mpa").get<double>()
                << " TA=" << m.at("trend_accuracy").get<double>() << '\n';
  }
  std::ifstream bin(dir / "backtest.json");
  if (bin) {
    json bt;
    bin >> bt;
    std::cout << "backtest: avg window return (mean-variance) "
              << bt.at("avg_return_mean_variance").get<double>() * 100.0
              << "%, avg Sharpe " << bt.at("avg_sharpe_mean_variance").get<double>()
              << '\n';
  }
}

int run_pipeline(const RunConfig& config) {
  try {
    if (config.synth) stage_synth(config);
    stage_train(config);
    stage_predict(config);
    stage_evaluate(config);
    stage_backtest(config);
    stage_report(config);
  } catch (const std::exception& e) {
    std::cerr << "pipeline error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace midcast
