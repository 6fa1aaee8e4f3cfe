#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "midcast/data.hpp"
#include "midcast/lstm.hpp"
#include "midcast/portfolio.hpp"
#include "midcast/synth.hpp"

namespace midcast {

struct HmmConfig {
  int states = 4;
  int iterations = 10;
  bool log_volume = true;  // feed log1p(volume) instead of raw shares
};

struct FusionConfig {
  bool one_hot = false;
  int train_windows = 8;  // trailing training segments used to fit the weights
};

struct PortfolioConfig {
  SelectionMode mode = SelectionMode::AllThreshold;
  double risk_free = 0.015;
  ReturnConvention convention = ReturnConvention::LogReturnProduct;
};

struct RunConfig {
  // exactly one of csv_path / synth is set
  std::optional<std::string> csv_path;
  CsvSchema schema;
  std::optional<FactorMarketConfig> synth;

  int window_length = 60;
  double split_fraction = 0.85;
  LstmTrainConfig lstm;
  HmmConfig hmm;
  FusionConfig fusion;
  PortfolioConfig portfolio;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency
  std::string output_dir = "out";
};

// Parses and validates a config document; unknown keys are rejected with
// their JSON path in the message.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

PriceTable load_input_table(const RunConfig& config);

// pipeline stages; each reads prior artifacts from config.output_dir
void stage_synth(const RunConfig& config);    // data.csv (synth source only)
void stage_train(const RunConfig& config);    // <ticker>/checkpoint.json
void stage_predict(const RunConfig& config);  // predictions.csv
void stage_evaluate(const RunConfig& config); // metrics.json, mpa.csv
void stage_backtest(const RunConfig& config); // backtest.json, frontier.csv
void stage_report(const RunConfig& config);   // prints a summary

int run_pipeline(const RunConfig& config);  // all stages, exit status

}  // namespace midcast
