#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "midcast/errors.hpp"

namespace midcast {

// Aligned per-ticker close/volume series plus the market index, indexed by
// trading day. Immutable after load.
struct PriceTable {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;   // strictly increasing ISO-8601 labels
  Eigen::MatrixXd close;            // day x ticker, > 0
  Eigen::MatrixXd volume;           // day x ticker, >= 0
  Eigen::VectorXd market;           // day, > 0
  int dropped_tickers = 0;          // incomplete histories removed at load

  Eigen::Index days() const { return close.rows(); }
  Eigen::Index n_tickers() const { return close.cols(); }
};

struct CsvSchema {
  std::string date_column = "date";
  std::string ticker_column = "ticker";
  std::string close_column = "close";
  std::string volume_column = "volume";
  std::string market_ticker = "SPX";  // ticker treated as the market index
  bool wide = false;                  // wide layout: one close column per ticker
};

// min(X), max(X) fitted on the training portion of a series (affine
// rescale to [0,1]); max > min enforced at construction.
struct NormalizationParams {
  double min_value = 0.0;
  double max_value = 1.0;

  NormalizationParams() = default;
  NormalizationParams(double lo, double hi) : min_value(lo), max_value(hi) {
    if (!(hi > lo)) throw DegenerateRange("normalization range is degenerate");
  }
  double span() const { return max_value - min_value; }
};

// 60-day rolling decomposition of a multi-channel series. Training windows
// are one-step-ahead pairs advancing by one day; test segments are disjoint
// consecutive full windows (segment k-1 is the input used to predict k).
struct RollingWindowSet {
  int window_length = 60;
  std::vector<Eigen::MatrixXd> inputs;       // (window_length-1) x channels
  std::vector<Eigen::RowVectorXd> targets;   // 1 x channels
  std::vector<Eigen::MatrixXd> test_segments;  // window_length x channels

  std::size_t n_pairs() const { return inputs.size(); }
  std::size_t n_segments() const { return test_segments.size(); }
};

PriceTable load_price_table(const std::string& path, const CsvSchema& schema);

std::pair<Eigen::VectorXd, NormalizationParams> minmax_normalize(
    const Eigen::VectorXd& series);

Eigen::VectorXd normalize_with(const Eigen::VectorXd& series,
                               const NormalizationParams& params);

Eigen::VectorXd denormalize(const Eigen::VectorXd& normalized,
                            const NormalizationParams& params);

// Splits `series` (day x channels) at floor(split_fraction * days): the
// training part becomes sliding (input, target) pairs, the test part
// disjoint full segments.
std::pair<RollingWindowSet, RollingWindowSet> make_windows(
    const Eigen::MatrixXd& series, int window_length, double split_fraction);

void write_price_table_csv(const PriceTable& table, const std::string& path,
                           const std::string& market_ticker);

}  // namespace midcast
