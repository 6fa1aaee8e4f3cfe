#include "midcast/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace midcast {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw MissingColumn("missing column '" + name + "'");
  return static_cast<int>(it - header.begin());
}

struct Row {
  double close;
  double volume;
};

}  // namespace

PriceTable load_price_table(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw EmptyTable("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  // per-ticker map date -> row; insertion order of dates checked per ticker
  std::map<std::string, std::map<std::string, Row>> by_ticker;
  std::map<std::string, std::string> last_date;

  if (schema.wide) {
    const int date_col = find_column(header, schema.date_column);
    std::vector<std::string> tick_cols;
    for (int j = 0; j < static_cast<int>(header.size()); ++j)
      if (j != date_col) tick_cols.push_back(header[j]);
    std::string prev;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      const std::string& date = fields.at(date_col);
      if (!prev.empty() && !(prev < date))
        throw NonMonotoneDates("dates not strictly increasing at " + date);
      prev = date;
      int k = 0;
      for (int j = 0; j < static_cast<int>(header.size()); ++j) {
        if (j == date_col) continue;
        const std::string& cell = fields.at(j);
        if (!cell.empty())
          by_ticker[tick_cols[k]][date] = Row{std::stod(cell), 0.0};
        ++k;
      }
    }
  } else {
    const int date_col = find_column(header, schema.date_column);
    const int tick_col = find_column(header, schema.ticker_column);
    const int close_col = find_column(header, schema.close_column);
    const int vol_col = find_column(header, schema.volume_column);
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      const std::string& date = fields.at(date_col);
      const std::string& ticker = fields.at(tick_col);
      auto& prev = last_date[ticker];
      if (!prev.empty() && !(prev < date))
        throw NonMonotoneDates("dates not strictly increasing for " + ticker +
                               " at " + date);
      prev = date;
      by_ticker[ticker][date] =
          Row{std::stod(fields.at(close_col)), std::stod(fields.at(vol_col))};
    }
  }

  if (by_ticker.empty()) throw EmptyTable("no data rows in " + path);
  if (by_ticker.find(schema.market_ticker) == by_ticker.end())
    throw Error("market ticker '" + schema.market_ticker + "' not present");

  // aligned calendar = intersection of trading days across all tickers that
  // cover the market's date set; tickers with any gap on that calendar drop
  const auto& market_rows = by_ticker.at(schema.market_ticker);
  std::vector<std::string> dates;
  dates.reserve(market_rows.size());
  for (const auto& [d, r] : market_rows) dates.push_back(d);

  std::vector<std::string> kept;
  int dropped = 0;
  for (const auto& [ticker, rows] : by_ticker) {
    if (ticker == schema.market_ticker) continue;
    bool complete = true;
    for (const auto& d : dates)
      if (rows.find(d) == rows.end()) {
        complete = false;
        break;
      }
    if (complete)
      kept.push_back(ticker);
    else
      ++dropped;
  }
  if (kept.empty()) throw EmptyTable("no complete tickers in " + path);

  PriceTable table;
  table.tickers = kept;
  table.dates = dates;
  table.dropped_tickers = dropped;
  const auto T = static_cast<Eigen::Index>(dates.size());
  const auto L = static_cast<Eigen::Index>(kept.size());
  table.close.resize(T, L);
  table.volume.resize(T, L);
  table.market.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double m = market_rows.at(dates[t]).close;
    if (!(m > 0.0)) throw NonPositivePrice("market level <= 0 at " + dates[t]);
    table.market[t] = m;
    for (Eigen::Index l = 0; l < L; ++l) {
      const Row& r = by_ticker.at(kept[l]).at(dates[t]);
      if (!(r.close > 0.0))
        throw NonPositivePrice("price <= 0 for " + kept[l] + " at " + dates[t]);
      if (r.volume < 0.0)
        throw Error("negative volume for " + kept[l] + " at " + dates[t]);
      table.close(t, l) = r.close;
      table.volume(t, l) = r.volume;
    }
  }
  return table;
}

std::pair<Eigen::VectorXd, NormalizationParams> minmax_normalize(
    const Eigen::VectorXd& series) {
  if (series.size() == 0) throw Error("empty series");
  const double lo = series.minCoeff();
  const double hi = series.maxCoeff();
  if (!(hi > lo)) throw DegenerateRange("constant series cannot be normalized");
  NormalizationParams params(lo, hi);
  return {normalize_with(series, params), params};
}

Eigen::VectorXd normalize_with(const Eigen::VectorXd& series,
                               const NormalizationParams& params) {
  return (series.array() - params.min_value) / params.span();
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& normalized,
                            const NormalizationParams& params) {
  return normalized.array() * params.span() + params.min_value;
}

std::pair<RollingWindowSet, RollingWindowSet> make_windows(
    const Eigen::MatrixXd& series, int window_length, double split_fraction) {
  if (window_length < 2) throw Error("window_length must be >= 2");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw Error("split_fraction must lie in (0,1)");
  const auto T = series.rows();
  if (T < 2 * window_length)
    throw SeriesTooShort("series of " + std::to_string(T) +
                         " days needs at least " +
                         std::to_string(2 * window_length));

  const auto train_len =
      static_cast<Eigen::Index>(std::floor(split_fraction * static_cast<double>(T)));
  const auto n_pairs = train_len - window_length;
  if (n_pairs <= 0)
    throw SeriesTooShort("training portion of " + std::to_string(train_len) +
                         " days yields no rolling pairs");

  RollingWindowSet train;
  train.window_length = window_length;
  train.inputs.reserve(static_cast<std::size_t>(n_pairs));
  train.targets.reserve(static_cast<std::size_t>(n_pairs));
  for (Eigen::Index i = 0; i < n_pairs; ++i) {
    train.inputs.push_back(series.middleRows(i, window_length - 1));
    train.targets.push_back(series.row(i + window_length - 1));
  }

  RollingWindowSet test;
  test.window_length = window_length;
  const auto test_len = T - train_len;
  const auto n_segments = test_len / window_length;
  for (Eigen::Index s = 0; s < n_segments; ++s)
    test.test_segments.push_back(
        series.middleRows(train_len + s * window_length, window_length));

  return {train, test};
}

void write_price_table_csv(const PriceTable& table, const std::string& path,
                           const std::string& market_ticker) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out.precision(17);
  out << "date,ticker,close,volume\n";
  for (Eigen::Index t = 0; t < table.days(); ++t) {
    out << table.dates[t] << ',' << market_ticker << ',' << table.market[t]
        << ",0\n";
    for (Eigen::Index l = 0; l < table.n_tickers(); ++l)
      out << table.dates[t] << ',' << table.tickers[l] << ','
          << table.close(t, l) << ',' << table.volume(t, l) << '\n';
  }
}

}  // namespace midcast
