#include "midcast/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "midcast/rng.hpp"

namespace midcast {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string trading_date(int index) {
  using namespace std::chrono;
  const sys_days base = sys_days(year{2010} / January / 4);
  const year_month_day ymd(base + days{index});
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

double regime_volume(double phase_sin, double base, double high_factor,
                     double noise_sigma, Rng& rng) {
  // high volume near peaks and troughs of the cycle
  const bool high = std::abs(phase_sin) > 0.7;
  const double level = high ? base * high_factor : base;
  return level * std::exp(noise_sigma * rng.next_gaussian());
}

}  // namespace

StockSeries generate_sine_noise(const SynthConfig& config) {
  if (config.period <= 0.0) throw Error("period must be positive");
  if (config.noise_std < 0.0) throw Error("noise_std must be >= 0");
  if (!(config.level_offset > config.amplitude))
    throw Error("level_offset must exceed amplitude");

  Rng rng(config.seed);
  StockSeries s;
  s.price.resize(config.days);
  s.volume.resize(config.days);
  s.trend.resize(config.days);
  for (int t = 0; t < config.days; ++t) {
    const double phase = std::sin(kTwoPi * t / config.period);
    s.trend[t] = config.level_offset + config.amplitude * phase;
    s.price[t] = s.trend[t] + config.noise_std * rng.next_gaussian();
    s.volume[t] = regime_volume(phase, config.volume_base,
                                config.volume_high_factor, config.volume_noise,
                                rng);
  }
  return s;
}

PriceTable generate_factor_market(const FactorMarketConfig& config) {
  if (config.days < 2 || config.n_stocks < 1)
    throw Error("factor market needs days >= 2 and n_stocks >= 1");
  std::vector<double> loadings = config.loadings;
  if (loadings.empty()) {
    loadings.resize(static_cast<std::size_t>(config.n_stocks));
    for (int k = 0; k < config.n_stocks; ++k)
      loadings[static_cast<std::size_t>(k)] = 0.05 * (k + 1);
  }
  if (static_cast<int>(loadings.size()) != config.n_stocks)
    throw Error("loadings size must equal n_stocks");

  Rng rng(config.seed);
  PriceTable table;
  table.dates.reserve(static_cast<std::size_t>(config.days));
  for (int t = 0; t < config.days; ++t) table.dates.push_back(trading_date(t));
  table.tickers.reserve(static_cast<std::size_t>(config.n_stocks));
  for (int k = 0; k < config.n_stocks; ++k)
    table.tickers.push_back("S" + std::to_string(k + 1));

  table.market.resize(config.days);
  const double log_m0 = std::log(config.market_level);
  Eigen::VectorXd log_market(config.days);
  for (int t = 0; t < config.days; ++t) {
    log_market[t] = log_m0 + config.market_trend * t +
                    config.market_amplitude *
                        std::sin(kTwoPi * t / config.market_period);
    table.market[t] = std::exp(log_market[t]);
  }

  table.close.resize(config.days, config.n_stocks);
  table.volume.resize(config.days, config.n_stocks);
  for (int k = 0; k < config.n_stocks; ++k) {
    Rng stock_rng(rng.fork(static_cast<std::uint64_t>(k)));
    const double log_x0 = std::log(50.0 + 5.0 * k);
    const double phase_shift = 0.31 * k;
    for (int t = 0; t < config.days; ++t) {
      const double log_px =
          log_x0 +
          loadings[static_cast<std::size_t>(k)] * (log_market[t] - log_market[0]) +
          config.idio_noise * stock_rng.next_gaussian();
      table.close(t, k) = std::exp(log_px);
      const double phase =
          std::sin(kTwoPi * t / config.market_period + phase_shift);
      table.volume(t, k) =
          regime_volume(phase, config.volume_base, config.volume_high_factor,
                        config.volume_noise, stock_rng);
    }
  }
  return table;
}

}  // namespace midcast
