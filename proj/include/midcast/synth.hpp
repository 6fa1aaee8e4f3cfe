#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "midcast/data.hpp"

namespace midcast {

// Sine-plus-noise single stock: the sine is the midterm trend, the noise
// the anomalies. Volume switches regime around peaks and troughs so all
// four price/volume states occur.
struct SynthConfig {
  int days = 600;
  double amplitude = 1.0;
  double period = 120.0;
  double level_offset = 2.0;  // must exceed amplitude, keeps prices positive
  double noise_std = 0.05;
  std::uint64_t seed = 42;

  double volume_base = 1e6;
  double volume_high_factor = 3.0;  // multiplier in the high-volume regime
  double volume_noise = 0.05;       // lognormal sigma on volume
};

struct StockSeries {
  Eigen::VectorXd price;
  Eigen::VectorXd volume;
  Eigen::VectorXd trend;  // the noiseless sinusoid, for evaluation
};

StockSeries generate_sine_noise(const SynthConfig& config);

// Multi-stock market: each stock's log price follows the market log level
// scaled by its loading, plus idiosyncratic noise. Correlation with the
// market rises monotonically with loading.
struct FactorMarketConfig {
  int days = 1000;
  int n_stocks = 20;
  std::vector<double> loadings;  // per stock; filled 0.05*(k+1) when empty
  double market_level = 100.0;
  double market_trend = 2e-4;     // daily log drift
  double market_amplitude = 0.2;  // log-scale sine component
  double market_period = 120.0;
  double idio_noise = 0.02;       // log-scale iid noise per stock
  std::uint64_t seed = 42;

  double volume_base = 1e6;
  double volume_high_factor = 3.0;
  double volume_noise = 0.05;
};

PriceTable generate_factor_market(const FactorMarketConfig& config);

}  // namespace midcast
