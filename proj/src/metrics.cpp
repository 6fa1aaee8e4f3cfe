#include "midcast/metrics.hpp"

#include <cmath>

namespace midcast {

double mpa(const PredictionPanel& panel, int day) {
  if (day < 0 || day >= panel.days()) throw Error("mpa: day out of range");
  const auto L = panel.stocks();
  double acc = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    const double real = panel.real(day, l);
    if (!(real > 0.0)) throw NonPositivePrice("mpa: real price <= 0");
    acc += std::abs(real - panel.predicted(day, l)) / real;
  }
  return 1.0 - acc / static_cast<double>(L);
}

double midterm_mean_mpa(const PredictionPanel& panel) {
  double acc = 0.0;
  int count = 0;
  for (int start : panel.window_starts)
    for (int d = panel.midterm_first; d <= panel.midterm_last; ++d) {
      const int day = start + d;
      if (day >= panel.days()) throw Error("midterm_mean_mpa: window exceeds panel");
      acc += mpa(panel, day);
      ++count;
    }
  if (count == 0) throw Error("midterm_mean_mpa: no midterm days");
  return acc / count;
}

double trend_accuracy(const PredictionPanel& panel) {
  if (panel.window_starts.empty()) throw Error("trend_accuracy: no windows");
  double window_acc = 0.0;
  for (int start : panel.window_starts) {
    const int last = start + panel.window_length - 1;
    if (last >= panel.days()) throw Error("trend_accuracy: window exceeds panel");
    double flags = 0.0;
    for (Eigen::Index l = 0; l < panel.stocks(); ++l) {
      const bool up_pred = panel.predicted(start, l) <= panel.predicted(last, l);
      const bool down_pred = panel.predicted(start, l) >= panel.predicted(last, l);
      const bool up_real = panel.real(start, l) <= panel.real(last, l);
      const bool down_real = panel.real(start, l) >= panel.real(last, l);
      if ((up_pred && up_real) || (down_pred && down_real)) flags += 1.0;
    }
    window_acc += flags / static_cast<double>(panel.stocks());
  }
  return window_acc / static_cast<double>(panel.window_starts.size());
}

Eigen::VectorXd log_returns(const Eigen::VectorXd& prices) {
  if (prices.size() < 2) throw Error("log_returns: need at least 2 prices");
  for (Eigen::Index t = 0; t < prices.size(); ++t)
    if (!(prices[t] > 0.0)) throw NonPositivePrice("log_returns: price <= 0");
  Eigen::VectorXd r(prices.size() - 1);
  for (Eigen::Index t = 0; t + 1 < prices.size(); ++t)
    r[t] = std::log(prices[t + 1] / prices[t]);
  return r;
}

double cumulative_return(const Eigen::VectorXd& prices, ReturnConvention conv) {
  for (Eigen::Index t = 0; t < prices.size(); ++t)
    if (!(prices[t] > 0.0)) throw NonPositivePrice("cumulative_return: price <= 0");
  if (prices.size() < 2) return 1.0;  // empty product
  double c = 1.0;
  for (Eigen::Index t = 0; t + 1 < prices.size(); ++t) {
    const double ratio = prices[t + 1] / prices[t];
    c *= conv == ReturnConvention::LogReturnProduct ? 1.0 + std::log(ratio) : ratio;
  }
  return c;
}

}  // namespace midcast
