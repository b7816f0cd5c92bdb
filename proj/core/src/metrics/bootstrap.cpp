#include <algorithm>
#include <cmath>

#include "ipr/error.hpp"
#include "ipr/metrics/statistics.hpp"
#include "ipr/rng.hpp"

namespace ipr {

double running_mean(std::span<const double> values) {
  if (values.empty()) throw StatisticsError("mean of an empty series");
  double m = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    m += (v - m) / static_cast<double>(k);
  }
  return m;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatisticsError("quantile of an empty series");
  if (!(q >= 0.0 && q <= 1.0)) throw StatisticsError("quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed) {
  if (values.empty()) throw StatisticsError("bootstrap of an empty series");
  if (!(level > 0.0 && level < 1.0)) throw StatisticsError("bootstrap level must lie in (0, 1)");
  if (resamples < 1) throw StatisticsError("bootstrap needs at least one resample");

  Rng rng(seed);
  std::vector<double> draw(values.size());
  std::vector<double> means(resamples);
  for (double& m : means) {
    for (double& d : draw) d = values[rng.below(values.size())];
    m = running_mean(draw);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  const double center = running_mean(values);
  Interval ci{quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
  ci.lo = std::min(ci.lo, center);
  ci.hi = std::max(ci.hi, center);
  return ci;
}

}  // namespace ipr
