#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ipr {

/// Arithmetic mean accumulated as m += (x - m) / k. For a constant series
/// the result equals that constant exactly. Throws on empty input.
double running_mean(std::span<const double> values);

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap of the mean: `resamples` draws with replacement,
/// returning the (1-level)/2 and (1+level)/2 quantiles of the resampled
/// means, widened if necessary so that the interval contains the sample mean.
/// Deterministic for a given seed.
Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed);

}  // namespace ipr
