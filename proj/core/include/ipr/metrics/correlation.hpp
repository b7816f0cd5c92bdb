#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ipr {

enum class CorrelationMethod { Spearman, Pearson };

const char* to_string(CorrelationMethod method);

struct CorrelationResult {
  double coefficient = 0.0;  // in [-1, 1]
  double p_value = 1.0;      // two-sided, in [0, 1]
  std::size_t n = 0;
  CorrelationMethod method = CorrelationMethod::Pearson;
};

/// Product-moment correlation with a two-sided Student-t p-value (n - 2 df).
/// Requires equal lengths and n >= 3; a zero-variance series throws
/// StatisticsError.
CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys);

/// Pearson correlation of fractional ranks (ties share their average rank),
/// same p-value approximation. |rho| == 1 gives p == 0.
CorrelationResult spearman(std::span<const double> xs, std::span<const double> ys);

/// 1-based ranks; tied values receive the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Two-sided p-value of H0: rho = 0 from t = r sqrt((n-2) / (1-r^2)).
double correlation_p_value(double r, std::size_t n);

/// "***" for p <= 0.001, "**" for p <= 0.01, "*" for p <= 0.05, else "ns".
std::string significance_stars(double p_value);

}  // namespace ipr
