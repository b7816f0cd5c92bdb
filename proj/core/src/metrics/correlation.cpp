#include "ipr/metrics/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "ipr/error.hpp"

namespace ipr {

const char* to_string(CorrelationMethod method) {
  return method == CorrelationMethod::Spearman ? "spearman" : "pearson";
}

namespace {

void check_inputs(std::span<const double> xs, std::span<const double> ys, const char* who) {
  if (xs.size() != ys.size()) {
    throw StatisticsError(std::string(who) + ": series lengths differ (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) throw StatisticsError(std::string(who) + ": need at least 3 paired samples");
  for (double v : xs) {
    if (!std::isfinite(v)) throw StatisticsError(std::string(who) + ": non-finite sample");
  }
  for (double v : ys) {
    if (!std::isfinite(v)) throw StatisticsError(std::string(who) + ": non-finite sample");
  }
}

double product_moment(std::span<const double> xs, std::span<const double> ys, const char* who) {
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw StatisticsError(std::string(who) + ": correlation is undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw StatisticsError("correlation p-value needs n >= 3");
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  // With t^2 = r^2 df / (1 - r^2), the two-sided tail df/(df + t^2) reduces to 1 - r^2.
  const double df = static_cast<double>(n - 2);
  return std::clamp(boost::math::ibeta(df / 2.0, 0.5, 1.0 - r2), 0.0, 1.0);
}

CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys, "pearson");
  CorrelationResult r;
  r.coefficient = product_moment(xs, ys, "pearson");
  r.n = xs.size();
  r.p_value = correlation_p_value(r.coefficient, r.n);
  r.method = CorrelationMethod::Pearson;
  return r;
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys, "spearman");
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  CorrelationResult r;
  r.coefficient = product_moment(rx, ry, "spearman");
  r.n = xs.size();
  r.p_value = correlation_p_value(r.coefficient, r.n);
  r.method = CorrelationMethod::Spearman;
  return r;
}

std::string significance_stars(double p) {
  if (p <= 0.001) return "***";
  if (p <= 0.01) return "**";
  if (p <= 0.05) return "*";
  return "ns";
}

}  // namespace ipr
