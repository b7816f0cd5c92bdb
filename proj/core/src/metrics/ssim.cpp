#include "ipr/metrics/ssim.hpp"

#include <algorithm>
#include <cmath>

#include "ipr/error.hpp"

namespace ipr {

void validate(const SsimParams& p) {
  if (p.window_size < 3 || p.window_size % 2 == 0) {
    throw ValidationError("ssim: window_size must be odd and >= 3, got " + std::to_string(p.window_size));
  }
  if (!(p.window_sigma > 0.0)) throw ValidationError("ssim: window_sigma must be positive");
  if (!(p.k1 > 0.0) || !(p.k2 > 0.0) || !(p.dynamic_range > 0.0)) {
    throw ValidationError("ssim: k1, k2 and dynamic_range must be positive");
  }
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> taps(size);
  const double center = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

namespace {

struct Plane {
  std::size_t h, w;
};

Plane plane_of(const Tensor& t) {
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  if (t.rank() == 3 && t.dim(0) == 1) return {t.dim(1), t.dim(2)};
  throw ShapeError("ssim: expected a single-channel image, got " + shape_to_string(t.shape()));
}

// Valid-mode separable filtering: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& src, Plane p, const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t ow = p.w - k + 1, oh = p.h - k + 1;
  std::vector<double> rows(p.h * ow);
  for (std::size_t y = 0; y < p.h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * src[y * p.w + x + t];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim_unclamped(const Tensor& a, const Tensor& b, const SsimParams& params) {
  validate(params);
  const Plane pa = plane_of(a), pb = plane_of(b);
  if (pa.h != pb.h || pa.w != pb.w) {
    throw ShapeError("ssim: image shapes differ: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  if (pa.h < params.window_size || pa.w < params.window_size) {
    throw ShapeError("ssim: image " + shape_to_string(a.shape()) + " smaller than the " +
                     std::to_string(params.window_size) + "-pixel window");
  }
  for (const Tensor* t : {&a, &b}) {
    for (double v : t->values()) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("ssim: pixel values must lie in [0, 1]");
    }
  }

  const std::size_t n = pa.h * pa.w;
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto taps = gaussian_window(params.window_size, params.window_sigma);
  const auto mu_a = filter_valid(a.values(), pa, taps);
  const auto mu_b = filter_valid(b.values(), pa, taps);
  const auto e_aa = filter_valid(aa, pa, taps);
  const auto e_bb = filter_valid(bb, pa, taps);
  const auto e_ab = filter_valid(ab, pa, taps);

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const Tensor& a, const Tensor& b, const SsimParams& params) {
  return std::clamp(ssim_unclamped(a, b, params), 0.0, 1.0);
}

const char* to_string(PerceivedSimilarity bucket) {
  switch (bucket) {
    case PerceivedSimilarity::Excellent: return "Excellent";
    case PerceivedSimilarity::Good: return "Good";
    case PerceivedSimilarity::Fair: return "Fair";
    case PerceivedSimilarity::Poor: return "Poor";
    case PerceivedSimilarity::Bad: return "Bad";
  }
  return "?";
}

PerceivedSimilarity perceived_similarity_bucket(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("perceived_similarity_bucket: SSIM must lie in [0, 1]");
  if (s >= 0.99) return PerceivedSimilarity::Excellent;
  if (s >= 0.95) return PerceivedSimilarity::Good;
  if (s >= 0.88) return PerceivedSimilarity::Fair;
  if (s >= 0.5) return PerceivedSimilarity::Poor;
  return PerceivedSimilarity::Bad;
}

}  // namespace ipr
