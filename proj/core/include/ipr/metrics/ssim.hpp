#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ipr/nn/tensor.hpp"

namespace ipr {

/// Gaussian-window SSIM settings (Wang et al. 2004 conventions by default).
struct SsimParams {
  std::size_t window_size = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

void validate(const SsimParams& params);

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> gaussian_window(std::size_t size, double sigma);

/// Mean SSIM over every valid (unpadded) window position, before clamping.
/// Inputs are single-channel ([H,W] or [1,H,W]) with values in [0,1] and
/// both spatial extents >= window_size.
double ssim_unclamped(const Tensor& a, const Tensor& b, const SsimParams& params = {});

/// ssim_unclamped clamped to [0, 1].
double ssim(const Tensor& a, const Tensor& b, const SsimParams& params = {});

enum class PerceivedSimilarity { Excellent, Good, Fair, Poor, Bad };

const char* to_string(PerceivedSimilarity bucket);

/// Perceived-similarity band of an SSIM score:
/// >= 0.99 Excellent, [0.95, 0.99) Good, [0.88, 0.95) Fair, [0.5, 0.88) Poor, < 0.5 Bad.
PerceivedSimilarity perceived_similarity_bucket(double ssim_value);

}  // namespace ipr
