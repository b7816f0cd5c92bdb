#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipr/harness/harness.hpp"
#include "ipr/nn/model.hpp"
#include "ipr/nn/tensor.hpp"

namespace ipr::testing {

/// Uniform [lo, hi) entries from a seeded stream.
Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0);

/// SSIM computed window by window with an explicit 2-D Gaussian and two-pass
/// moments. No separable filtering, no clamping.
double ssim_direct(const Tensor& a, const Tensor& b, std::size_t window = 11, double sigma = 1.5, double k1 = 0.01,
                   double k2 = 0.03, double dynamic_range = 1.0);

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t passed = 0;
  std::size_t excluded = 0;
  double worst_rel_error = 0.0;  // over checked elements
  double pass_fraction() const { return checked == 0 ? 0.0 : static_cast<double>(passed) / checked; }
};

/// Compares grad_wrt_input(Standard) with central differences computed here
/// from raw forward passes. An element is excluded (kink) if perturbing it by
/// +-step flips any ReLU input sign or moves any max-pool argmax.
GradientCheck check_input_gradient(const Model& model, const Tensor& image, std::size_t class_index,
                                   double step = 1e-3, double rel_tol = 1e-4);

/// Toy architecture trained exactly as the CLI does with default settings
/// (cached per process).
const Model& trained_toy(const std::string& architecture_id);

/// Conv/ReLU/dense network without pooling or biases (DeepLIFT == InputXGradient).
Model bias_free_relu_net(std::uint64_t seed);

/// Conv/ReLU/dense network without pooling, biases kept (DeepLIFT completeness).
Model pool_free_relu_net(std::uint64_t seed);

/// Single dense layer on a [1,4,4] input: logit_c = w_c . x + b_c.
Model linear_model(std::uint64_t seed, std::size_t num_classes = 2);

/// Five-architecture S^I profiles built so that the reference coefficients
/// come out: IG and InputXGradient share a rank order with Pearson 0.9668,
/// GuidedBP and GuidedGradCAM have Pearson 0.9843 with one adjacent rank swap
/// (Spearman 0.9). The profiles are constructed, not transcribed: the
/// per-architecture values themselves were never printed.
SITable constructed_profile_table();

}  // namespace ipr::testing
