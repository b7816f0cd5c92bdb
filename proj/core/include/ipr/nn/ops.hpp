#pragma once

#include <cstddef>
#include <vector>

#include "ipr/nn/tensor.hpp"

namespace ipr {

enum class ReluBackwardMode { Standard, Guided, DeepLiftRescale };

/// Below this |x - x_ref| the rescale multiplier falls back to the Standard rule.
inline constexpr double kRescaleEpsilon = 1e-9;

/// input [Cin,H,W], kernel [Cout,Cin,kH,kW], bias [Cout] -> [Cout,H',W'].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding);

/// Gradient of a conv2d output with respect to its input.
Tensor conv2d_backward_input(const Tensor& upstream, const Tensor& kernel, const Shape& input_shape,
                             std::size_t stride, std::size_t padding);

/// Accumulates kernel and bias gradients into `kernel_grad` / `bias_grad`.
void conv2d_backward_params(const Tensor& upstream, const Tensor& input, std::size_t stride,
                            std::size_t padding, Tensor& kernel_grad, Tensor& bias_grad);

Tensor relu_forward(const Tensor& x);

/// Backward rule of the ReLU nonlinearity.
///
///   Standard:        upstream * 1[x > 0]
///   Guided:          max(0, upstream) * 1[x > 0]
///   DeepLiftRescale: upstream * (relu(x) - relu(x_ref)) / (x - x_ref), falling back
///                    to Standard elementwise where |x - x_ref| < kRescaleEpsilon
///
/// `reference_input` must be non-null exactly when mode is DeepLiftRescale.
Tensor relu_backward(const Tensor& upstream, const Tensor& forward_input, ReluBackwardMode mode,
                     const Tensor* reference_input = nullptr);

struct PoolResult {
  Tensor output;
  /// Flat index into the input of the maximum chosen for each output element.
  std::vector<std::size_t> argmax;
};

/// Windowed maximum over [C,H,W]. Ties resolve to the lowest flat index.
PoolResult max_pool2d(const Tensor& input, std::size_t window, std::size_t stride);

Tensor max_pool2d_backward(const Tensor& upstream, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape);

/// weight [m,n] * input [n] + bias [m].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor dense_backward_input(const Tensor& upstream, const Tensor& weight);

void dense_backward_params(const Tensor& upstream, const Tensor& input, Tensor& weight_grad,
                           Tensor& bias_grad);

/// Bilinear resize of each channel of [C,H,W] with half-pixel centers
/// (corner alignment off).
Tensor upsample_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w);

}  // namespace ipr
