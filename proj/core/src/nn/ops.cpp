#include "ipr/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipr/error.hpp"

namespace ipr {
namespace {

struct ConvGeometry {
  std::size_t cin, h, w, cout, kh, kw, oh, ow;
};

ConvGeometry conv_geometry(const Shape& input, const Shape& kernel, std::size_t stride,
                           std::size_t padding) {
  if (input.size() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_to_string(input));
  if (kernel.size() != 4) {
    throw ShapeError("conv2d: kernel must be [Cout,Cin,kH,kW], got " + shape_to_string(kernel));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (kernel[1] != input[0]) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel[1]) + " input channels, input has " +
                     std::to_string(input[0]));
  }
  if (kernel[2] > input[1] + 2 * padding || kernel[3] > input[2] + 2 * padding) {
    throw ShapeError("conv2d: kernel " + shape_to_string(kernel) + " larger than padded input " +
                     shape_to_string(input) + " with padding " + std::to_string(padding));
  }
  ConvGeometry g{input[0], input[1], input[2], kernel[0], kernel[2], kernel[3], 0, 0};
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;
  return g;
}

// Input row/col touched by output position `o` and kernel tap `k`, or -1 if in padding.
inline std::ptrdiff_t source_index(std::size_t o, std::size_t k, std::size_t stride, std::size_t padding,
                                   std::size_t extent) {
  const auto pos = static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(padding);
  return (pos < 0 || pos >= static_cast<std::ptrdiff_t>(extent)) ? -1 : pos;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  const ConvGeometry g = conv_geometry(input.shape(), kernel.shape(), stride, padding);
  if (bias.shape() != Shape{g.cout}) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(g.cout) + "], got " + shape_to_string(bias.shape()));
  }
  Tensor out({g.cout, g.oh, g.ow});
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const auto iy = source_index(oy, ky, stride, padding, g.h);
            if (iy < 0) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const auto ix = source_index(ox, kx, stride, padding, g.w);
              if (ix < 0) continue;
              acc += kernel[((co * g.cin + ci) * g.kh + ky) * g.kw + kx] *
                     input.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(co, oy, ox) = acc + bias[co];
      }
    }
  }
  return out;
}

Tensor conv2d_backward_input(const Tensor& upstream, const Tensor& kernel, const Shape& input_shape,
                             std::size_t stride, std::size_t padding) {
  const ConvGeometry g = conv_geometry(input_shape, kernel.shape(), stride, padding);
  if (upstream.shape() != Shape{g.cout, g.oh, g.ow}) {
    throw ShapeError("conv2d backward: upstream " + shape_to_string(upstream.shape()) + " does not match output [" +
                     std::to_string(g.cout) + "," + std::to_string(g.oh) + "," + std::to_string(g.ow) + "]");
  }
  Tensor grad(input_shape);
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        const double up = upstream.at(co, oy, ox);
        if (up == 0.0) continue;
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const auto iy = source_index(oy, ky, stride, padding, g.h);
            if (iy < 0) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const auto ix = source_index(ox, kx, stride, padding, g.w);
              if (ix < 0) continue;
              grad.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) +=
                  up * kernel[((co * g.cin + ci) * g.kh + ky) * g.kw + kx];
            }
          }
        }
      }
    }
  }
  return grad;
}

void conv2d_backward_params(const Tensor& upstream, const Tensor& input, std::size_t stride,
                            std::size_t padding, Tensor& kernel_grad, Tensor& bias_grad) {
  const ConvGeometry g = conv_geometry(input.shape(), kernel_grad.shape(), stride, padding);
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        const double up = upstream.at(co, oy, ox);
        bias_grad[co] += up;
        if (up == 0.0) continue;
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const auto iy = source_index(oy, ky, stride, padding, g.h);
            if (iy < 0) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const auto ix = source_index(ox, kx, stride, padding, g.w);
              if (ix < 0) continue;
              kernel_grad[((co * g.cin + ci) * g.kh + ky) * g.kw + kx] +=
                  up * input.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
      }
    }
  }
}

Tensor relu_forward(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& upstream, const Tensor& forward_input, ReluBackwardMode mode,
                     const Tensor* reference_input) {
  if (upstream.shape() != forward_input.shape()) {
    throw ShapeError("relu_backward: upstream " + shape_to_string(upstream.shape()) + " vs input " +
                     shape_to_string(forward_input.shape()));
  }
  const bool rescale = mode == ReluBackwardMode::DeepLiftRescale;
  if (rescale && reference_input == nullptr) {
    throw ValidationError("relu_backward: DeepLiftRescale requires a reference input");
  }
  if (!rescale && reference_input != nullptr) {
    throw ValidationError("relu_backward: a reference input is only accepted in DeepLiftRescale mode");
  }
  if (rescale && reference_input->shape() != forward_input.shape()) {
    throw ShapeError("relu_backward: reference " + shape_to_string(reference_input->shape()) + " vs input " +
                     shape_to_string(forward_input.shape()));
  }

  Tensor grad(upstream.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double x = forward_input[i];
    const double up = upstream[i];
    switch (mode) {
      case ReluBackwardMode::Standard:
        grad[i] = x > 0.0 ? up : 0.0;
        break;
      case ReluBackwardMode::Guided:
        grad[i] = (x > 0.0 && up > 0.0) ? up : 0.0;
        break;
      case ReluBackwardMode::DeepLiftRescale: {
        const double ref = (*reference_input)[i];
        const double delta = x - ref;
        if (std::abs(delta) < kRescaleEpsilon) {
          grad[i] = x > 0.0 ? up : 0.0;
        } else {
          const double out_delta = (x > 0.0 ? x : 0.0) - (ref > 0.0 ? ref : 0.0);
          grad[i] = up * (out_delta / delta);
        }
        break;
      }
    }
  }
  return grad;
}

PoolResult max_pool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  if (input.rank() != 3) throw ShapeError("max_pool2d: input must be [C,H,W], got " + shape_to_string(input.shape()));
  if (window == 0 || stride == 0) throw ShapeError("max_pool2d: window and stride must be positive");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (window > h || window > w) {
    throw ShapeError("max_pool2d: window " + std::to_string(window) + " exceeds input " + shape_to_string(input.shape()));
  }
  const std::size_t oh = (h - window) / stride + 1;
  const std::size_t ow = (w - window) / stride + 1;
  PoolResult result{Tensor({c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (ch * h + oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < window; ++ky) {
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t idx = (ch * h + oy * stride + ky) * w + ox * stride + kx;
            // Strict comparison keeps the earliest (lowest flat index) maximum.
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + oy) * ow + ox;
        result.output[o] = input[best];
        result.argmax[o] = best;
      }
    }
  }
  return result;
}

Tensor max_pool2d_backward(const Tensor& upstream, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape) {
  if (upstream.size() != argmax.size()) {
    throw ShapeError("max_pool2d_backward: upstream has " + std::to_string(upstream.size()) +
                     " elements, argmax table has " + std::to_string(argmax.size()));
  }
  Tensor grad(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) {
    if (argmax[o] >= grad.size()) throw ShapeError("max_pool2d_backward: argmax index out of range");
    grad[argmax[o]] += upstream[o];
  }
  return grad;
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw ShapeError("dense: weight must be [m,n], got " + shape_to_string(weight.shape()));
  const std::size_t m = weight.dim(0), n = weight.dim(1);
  if (input.rank() != 1 || input.size() != n) {
    throw ShapeError("dense: weight " + shape_to_string(weight.shape()) + " cannot multiply input " +
                     shape_to_string(input.shape()));
  }
  if (bias.shape() != Shape{m}) {
    throw ShapeError("dense: bias must be [" + std::to_string(m) + "], got " + shape_to_string(bias.shape()));
  }
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += weight[i * n + j] * input[j];
    out[i] = acc + bias[i];
  }
  return out;
}

Tensor dense_backward_input(const Tensor& upstream, const Tensor& weight) {
  const std::size_t m = weight.dim(0), n = weight.dim(1);
  if (upstream.size() != m) throw ShapeError("dense backward: upstream size mismatch");
  Tensor grad({n});
  for (std::size_t i = 0; i < m; ++i) {
    const double up = upstream[i];
    for (std::size_t j = 0; j < n; ++j) grad[j] += up * weight[i * n + j];
  }
  return grad;
}

void dense_backward_params(const Tensor& upstream, const Tensor& input, Tensor& weight_grad,
                           Tensor& bias_grad) {
  const std::size_t m = weight_grad.dim(0), n = weight_grad.dim(1);
  for (std::size_t i = 0; i < m; ++i) {
    bias_grad[i] += upstream[i];
    for (std::size_t j = 0; j < n; ++j) weight_grad[i * n + j] += upstream[i] * input[j];
  }
}

Tensor upsample_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  if (input.rank() != 3) throw ShapeError("upsample_bilinear: input must be [C,H,W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h == 0 || w == 0 || out_h == 0 || out_w == 0) throw ShapeError("upsample_bilinear: empty extent");

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      if (src < 0.0) src = 0.0;
      auto lo = static_cast<std::size_t>(src);
      if (lo > in - 1) lo = in - 1;
      const std::size_t hi = std::min(lo + 1, in - 1);
      t[o] = {lo, hi, src - static_cast<double>(lo)};
    }
    return t;
  };
  const auto ty = taps(h, out_h);
  const auto tx = taps(w, out_w);

  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        const double top = input.at(ch, ty[y].lo, tx[x].lo) * (1.0 - tx[x].frac) +
                           input.at(ch, ty[y].lo, tx[x].hi) * tx[x].frac;
        const double bottom = input.at(ch, ty[y].hi, tx[x].lo) * (1.0 - tx[x].frac) +
                              input.at(ch, ty[y].hi, tx[x].hi) * tx[x].frac;
        out.at(ch, y, x) = top * (1.0 - ty[y].frac) + bottom * ty[y].frac;
      }
    }
  }
  return out;
}

}  // namespace ipr
