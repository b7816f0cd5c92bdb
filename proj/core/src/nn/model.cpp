#include "ipr/nn/model.hpp"

#include <cmath>
#include <set>

#include "ipr/error.hpp"
#include "ipr/rng.hpp"

namespace ipr {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::Dense: return "Dense";
    case LayerKind::Relu: return "Relu";
    case LayerKind::MaxPool: return "MaxPool";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::ResidualAdd: return "ResidualAdd";
  }
  return "?";
}

const char* to_string(InitScheme scheme) {
  return scheme == InitScheme::UniformFanIn ? "UniformFanIn" : "None";
}

std::optional<std::size_t> Model::layer_index(const std::string& id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return i;
  }
  return std::nullopt;
}

namespace {

Shape conv_output_shape(const Shape& in, const LayerDescriptor& layer) {
  const Shape& k = layer.param_shapes.at(0);
  if (in.size() != 3) throw ShapeError("layer '" + layer.id + "': conv input must be [C,H,W], got " + shape_to_string(in));
  if (k.size() != 4 || k[1] != in[0]) {
    throw ShapeError("layer '" + layer.id + "': kernel " + shape_to_string(k) + " does not fit input " + shape_to_string(in));
  }
  if (k[2] > in[1] + 2 * layer.padding || k[3] > in[2] + 2 * layer.padding || layer.stride == 0) {
    throw ShapeError("layer '" + layer.id + "': kernel " + shape_to_string(k) + " does not fit input " + shape_to_string(in));
  }
  return {k[0], (in[1] + 2 * layer.padding - k[2]) / layer.stride + 1,
          (in[2] + 2 * layer.padding - k[3]) / layer.stride + 1};
}

}  // namespace

std::vector<Shape> infer_shapes(const Model& model) {
  std::vector<Shape> shapes;
  shapes.reserve(model.layers.size());
  Shape current = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerDescriptor& layer = model.layers[i];
    switch (layer.kind) {
      case LayerKind::Conv:
        current = conv_output_shape(current, layer);
        break;
      case LayerKind::Dense: {
        const Shape& w = layer.param_shapes.at(0);
        if (current.size() != 1 || w.size() != 2 || w[1] != current[0]) {
          throw ShapeError("layer '" + layer.id + "': weight " + shape_to_string(w) + " does not fit input " +
                           shape_to_string(current));
        }
        current = {w[0]};
        break;
      }
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool:
        if (current.size() != 3 || layer.window == 0 || layer.stride == 0 || layer.window > current[1] ||
            layer.window > current[2]) {
          throw ShapeError("layer '" + layer.id + "': pool window " + std::to_string(layer.window) +
                           " does not fit input " + shape_to_string(current));
        }
        current = {current[0], (current[1] - layer.window) / layer.stride + 1,
                   (current[2] - layer.window) / layer.stride + 1};
        break;
      case LayerKind::Flatten:
        current = {shape_numel(current)};
        break;
      case LayerKind::ResidualAdd: {
        const auto src = model.layer_index(layer.skip_from);
        if (!src || *src >= i) {
          throw ValidationError("layer '" + layer.id + "': skip source '" + layer.skip_from +
                                "' must name an earlier layer");
        }
        if (shapes[*src] != current) {
          throw ShapeError("layer '" + layer.id + "': skip source shape " + shape_to_string(shapes[*src]) +
                           " differs from " + shape_to_string(current));
        }
        break;
      }
    }
    shapes.push_back(current);
  }
  return shapes;
}

void validate_model(const Model& model) {
  std::set<std::string> ids;
  for (const LayerDescriptor& layer : model.layers) {
    if (layer.id.empty()) throw ValidationError("layer with empty id");
    if (!ids.insert(layer.id).second) throw ValidationError("duplicate layer id '" + layer.id + "'");
    if (layer.has_parameters() != !layer.param_shapes.empty()) {
      throw ValidationError("layer '" + layer.id + "': parameter shapes must be present iff the layer is Conv/Dense");
    }
    if (layer.has_parameters()) {
      if (layer.param_shapes.size() != 2) throw ValidationError("layer '" + layer.id + "': expected weight and bias shapes");
      const auto it = model.parameters.find(layer.id);
      if (it == model.parameters.end()) throw ValidationError("layer '" + layer.id + "' has no parameters");
      if (it->second.weight.shape() != layer.param_shapes[0] || it->second.bias.shape() != layer.param_shapes[1]) {
        throw ShapeError("layer '" + layer.id + "': parameter shapes differ from descriptor");
      }
      if (layer.param_shapes[1] != Shape{layer.param_shapes[0][0]}) {
        throw ShapeError("layer '" + layer.id + "': bias shape must match output features");
      }
    }
  }
  for (const auto& [id, params] : model.parameters) {
    const auto idx = model.layer_index(id);
    if (!idx || !model.layers[*idx].has_parameters()) {
      throw ValidationError("parameters supplied for unknown or parameterless layer '" + id + "'");
    }
  }
  const auto shapes = infer_shapes(model);
  if (shapes.empty() || shapes.back() != Shape{model.num_classes}) {
    throw ShapeError("model output shape " + (shapes.empty() ? std::string("[]") : shape_to_string(shapes.back())) +
                     " does not match num_classes " + std::to_string(model.num_classes));
  }
}

void initialize_layer(Model& model, const std::string& layer_id, std::uint64_t seed) {
  const auto idx = model.layer_index(layer_id);
  if (!idx) throw ValidationError("unknown layer '" + layer_id + "'");
  const LayerDescriptor& layer = model.layers[*idx];
  if (!layer.has_parameters() || layer.init != InitScheme::UniformFanIn) {
    throw ValidationError("layer '" + layer_id + "' has no initializable parameters");
  }
  const Shape& wshape = layer.param_shapes[0];
  const std::size_t fan_in = shape_numel(wshape) / wshape[0];
  // He-uniform bound keeps activation scale roughly constant through ReLU stacks.
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Rng rng(seed);
  LayerParams params{Tensor(wshape), Tensor(layer.param_shapes[1], 0.0)};
  for (double& v : params.weight.values()) v = rng.uniform(-bound, bound);
  model.parameters[layer_id] = std::move(params);
}

ForwardTrace trace_forward(const Model& model, const Tensor& image) {
  if (image.shape() != model.input_shape) {
    throw ShapeError("image shape " + shape_to_string(image.shape()) + " does not match model input " +
                     shape_to_string(model.input_shape));
  }
  ForwardTrace trace;
  trace.activations.reserve(model.layers.size() + 1);
  trace.pool_argmax.resize(model.layers.size());
  trace.activations.push_back(image);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerDescriptor& layer = model.layers[i];
    const Tensor& in = trace.activations.back();
    Tensor out;
    switch (layer.kind) {
      case LayerKind::Conv: {
        const LayerParams& p = model.parameters.at(layer.id);
        out = conv2d(in, p.weight, p.bias, layer.stride, layer.padding);
        break;
      }
      case LayerKind::Dense: {
        const LayerParams& p = model.parameters.at(layer.id);
        out = dense(in, p.weight, p.bias);
        break;
      }
      case LayerKind::Relu:
        out = relu_forward(in);
        break;
      case LayerKind::MaxPool: {
        PoolResult pooled = max_pool2d(in, layer.window, layer.stride);
        out = std::move(pooled.output);
        trace.pool_argmax[i] = std::move(pooled.argmax);
        break;
      }
      case LayerKind::Flatten:
        out = in.reshaped({in.size()});
        break;
      case LayerKind::ResidualAdd: {
        const auto src = model.layer_index(layer.skip_from);
        if (!src || *src >= i) throw ValidationError("layer '" + layer.id + "': invalid skip source");
        out = add(in, trace.activations[*src + 1]);
        break;
      }
    }
    trace.activations.push_back(std::move(out));
  }
  require_finite(trace.logits(), "forward pass");
  return trace;
}

Tensor forward(const Model& model, const Tensor& image) { return trace_forward(model, image).logits(); }

BackwardResult backpropagate(const Model& model, const ForwardTrace& trace, const Tensor& output_grad,
                             const BackwardOptions& options) {
  const std::size_t n = model.layers.size();
  if (trace.activations.size() != n + 1) throw ValidationError("backpropagate: trace does not belong to this model");
  if (output_grad.shape() != trace.logits().shape()) {
    throw ShapeError("backpropagate: output gradient " + shape_to_string(output_grad.shape()) + " vs logits " +
                     shape_to_string(trace.logits().shape()));
  }
  const bool rescale = options.mode == ReluBackwardMode::DeepLiftRescale;
  if (rescale && options.reference == nullptr) {
    throw ValidationError("backpropagate: DeepLiftRescale requires a reference trace");
  }
  if (rescale && options.reference->activations.size() != n + 1) {
    throw ValidationError("backpropagate: reference trace does not belong to this model");
  }

  BackwardResult result;
  result.activation_grads.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) result.activation_grads[k] = Tensor(trace.activations[k].shape());
  result.activation_grads[n] = output_grad;

  // Residual connections feed gradient into earlier activations; those
  // contributions are accumulated before the earlier layer is visited.
  for (std::size_t k = n; k-- > 0;) {
    const LayerDescriptor& layer = model.layers[k];
    const Tensor& upstream = result.activation_grads[k + 1];
    const Tensor& in = trace.activations[k];
    Tensor local;
    switch (layer.kind) {
      case LayerKind::Conv: {
        const LayerParams& p = model.parameters.at(layer.id);
        local = conv2d_backward_input(upstream, p.weight, in.shape(), layer.stride, layer.padding);
        if (options.parameter_gradients) {
          LayerParams& g = result.parameter_grads[layer.id];
          g.weight = Tensor(p.weight.shape());
          g.bias = Tensor(p.bias.shape());
          conv2d_backward_params(upstream, in, layer.stride, layer.padding, g.weight, g.bias);
        }
        break;
      }
      case LayerKind::Dense: {
        const LayerParams& p = model.parameters.at(layer.id);
        local = dense_backward_input(upstream, p.weight);
        if (options.parameter_gradients) {
          LayerParams& g = result.parameter_grads[layer.id];
          g.weight = Tensor(p.weight.shape());
          g.bias = Tensor(p.bias.shape());
          dense_backward_params(upstream, in, g.weight, g.bias);
        }
        break;
      }
      case LayerKind::Relu:
        local = relu_backward(upstream, in, options.mode, rescale ? &options.reference->activations[k] : nullptr);
        break;
      case LayerKind::MaxPool:
        local = max_pool2d_backward(upstream, trace.pool_argmax[k], in.shape());
        break;
      case LayerKind::Flatten:
        local = upstream.reshaped(in.shape());
        break;
      case LayerKind::ResidualAdd: {
        const std::size_t src = *model.layer_index(layer.skip_from);
        Tensor& skip = result.activation_grads[src + 1];
        for (std::size_t i = 0; i < skip.size(); ++i) skip[i] += upstream[i];
        local = upstream;
        break;
      }
    }
    Tensor& dst = result.activation_grads[k];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += local[i];
  }
  require_finite(result.input_grad(), "backward pass");
  return result;
}

namespace {

Tensor one_hot(std::size_t size, std::size_t index) {
  Tensor t({size});
  t[index] = 1.0;
  return t;
}

void check_class(const Model& model, std::size_t class_index) {
  if (class_index >= model.num_classes) {
    throw ValidationError("class index " + std::to_string(class_index) + " out of range for " +
                          std::to_string(model.num_classes) + " classes");
  }
}

}  // namespace

Tensor grad_wrt_input(const Model& model, const Tensor& image, std::size_t class_index, ReluBackwardMode mode,
                      const Tensor* reference) {
  check_class(model, class_index);
  const bool rescale = mode == ReluBackwardMode::DeepLiftRescale;
  if (rescale != (reference != nullptr)) {
    throw ValidationError("grad_wrt_input: a reference image is required iff mode is DeepLiftRescale");
  }
  const ForwardTrace trace = trace_forward(model, image);
  std::optional<ForwardTrace> ref_trace;
  if (rescale) ref_trace = trace_forward(model, *reference);
  BackwardOptions options;
  options.mode = mode;
  options.reference = ref_trace ? &*ref_trace : nullptr;
  BackwardResult result = backpropagate(model, trace, one_hot(model.num_classes, class_index), options);
  return std::move(result.activation_grads.front());
}

Tensor fd_gradient(const Model& model, const Tensor& image, std::size_t class_index, double step) {
  check_class(model, class_index);
  if (!(step > 0.0)) throw ValidationError("fd_gradient: step must be positive");
  Tensor grad(image.shape());
  Tensor probe = image;
  for (std::size_t k = 0; k < image.size(); ++k) {
    probe[k] = image[k] + step;
    const double up = forward(model, probe)[class_index];
    probe[k] = image[k] - step;
    const double down = forward(model, probe)[class_index];
    probe[k] = image[k];
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

ModelBuilder::ModelBuilder(std::string architecture_id, Shape input_shape, std::size_t num_classes)
    : current_(input_shape) {
  model_.architecture_id = std::move(architecture_id);
  model_.input_shape = std::move(input_shape);
  model_.num_classes = num_classes;
}

void ModelBuilder::push(LayerDescriptor layer) {
  model_.layers.push_back(std::move(layer));
  current_ = infer_shapes(model_).back();
}

ModelBuilder& ModelBuilder::conv(std::string id, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                                 std::size_t padding) {
  if (current_.size() != 3) throw ShapeError("conv '" + id + "' needs a [C,H,W] input, have " + shape_to_string(current_));
  LayerDescriptor layer;
  layer.id = std::move(id);
  layer.kind = LayerKind::Conv;
  layer.param_shapes = {{out_channels, current_[0], kernel, kernel}, {out_channels}};
  layer.init = InitScheme::UniformFanIn;
  layer.stride = stride;
  layer.padding = padding;
  push(std::move(layer));
  return *this;
}

ModelBuilder& ModelBuilder::relu(std::string id) {
  push({.id = std::move(id), .kind = LayerKind::Relu});
  return *this;
}

ModelBuilder& ModelBuilder::max_pool(std::string id, std::size_t window, std::size_t stride) {
  push({.id = std::move(id), .kind = LayerKind::MaxPool, .stride = stride, .window = window});
  return *this;
}

ModelBuilder& ModelBuilder::flatten(std::string id) {
  push({.id = std::move(id), .kind = LayerKind::Flatten});
  return *this;
}

ModelBuilder& ModelBuilder::dense(std::string id, std::size_t out_features) {
  if (current_.size() != 1) throw ShapeError("dense '" + id + "' needs a flat input, have " + shape_to_string(current_));
  LayerDescriptor layer;
  layer.id = std::move(id);
  layer.kind = LayerKind::Dense;
  layer.param_shapes = {{out_features, current_[0]}, {out_features}};
  layer.init = InitScheme::UniformFanIn;
  push(std::move(layer));
  return *this;
}

ModelBuilder& ModelBuilder::residual_add(std::string id, std::string skip_from) {
  push({.id = std::move(id), .kind = LayerKind::ResidualAdd, .skip_from = std::move(skip_from)});
  return *this;
}

Model ModelBuilder::build(std::uint64_t seed) const {
  Model model = model_;
  for (const LayerDescriptor& layer : model.layers) {
    if (layer.has_parameters()) initialize_layer(model, layer.id, derive_seed(seed, layer.id));
  }
  validate_model(model);
  return model;
}

}  // namespace ipr
