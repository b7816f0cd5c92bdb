#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipr/nn/ops.hpp"
#include "ipr/nn/tensor.hpp"

namespace ipr {

enum class LayerKind { Conv, Dense, Relu, MaxPool, Flatten, ResidualAdd };

/// Conv/Dense weights are drawn uniformly with fan-in scaling and biases start
/// at zero; parameterless layers carry `None`.
enum class InitScheme { None, UniformFanIn };

const char* to_string(LayerKind kind);
const char* to_string(InitScheme scheme);

struct LayerDescriptor {
  std::string id;
  LayerKind kind = LayerKind::Relu;
  /// {weight shape, bias shape} for Conv/Dense, empty otherwise.
  std::vector<Shape> param_shapes;
  InitScheme init = InitScheme::None;
  std::size_t stride = 1;   // Conv, MaxPool
  std::size_t padding = 0;  // Conv
  std::size_t window = 0;   // MaxPool
  /// ResidualAdd: id of the earlier layer whose output is added to the running activation.
  std::string skip_from;

  bool has_parameters() const noexcept { return kind == LayerKind::Conv || kind == LayerKind::Dense; }
  bool operator==(const LayerDescriptor&) const = default;
};

struct LayerParams {
  Tensor weight;
  Tensor bias;
  bool operator==(const LayerParams&) const = default;
};

/// A feed-forward network over a fixed layer vocabulary. Values are treated as
/// immutable once built; every transformation returns a new Model.
struct Model {
  std::string architecture_id;
  std::vector<LayerDescriptor> layers;
  std::map<std::string, LayerParams> parameters;
  Shape input_shape;
  std::size_t num_classes = 0;
  std::uint64_t training_seed = 0;

  std::optional<std::size_t> layer_index(const std::string& id) const;
  bool operator==(const Model&) const = default;
};

/// Checks descriptor/parameter consistency and that a forward pass is
/// well-shaped; throws ShapeError or ValidationError otherwise.
void validate_model(const Model& model);

/// Output shape of every layer for the model's input shape.
std::vector<Shape> infer_shapes(const Model& model);

/// Fills the named layer's weight and bias from its init scheme.
void initialize_layer(Model& model, const std::string& layer_id, std::uint64_t seed);

/// Per-layer activations of one forward pass. `activations[0]` is the input,
/// `activations[k + 1]` the output of layer k.
struct ForwardTrace {
  std::vector<Tensor> activations;
  /// Argmax tables for MaxPool layers (empty for other kinds).
  std::vector<std::vector<std::size_t>> pool_argmax;

  const Tensor& logits() const { return activations.back(); }
};

ForwardTrace trace_forward(const Model& model, const Tensor& image);

/// Pre-softmax class scores.
Tensor forward(const Model& model, const Tensor& image);

struct BackwardOptions {
  ReluBackwardMode mode = ReluBackwardMode::Standard;
  /// Forward trace of the reference input; required for DeepLiftRescale.
  const ForwardTrace* reference = nullptr;
  bool parameter_gradients = false;
};

struct BackwardResult {
  /// Gradient with respect to each entry of ForwardTrace::activations.
  std::vector<Tensor> activation_grads;
  /// Populated only when BackwardOptions::parameter_gradients is set.
  std::map<std::string, LayerParams> parameter_grads;

  const Tensor& input_grad() const { return activation_grads.front(); }
};

/// Propagates `output_grad` (same shape as the logits) back through the trace.
BackwardResult backpropagate(const Model& model, const ForwardTrace& trace, const Tensor& output_grad,
                             const BackwardOptions& options = {});

/// d logit[class_index] / d image under the requested ReLU backward rule.
/// `reference` is the DeepLIFT reference image and is required iff mode is
/// DeepLiftRescale.
Tensor grad_wrt_input(const Model& model, const Tensor& image, std::size_t class_index,
                      ReluBackwardMode mode = ReluBackwardMode::Standard, const Tensor* reference = nullptr);

/// Central-difference estimate of d logit[class_index] / d image.
Tensor fd_gradient(const Model& model, const Tensor& image, std::size_t class_index, double step = 1e-3);

/// Builds custom architectures layer by layer, inferring parameter shapes
/// from the running activation shape.
class ModelBuilder {
 public:
  ModelBuilder(std::string architecture_id, Shape input_shape, std::size_t num_classes);

  ModelBuilder& conv(std::string id, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
                     std::size_t padding = 0);
  ModelBuilder& relu(std::string id);
  ModelBuilder& max_pool(std::string id, std::size_t window, std::size_t stride);
  ModelBuilder& flatten(std::string id);
  ModelBuilder& dense(std::string id, std::size_t out_features);
  ModelBuilder& residual_add(std::string id, std::string skip_from);

  /// Initializes every parameter layer from `seed` and validates the result.
  Model build(std::uint64_t seed) const;

 private:
  void push(LayerDescriptor layer);

  Model model_;
  Shape current_;
};

}  // namespace ipr
