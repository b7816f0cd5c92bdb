#include "ipr/explain/explainers.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ipr/error.hpp"

namespace ipr {

namespace {

constexpr std::array<std::pair<ExplainerId, std::string_view>, 8> kExplainerNames{{
    {ExplainerId::Gradients, "Gradients"},
    {ExplainerId::InputXGradient, "InputXGradient"},
    {ExplainerId::GuidedBP, "GuidedBP"},
    {ExplainerId::GradCAM, "GradCAM"},
    {ExplainerId::GuidedGradCAM, "GuidedGradCAM"},
    {ExplainerId::DeepLIFT, "DeepLIFT"},
    {ExplainerId::IntegratedGradients, "IntegratedGradients"},
    {ExplainerId::LIME, "LIME"},
}};

SaliencyMap make_map(Tensor raw, ExplainerId id, const ExplainTarget& target) {
  require_finite(raw, to_string(id));
  SaliencyMap map;
  map.normalized = normalize_saliency(raw);
  map.raw = std::move(raw);
  map.explainer = id;
  map.image_id = target.image_id;
  map.class_index = target.class_index;
  map.model_tag = target.model_tag;
  return map;
}

void require_image_shape(const Tensor& image, const Tensor& baseline) {
  if (image.shape() != baseline.shape()) {
    throw ShapeError("baseline shape " + shape_to_string(baseline.shape()) + " differs from image " +
                     shape_to_string(image.shape()));
  }
}

}  // namespace

const char* to_string(ExplainerId id) {
  for (const auto& [k, name] : kExplainerNames) {
    if (k == id) return name.data();
  }
  return "?";
}

std::optional<ExplainerId> parse_explainer(std::string_view name) {
  for (const auto& [k, n] : kExplainerNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const std::vector<ExplainerId>& default_explainers() {
  static const std::vector<ExplainerId> ids{
      ExplainerId::Gradients,     ExplainerId::InputXGradient, ExplainerId::GuidedBP,
      ExplainerId::GuidedGradCAM, ExplainerId::DeepLIFT,       ExplainerId::IntegratedGradients,
      ExplainerId::LIME,
  };
  return ids;
}

const char* to_string(BaselineKind) { return "zero"; }

std::optional<BaselineKind> parse_baseline(std::string_view name) {
  if (name == "zero") return BaselineKind::ZeroImage;
  return std::nullopt;
}

Tensor make_baseline(BaselineKind, const Shape& shape) { return Tensor(shape, 0.0); }

void validate(const ExplainerConfig& c) {
  if (c.ig_steps < 1) throw ValidationError("explainer config: ig_steps must be >= 1");
  if (c.lime_segments < 1) throw ValidationError("explainer config: lime_segments must be >= 1");
  if (c.lime_samples < c.lime_segments) {
    throw ValidationError("explainer config: lime_samples must be >= lime_segments");
  }
  if (!(c.lime_kernel_width > 0.0) || !std::isfinite(c.lime_kernel_width)) {
    throw ValidationError("explainer config: lime_kernel_width must be positive");
  }
  if (!(c.lime_l1_strength > 0.0)) throw ValidationError("explainer config: lime_l1_strength must be positive");
}

Tensor normalize_saliency(const Tensor& raw) {
  if (raw.rank() != 3) throw ShapeError("normalize_saliency: expected [C,H,W], got " + shape_to_string(raw.shape()));
  require_finite(raw, "normalize_saliency input");
  const std::size_t c = raw.dim(0), h = raw.dim(1), w = raw.dim(2);
  Tensor out({1, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < h * w; ++i) out[i] += std::abs(raw[ch * h * w + i]);
  }
  const double peak = out.empty() ? 0.0 : *std::max_element(out.values().begin(), out.values().end());
  if (peak > 0.0) {
    for (double& v : out.values()) v /= peak;
  }
  return out;
}

SaliencyMap explain_gradients(const Model& model, const Tensor& image, const ExplainTarget& target) {
  return make_map(grad_wrt_input(model, image, target.class_index), ExplainerId::Gradients, target);
}

SaliencyMap explain_input_x_gradient(const Model& model, const Tensor& image, const ExplainTarget& target) {
  return make_map(hadamard(grad_wrt_input(model, image, target.class_index), image), ExplainerId::InputXGradient,
                  target);
}

SaliencyMap explain_guided_bp(const Model& model, const Tensor& image, const ExplainTarget& target) {
  return make_map(grad_wrt_input(model, image, target.class_index, ReluBackwardMode::Guided), ExplainerId::GuidedBP,
                  target);
}

Tensor explain_gradcam(const Model& model, const Tensor& image, std::size_t class_index) {
  if (class_index >= model.num_classes) throw ValidationError("gradcam: class index out of range");
  std::optional<std::size_t> last_conv;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (model.layers[k].kind == LayerKind::Conv) last_conv = k;
  }
  if (!last_conv) throw ValidationError("gradcam: model '" + model.architecture_id + "' has no convolution layer");

  const ForwardTrace trace = trace_forward(model, image);
  Tensor seed({model.num_classes});
  seed[class_index] = 1.0;
  const BackwardResult back = backpropagate(model, trace, seed);
  const Tensor& act = trace.activations[*last_conv + 1];
  const Tensor& grad = back.activation_grads[*last_conv + 1];

  const std::size_t c = act.dim(0), h = act.dim(1), w = act.dim(2);
  Tensor cam({1, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double weight = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) weight += grad[ch * h * w + i];
    weight /= static_cast<double>(h * w);
    for (std::size_t i = 0; i < h * w; ++i) cam[i] += weight * act[ch * h * w + i];
  }
  for (double& v : cam.values()) v = v > 0.0 ? v : 0.0;
  return upsample_bilinear(cam, image.dim(1), image.dim(2));
}

SaliencyMap explain_guided_gradcam(const Model& model, const Tensor& image, const ExplainTarget& target) {
  Tensor raw = grad_wrt_input(model, image, target.class_index, ReluBackwardMode::Guided);
  const Tensor cam = explain_gradcam(model, image, target.class_index);
  const std::size_t plane = cam.size();
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] *= cam[i % plane];
  return make_map(std::move(raw), ExplainerId::GuidedGradCAM, target);
}

SaliencyMap explain_deeplift(const Model& model, const Tensor& image, const Tensor& baseline,
                             const ExplainTarget& target) {
  require_image_shape(image, baseline);
  const Tensor multipliers =
      grad_wrt_input(model, image, target.class_index, ReluBackwardMode::DeepLiftRescale, &baseline);
  return make_map(hadamard(subtract(image, baseline), multipliers), ExplainerId::DeepLIFT, target);
}

SaliencyMap explain_integrated_gradients(const Model& model, const Tensor& image, const Tensor& baseline,
                                         std::size_t steps, const ExplainTarget& target) {
  require_image_shape(image, baseline);
  if (steps < 1) throw ValidationError("integrated gradients: steps must be >= 1");
  const Tensor delta = subtract(image, baseline);
  Tensor mean_grad(image.shape());
  Tensor point(image.shape());
  for (std::size_t t = 0; t < steps; ++t) {
    const double alpha = (static_cast<double>(t) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < point.size(); ++i) point[i] = baseline[i] + alpha * delta[i];
    const Tensor g = grad_wrt_input(model, point, target.class_index);
    // Running mean: exact when the integrand is constant along the path.
    const double inv = 1.0 / static_cast<double>(t + 1);
    for (std::size_t i = 0; i < g.size(); ++i) mean_grad[i] += (g[i] - mean_grad[i]) * inv;
  }
  return make_map(hadamard(delta, mean_grad), ExplainerId::IntegratedGradients, target);
}

SaliencyMap explain(ExplainerId id, const Model& model, const Tensor& image, const ExplainTarget& target,
                    const ExplainerConfig& config) {
  switch (id) {
    case ExplainerId::Gradients: return explain_gradients(model, image, target);
    case ExplainerId::InputXGradient: return explain_input_x_gradient(model, image, target);
    case ExplainerId::GuidedBP: return explain_guided_bp(model, image, target);
    case ExplainerId::GradCAM: return make_map(explain_gradcam(model, image, target.class_index), id, target);
    case ExplainerId::GuidedGradCAM: return explain_guided_gradcam(model, image, target);
    case ExplainerId::DeepLIFT:
      return explain_deeplift(model, image, make_baseline(config.baseline, image.shape()), target);
    case ExplainerId::IntegratedGradients:
      return explain_integrated_gradients(model, image, make_baseline(config.baseline, image.shape()),
                                          config.ig_steps, target);
    case ExplainerId::LIME: return explain_lime(model, image, target, config);
  }
  throw ValidationError("unknown explainer");
}

}  // namespace ipr
