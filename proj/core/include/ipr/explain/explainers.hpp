#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipr/nn/model.hpp"

namespace ipr {

enum class ExplainerId {
  Gradients,
  InputXGradient,
  GuidedBP,
  GradCAM,  // building block of GuidedGradCAM; not part of default runs
  GuidedGradCAM,
  DeepLIFT,
  IntegratedGradients,
  LIME,
};

const char* to_string(ExplainerId id);
std::optional<ExplainerId> parse_explainer(std::string_view name);

/// The seven methods evaluated by default (all but plain GradCAM).
const std::vector<ExplainerId>& default_explainers();

enum class BaselineKind { ZeroImage };

const char* to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline(std::string_view name);
Tensor make_baseline(BaselineKind kind, const Shape& shape);

struct ExplainerConfig {
  std::size_t ig_steps = 64;
  BaselineKind baseline = BaselineKind::ZeroImage;
  std::size_t lime_segments = 16;
  std::size_t lime_samples = 200;
  double lime_kernel_width = 0.25;
  double lime_l1_strength = 0.01;
  std::uint64_t seed = 0;
};

void validate(const ExplainerConfig& config);

/// What is being explained. `image_id` and `model_tag` are carried into the
/// map; LIME keys its sampling stream on `image_id` and the model weights.
struct ExplainTarget {
  std::size_t class_index = 0;
  std::string image_id;
  std::string model_tag = "original";
};

struct SaliencyMap {
  Tensor raw;         // same shape as the image
  Tensor normalized;  // [1,H,W], values in [0,1]
  ExplainerId explainer = ExplainerId::Gradients;
  std::string image_id;
  std::size_t class_index = 0;
  std::string model_tag;
};

/// |raw| summed over channels and divided by its maximum; an all-zero input
/// maps to all zeros.
Tensor normalize_saliency(const Tensor& raw);

SaliencyMap explain_gradients(const Model& model, const Tensor& image, const ExplainTarget& target);
SaliencyMap explain_input_x_gradient(const Model& model, const Tensor& image, const ExplainTarget& target);
SaliencyMap explain_guided_bp(const Model& model, const Tensor& image, const ExplainTarget& target);

/// GradCAM over the last convolution: channel weights are the spatial mean of
/// the class-logit gradient at that layer's output, the map is
/// ReLU(sum_k weight_k * activation_k) resized bilinearly to [1,H,W].
Tensor explain_gradcam(const Model& model, const Tensor& image, std::size_t class_index);

/// GuidedBP attribution times the GradCAM map, broadcast over channels.
SaliencyMap explain_guided_gradcam(const Model& model, const Tensor& image, const ExplainTarget& target);

/// (image - baseline) times the rescale-rule multipliers.
SaliencyMap explain_deeplift(const Model& model, const Tensor& image, const Tensor& baseline,
                             const ExplainTarget& target);

/// (image - baseline) times the midpoint-rule average gradient along the
/// straight path, sampled at alpha = (t - 0.5) / steps.
SaliencyMap explain_integrated_gradients(const Model& model, const Tensor& image, const Tensor& baseline,
                                         std::size_t steps, const ExplainTarget& target);

SaliencyMap explain_lime(const Model& model, const Tensor& image, const ExplainTarget& target,
                         const ExplainerConfig& config);

/// Dispatches on `id`. GradCAM yields its upsampled map as `raw`.
SaliencyMap explain(ExplainerId id, const Model& model, const Tensor& image, const ExplainTarget& target,
                    const ExplainerConfig& config);

// LIME internals, exposed for testing.

/// Patch index of every pixel for a g x g grid, g = sqrt(segments).
std::vector<std::size_t> grid_segments(std::size_t height, std::size_t width, std::size_t segments);

struct LassoFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Minimizes (1 / 2W) sum_i w_i (y_i - b - x_i . beta)^2 + l1 * |beta|_1 with
/// W = sum_i w_i and an unpenalized intercept b, by cyclic coordinate descent.
/// Stops once no coefficient moves by more than `tolerance` in a sweep.
LassoFit weighted_lasso(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
                        const std::vector<double>& weights, double l1, double tolerance = 1e-8,
                        std::size_t max_sweeps = 10000);

}  // namespace ipr
