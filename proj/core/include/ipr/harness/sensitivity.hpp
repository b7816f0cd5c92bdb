#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipr/explain/explainers.hpp"
#include "ipr/metrics/statistics.hpp"

namespace ipr {

/// SSIM at or below which two saliency maps count as different.
inline constexpr double kSsimThreshold = 0.99;
/// Sensitivity threshold derived from the SSIM threshold (1 - 0.99). Averaging
/// layer scores that all sit at this value reproduces it exactly, so the
/// per-image and per-dataset thresholds are the same constant.
inline constexpr double kSensitivityThreshold = 1.0 - kSsimThreshold;

/// Boundary handling of the per-layer predicate. `AtMost` (ssim <= 0.99) is the
/// default; `StrictlyBelow` (ssim < 0.99) is kept for comparison.
enum class ThresholdRule { AtMost, StrictlyBelow };

const char* to_string(ThresholdRule rule);

struct SensitivityRecord {
  std::string image_id;
  std::string layer_id;
  ExplainerId explainer = ExplainerId::Gradients;
  double ssim_raw = 1.0;  // before clamping to [0, 1]
  double ssim = 1.0;
  double layer_sensitivity = 0.0;  // 1 - ssim
  bool sensitive_to_layer = false;
};

struct ImageSensitivity {
  std::string image_id;
  ExplainerId explainer = ExplainerId::Gradients;
  std::vector<SensitivityRecord> per_layer;
  double s_i = 0.0;  // mean layer sensitivity
  bool sensitive_to_image = false;  // every layer sensitive
};

struct DatasetSensitivity {
  ExplainerId explainer = ExplainerId::Gradients;
  std::string architecture_id;
  double s_I = 0.0;  // mean of s_i
  bool sensitive_to_dataset = false;  // s_I >= kSensitivityThreshold
  Interval ci;
  std::size_t num_images = 0;
  std::size_t num_layers = 0;
};

struct BootstrapSpec {
  std::size_t resamples = 1000;
  double level = 0.90;
  std::uint64_t seed = 0;
};

/// 1 - ssim; `ssim` must lie in [0, 1].
double layer_sensitivity(double ssim);

bool is_sensitive_to_layer(double ssim, ThresholdRule rule = ThresholdRule::AtMost);

/// Builds a record from an unclamped SSIM value.
SensitivityRecord make_record(std::string image_id, std::string layer_id, ExplainerId explainer, double ssim_raw,
                              ThresholdRule rule = ThresholdRule::AtMost);

/// Records must be non-empty, share (image_id, explainer) and name distinct layers.
ImageSensitivity image_sensitivity(std::vector<SensitivityRecord> records);

/// Per-image scores must be non-empty and share the explainer.
DatasetSensitivity dataset_sensitivity(const std::vector<ImageSensitivity>& per_image, const std::string& architecture_id,
                                       const BootstrapSpec& bootstrap);

}  // namespace ipr
