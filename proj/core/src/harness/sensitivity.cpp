#include "ipr/harness/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ipr/error.hpp"

namespace ipr {

const char* to_string(ThresholdRule rule) { return rule == ThresholdRule::AtMost ? "at_most" : "strictly_below"; }

double layer_sensitivity(double ssim) {
  if (!(ssim >= 0.0 && ssim <= 1.0)) throw ValidationError("layer_sensitivity: SSIM must lie in [0, 1]");
  return 1.0 - ssim;
}

bool is_sensitive_to_layer(double ssim, ThresholdRule rule) {
  return rule == ThresholdRule::AtMost ? ssim <= kSsimThreshold : ssim < kSsimThreshold;
}

SensitivityRecord make_record(std::string image_id, std::string layer_id, ExplainerId explainer, double ssim_raw,
                              ThresholdRule rule) {
  if (!std::isfinite(ssim_raw)) throw NumericError("non-finite SSIM for image '" + image_id + "'");
  SensitivityRecord r;
  r.image_id = std::move(image_id);
  r.layer_id = std::move(layer_id);
  r.explainer = explainer;
  r.ssim_raw = ssim_raw;
  r.ssim = std::clamp(ssim_raw, 0.0, 1.0);
  r.layer_sensitivity = layer_sensitivity(r.ssim);
  r.sensitive_to_layer = is_sensitive_to_layer(r.ssim, rule);
  return r;
}

ImageSensitivity image_sensitivity(std::vector<SensitivityRecord> records) {
  if (records.empty()) throw ValidationError("image_sensitivity: no layer records");
  std::set<std::string> layers;
  std::vector<double> scores;
  scores.reserve(records.size());
  bool all_sensitive = true;
  for (const SensitivityRecord& r : records) {
    if (r.image_id != records.front().image_id || r.explainer != records.front().explainer) {
      throw ValidationError("image_sensitivity: records mix images or explainers");
    }
    if (!layers.insert(r.layer_id).second) {
      throw ValidationError("image_sensitivity: layer '" + r.layer_id + "' appears twice");
    }
    scores.push_back(r.layer_sensitivity);
    all_sensitive = all_sensitive && r.sensitive_to_layer;
  }
  ImageSensitivity s;
  s.image_id = records.front().image_id;
  s.explainer = records.front().explainer;
  s.s_i = running_mean(scores);
  s.sensitive_to_image = all_sensitive;
  s.per_layer = std::move(records);
  return s;
}

DatasetSensitivity dataset_sensitivity(const std::vector<ImageSensitivity>& per_image,
                                       const std::string& architecture_id, const BootstrapSpec& bootstrap) {
  if (per_image.empty()) throw ValidationError("dataset_sensitivity: no per-image scores");
  std::vector<double> scores;
  scores.reserve(per_image.size());
  for (const ImageSensitivity& s : per_image) {
    if (s.explainer != per_image.front().explainer) {
      throw ValidationError("dataset_sensitivity: per-image scores mix explainers");
    }
    scores.push_back(s.s_i);
  }
  DatasetSensitivity d;
  d.explainer = per_image.front().explainer;
  d.architecture_id = architecture_id;
  d.s_I = running_mean(scores);
  d.sensitive_to_dataset = d.s_I >= kSensitivityThreshold;
  d.ci = bootstrap_ci(scores, bootstrap.resamples, bootstrap.level, bootstrap.seed);
  d.num_images = per_image.size();
  d.num_layers = per_image.front().per_layer.size();
  return d;
}

}  // namespace ipr
