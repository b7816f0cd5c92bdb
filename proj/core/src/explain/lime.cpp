#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

#include "ipr/error.hpp"
#include "ipr/explain/explainers.hpp"
#include "ipr/rng.hpp"

namespace ipr {

std::vector<std::size_t> grid_segments(std::size_t height, std::size_t width, std::size_t segments) {
  const auto g = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(segments))));
  if (g == 0 || g * g != segments) {
    throw ValidationError("lime_segments must be a perfect square, got " + std::to_string(segments));
  }
  if (g > height || g > width) {
    throw ValidationError("lime_segments " + std::to_string(segments) + " exceeds the image resolution");
  }
  std::vector<std::size_t> seg(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) seg[y * width + x] = (y * g / height) * g + (x * g / width);
  }
  return seg;
}

namespace {

// Identical weights give identical sample streams, so an unchanged model
// reproduces its map exactly.
std::uint64_t parameter_fingerprint(const Model& model) {
  std::uint64_t h = fnv1a(model.architecture_id);
  for (const auto& [id, p] : model.parameters) {
    h = fnv1a(id, h);
    for (const Tensor* t : {&p.weight, &p.bias}) {
      const auto bytes = std::as_bytes(t->data());
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), h);
    }
  }
  return h;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

LassoFit weighted_lasso(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
                        const std::vector<double>& weights, double l1, double tolerance, std::size_t max_sweeps) {
  const std::size_t n = rows.size();
  if (n == 0 || targets.size() != n || weights.size() != n) {
    throw ValidationError("weighted_lasso: rows, targets and weights must be non-empty and equally long");
  }
  if (!(l1 >= 0.0)) throw ValidationError("weighted_lasso: l1 strength must be non-negative");
  const std::size_t p = rows.front().size();

  double total_weight = 0.0;
  for (double w : weights) total_weight += w;
  if (!(total_weight > 0.0)) throw ValidationError("weighted_lasso: sample weights sum to zero");

  // Weighted centering removes the unpenalized intercept from the problem.
  std::vector<double> x_mean(p, 0.0);
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != p) throw ValidationError("weighted_lasso: ragged design matrix");
    for (std::size_t j = 0; j < p; ++j) x_mean[j] += weights[i] * rows[i][j];
    y_mean += weights[i] * targets[i];
  }
  for (double& m : x_mean) m /= total_weight;
  y_mean /= total_weight;

  std::vector<std::vector<double>> xc(n, std::vector<double>(p));
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) xc[i][j] = rows[i][j] - x_mean[j];
    residual[i] = targets[i] - y_mean;
  }
  std::vector<double> col_norm(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) col_norm[j] += weights[i] * xc[i][j] * xc[i][j];
    col_norm[j] /= total_weight;
  }

  LassoFit fit;
  fit.coefficients.assign(p, 0.0);
  for (fit.sweeps = 0; fit.sweeps < max_sweeps;) {
    ++fit.sweeps;
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (col_norm[j] <= 0.0) continue;  // constant column: coefficient stays 0
      const double old = fit.coefficients[j];
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += weights[i] * xc[i][j] * (residual[i] + xc[i][j] * old);
      rho /= total_weight;
      const double updated = soft_threshold(rho, l1) / col_norm[j];
      const double change = updated - old;
      if (change != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= xc[i][j] * change;
        fit.coefficients[j] = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }
    if (max_change <= tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = y_mean;
  for (std::size_t j = 0; j < p; ++j) fit.intercept -= fit.coefficients[j] * x_mean[j];
  return fit;
}

SaliencyMap explain_lime(const Model& model, const Tensor& image, const ExplainTarget& target,
                         const ExplainerConfig& config) {
  validate(config);
  if (image.rank() != 3) throw ShapeError("lime: image must be [C,H,W]");
  if (target.class_index >= model.num_classes) throw ValidationError("lime: class index out of range");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t patches = config.lime_segments;
  const std::vector<std::size_t> segment = grid_segments(h, w, patches);

  // The sample stream depends only on (seed, image, model weights), never on scheduling.
  Rng rng(derive_seed(derive_seed(config.seed, "lime"), target.image_id) ^ mix64(parameter_fingerprint(model)));

  const Tensor baseline = make_baseline(config.baseline, image.shape());
  std::vector<std::vector<double>> masks(config.lime_samples, std::vector<double>(patches));
  std::vector<double> scores(config.lime_samples);
  std::vector<double> weights(config.lime_samples);
  const double kw2 = config.lime_kernel_width * config.lime_kernel_width;
  Tensor perturbed(image.shape());
  for (std::size_t s = 0; s < config.lime_samples; ++s) {
    std::size_t kept = 0;
    for (double& m : masks[s]) {
      m = rng.bernoulli(0.5) ? 1.0 : 0.0;
      kept += m > 0.0;
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < h * w; ++i) {
        const std::size_t idx = ch * h * w + i;
        perturbed[idx] = masks[s][segment[i]] > 0.0 ? image[idx] : baseline[idx];
      }
    }
    scores[s] = forward(model, perturbed)[target.class_index];
    // cos(mask, ones) = sqrt(kept / patches); an empty mask is orthogonal.
    const double cosine = kept == 0 ? 0.0 : std::sqrt(static_cast<double>(kept) / static_cast<double>(patches));
    const double distance = 1.0 - cosine;
    weights[s] = std::exp(-(distance * distance) / kw2);
  }

  bool all_identical = true;
  for (std::size_t s = 1; s < masks.size() && all_identical; ++s) all_identical = masks[s] == masks[0];
  if (all_identical) {
    throw ValidationError("lime: every perturbation mask is identical; increase lime_samples");
  }

  const LassoFit fit = weighted_lasso(masks, scores, weights, config.lime_l1_strength);
  Tensor raw(image.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < h * w; ++i) raw[ch * h * w + i] = fit.coefficients[segment[i]];
  }
  require_finite(raw, "LIME");
  SaliencyMap map;
  map.normalized = normalize_saliency(raw);
  map.raw = std::move(raw);
  map.explainer = ExplainerId::LIME;
  map.image_id = target.image_id;
  map.class_index = target.class_index;
  map.model_tag = target.model_tag;
  return map;
}

}  // namespace ipr
