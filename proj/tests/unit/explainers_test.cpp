#include <gtest/gtest.h>

#include <cmath>

#include "ipr/error.hpp"
#include "ipr/explain/explainers.hpp"
#include "ipr/zoo/architectures.hpp"
#include "ipr/zoo/dataset.hpp"
#include "oracles.hpp"

using namespace ipr;
using ipr::testing::random_tensor;

namespace {

ExplainTarget target(std::size_t cls, std::string id = "img") { return ExplainTarget{cls, std::move(id), "original"}; }

// 2 inputs -> 2 hidden ReLU units -> 2 logits, weights set by hand.
Model two_neuron_net() {
  Model m = ModelBuilder("two", {1, 1, 2}, 2).flatten("flatten").dense("h", 2).relu("r").dense("out", 2).build(1);
  m.parameters.at("h") = {Tensor({2, 2}, {1, -1, 2, 1}), Tensor({2})};
  m.parameters.at("out") = {Tensor({2, 2}, {-1, 2, 1, 1}), Tensor({2})};
  return m;
}

// One 1x1 conv (weight a, bias b) on [1,4,4], then a dense head.
Model one_by_one_conv(double a, double b, std::uint64_t seed) {
  Model m = ModelBuilder("1x1", {1, 4, 4}, 2).conv("conv", 1, 1).flatten("flatten").dense("fc", 2).build(seed);
  m.parameters.at("conv") = {Tensor({1, 1, 1, 1}, {a}), Tensor::from({b})};
  return m;
}

}  // namespace

TEST(Normalize, HandExample) {
  const Tensor n = normalize_saliency(Tensor({1, 2, 2}, {-2, 1, 0, 4}));
  EXPECT_EQ(n, Tensor({1, 2, 2}, {0.5, 0.25, 0, 1}));
}

TEST(Normalize, ZeroScaleSignAndChannels) {
  EXPECT_EQ(normalize_saliency(Tensor({2, 3, 3})), Tensor({1, 3, 3}));
  const Tensor raw = random_tensor({3, 5, 5}, 1, -1, 1);
  const Tensor n = normalize_saliency(raw);
  EXPECT_EQ(n.shape(), (Shape{1, 5, 5}));
  double mx = 0.0;
  for (double v : n.values()) {
    EXPECT_GE(v, 0.0);
    mx = std::max(mx, v);
  }
  EXPECT_EQ(mx, 1.0);
  EXPECT_LT(max_abs_diff(normalize_saliency(scaled(raw, 3.7)), n), 1e-15);
  EXPECT_EQ(normalize_saliency(scaled(raw, -1.0)), n);
}

TEST(Gradients, LinearModelGivesWeights) {
  const Model m = ipr::testing::linear_model(2);
  const Tensor x = random_tensor({1, 4, 4}, 3);
  const SaliencyMap s = explain_gradients(m, x, target(0));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(s.raw[i], m.parameters.at("fc").weight[i]);
  EXPECT_EQ(s.raw, explain_gradients(m, x, target(0)).raw);
  EXPECT_EQ(s.explainer, ExplainerId::Gradients);
  EXPECT_EQ(s.model_tag, "original");
}

TEST(InputXGradient, Definitional) {
  const Model& m = ipr::testing::trained_toy("toy-seq-3");
  const LabeledDataset d = generate_synthetic_dataset(4, 16, 2, 5);
  for (const auto& img : d.images) {
    const Tensor g = explain_gradients(m, img.tensor, target(1)).raw;
    EXPECT_EQ(explain_input_x_gradient(m, img.tensor, target(1)).raw, hadamard(g, img.tensor));
  }
  const Tensor zero({1, 16, 16});
  EXPECT_EQ(explain_input_x_gradient(m, zero, target(0)).raw, zero);
  EXPECT_EQ(explain_input_x_gradient(m, zero, target(0)).normalized, zero);
}

TEST(GuidedBP, NoReluMatchesGradients) {
  const Model m = ipr::testing::linear_model(4);
  const Tensor x = random_tensor({1, 4, 4}, 1);
  EXPECT_EQ(explain_guided_bp(m, x, target(1)).raw, explain_gradients(m, x, target(1)).raw);
}

TEST(GuidedBP, TwoNeuronHandPropagation) {
  // x = [0.5, 0.2]: hidden pre-activations [0.3, 1.2] are both active.
  // class 0 upstream at the ReLU is [-1, 2]. Standard: W1^T [-1, 2] = [3, 3].
  // Guided clips to [0, 2]: W1^T [0, 2] = [4, 2].
  const Model m = two_neuron_net();
  const Tensor x({1, 1, 2}, {0.5, 0.2});
  EXPECT_EQ(explain_gradients(m, x, target(0)).raw, Tensor({1, 1, 2}, {3, 3}));
  EXPECT_EQ(explain_guided_bp(m, x, target(0)).raw, Tensor({1, 1, 2}, {4, 2}));
  EXPECT_EQ(explain_guided_bp(m, x, target(0)).raw, explain_guided_bp(m, x, target(0)).raw);
}

TEST(GradCam, OneByOneConvByHand) {
  const double a = 0.8, b = 0.1;
  const Model m = one_by_one_conv(a, b, 3);
  const Tensor x = random_tensor({1, 4, 4}, 9);
  const Tensor& w = m.parameters.at("fc").weight;
  double alpha = 0.0;
  for (std::size_t j = 0; j < 16; ++j) alpha += w[16 + j];
  alpha /= 16.0;
  const Tensor cam = explain_gradcam(m, x, 1);
  ASSERT_EQ(cam.shape(), (Shape{1, 4, 4}));
  for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(cam[j], std::max(0.0, alpha * (a * x[j] + b)), 1e-15);
}

TEST(GradCam, NonNegativeInputSizedAndConvRequired) {
  for (const auto& arch : known_architectures()) {
    const Model m = build_architecture(arch, 2);
    const Tensor cam = explain_gradcam(m, random_tensor({1, 16, 16}, 4), 0);
    EXPECT_EQ(cam.shape(), (Shape{1, 16, 16}));
    for (double v : cam.values()) EXPECT_GE(v, 0.0);
  }
  EXPECT_THROW(explain_gradcam(ipr::testing::linear_model(1), Tensor({1, 4, 4}), 0), ValidationError);
}

TEST(GuidedGradCam, DefinitionalAndAnnihilation) {
  for (const auto& arch : known_architectures()) {
    const Model& m = ipr::testing::trained_toy(arch);
    const Tensor x = generate_synthetic_dataset(2, 16, 2, 3).images[1].tensor;
    const Tensor expected = hadamard(explain_guided_bp(m, x, target(1)).raw, explain_gradcam(m, x, 1));
    EXPECT_EQ(explain_guided_gradcam(m, x, target(1)).raw, expected);
  }
  // Negative conv output and positive head weights: the ReLU zeroes the CAM.
  Model m = one_by_one_conv(0.0, -1.0, 1);
  for (double& v : m.parameters.at("fc").weight.values()) v = std::abs(v) + 0.01;
  const Tensor x = random_tensor({1, 4, 4}, 2);
  EXPECT_EQ(explain_gradcam(m, x, 0), Tensor({1, 4, 4}));
  EXPECT_EQ(explain_guided_gradcam(m, x, target(0)).raw, Tensor({1, 4, 4}));
}

TEST(DeepLift, BaselineEqualsImageGivesZero) {
  const Model& m = ipr::testing::trained_toy("toy-res-4");
  const Tensor x = random_tensor({1, 16, 16}, 6);
  EXPECT_EQ(explain_deeplift(m, x, x, target(0)).raw, Tensor({1, 16, 16}));
  EXPECT_THROW(explain_deeplift(m, x, Tensor({1, 8, 8}), target(0)), ShapeError);
}

TEST(DeepLift, BiasFreeZeroBaselineEqualsInputXGradient) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model m = ipr::testing::bias_free_relu_net(seed);
    const Tensor x = random_tensor({1, 8, 8}, seed + 50);
    const Tensor dl = explain_deeplift(m, x, Tensor({1, 8, 8}), target(seed % 3)).raw;
    const Tensor ixg = explain_input_x_gradient(m, x, target(seed % 3)).raw;
    EXPECT_LE(max_abs_diff(dl, ixg), 1e-9);
  }
}

TEST(DeepLift, CompletenessOnPoolFreeNet) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model m = ipr::testing::pool_free_relu_net(seed);
    const Tensor x = random_tensor({1, 8, 8}, seed + 70);
    const Tensor base({1, 8, 8});
    const double delta = forward(m, x)[1] - forward(m, base)[1];
    const double total = sum(explain_deeplift(m, x, base, target(1)).raw);
    EXPECT_LE(std::abs(total - delta), 1e-6 * std::max(1.0, std::abs(delta)));
  }
}

TEST(IntegratedGradients, LinearModelExact) {
  const Model m = ipr::testing::linear_model(6);
  const Tensor x = random_tensor({1, 4, 4}, 1), base({1, 4, 4});
  const Tensor w = Tensor({1, 4, 4}, std::vector<double>(m.parameters.at("fc").weight.values().begin() + 16,
                                                         m.parameters.at("fc").weight.values().end()));
  for (std::size_t steps : {1, 7, 64}) {
    const Tensor ig = explain_integrated_gradients(m, x, base, steps, target(1)).raw;
    EXPECT_EQ(ig, hadamard(subtract(x, base), w));
    EXPECT_EQ(ig, explain_input_x_gradient(m, x, target(1)).raw);
  }
  EXPECT_THROW(explain_integrated_gradients(m, x, base, 0, target(1)), ValidationError);
}

TEST(IntegratedGradients, CompletenessAt256Steps) {
  for (const auto& arch : known_architectures()) {
    const Model& m = ipr::testing::trained_toy(arch);
    const LabeledDataset d = generate_synthetic_dataset(3, 16, 2, 17);
    for (const auto& img : d.images) {
      const Tensor base({1, 16, 16});
      const std::size_t cls = argmax(forward(m, img.tensor));
      const double delta = forward(m, img.tensor)[cls] - forward(m, base)[cls];
      const double total = sum(explain_integrated_gradients(m, img.tensor, base, 256, target(cls)).raw);
      EXPECT_LE(std::abs(total - delta), 0.01 * std::abs(delta) + 1e-8) << arch << " " << img.image_id;
    }
  }
}

TEST(IntegratedGradients, Converges) {
  const Model& m = ipr::testing::trained_toy("toy-seq-3");
  const Tensor x = generate_synthetic_dataset(1, 16, 2, 4).images[0].tensor;
  const Tensor base({1, 16, 16});
  const Tensor a = explain_integrated_gradients(m, x, base, 512, target(0)).raw;
  const Tensor b = explain_integrated_gradients(m, x, base, 1024, target(0)).raw;
  EXPECT_LT(l1_norm(subtract(a, b)), 1e-3 * l1_norm(a));
}

TEST(Lime, RecoversAdditivePatchContributions) {
  // logit = sum_p c_p * mean(patch p): exactly linear in the patch mask.
  Model m = ModelBuilder("additive", {1, 16, 16}, 2).flatten("flatten").dense("fc", 2).build(1);
  const std::vector<std::size_t> seg = grid_segments(16, 16, 16);
  std::vector<double> c(16);
  for (std::size_t p = 0; p < 16; ++p) c[p] = 0.5 + 0.25 * static_cast<double>(p % 5) - (p % 3 == 0 ? 1.0 : 0.0);
  Tensor& w = m.parameters.at("fc").weight;
  for (std::size_t i = 0; i < 256; ++i) {
    w[i] = 0.0;
    w[256 + i] = c[seg[i]] / 16.0;
  }
  m.parameters.at("fc").bias = Tensor::from({0.0, 0.3});
  const Tensor x = random_tensor({1, 16, 16}, 8, 0.2, 1.0);
  ExplainerConfig config;
  config.lime_l1_strength = 1e-9;
  const SaliencyMap s = explain_lime(m, x, target(1), config);
  for (std::size_t p = 0; p < 16; ++p) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
      if (seg[i] == p) mean += x[i] / 16.0;
    }
    const double expected = c[p] * mean;
    std::size_t pixel = 0;
    while (seg[pixel] != p) ++pixel;
    EXPECT_NEAR(s.raw[pixel], expected, 0.05 * std::abs(expected)) << "patch " << p;
  }
}

TEST(Lime, SeededAndRegularizationLimit) {
  const Model& m = ipr::testing::trained_toy("toy-seq-3");
  const Tensor x = generate_synthetic_dataset(1, 16, 2, 4).images[0].tensor;
  ExplainerConfig config;
  const SaliencyMap a = explain_lime(m, x, target(0, "img-a"), config);
  EXPECT_EQ(a.raw, explain_lime(m, x, target(0, "img-a"), config).raw);
  // The tag is a label only; the stream follows image id and weights.
  EXPECT_EQ(a.raw, explain_lime(m, x, ExplainTarget{0, "img-a", "randomized:conv1"}, config).raw);
  EXPECT_NE(a.raw, explain_lime(m, x, target(0, "img-b"), config).raw);
  EXPECT_NE(a.raw, explain_lime(randomize_layer(m, "fc", 3), x, target(0, "img-a"), config).raw);
  config.lime_l1_strength = 1e12;
  const SaliencyMap z = explain_lime(m, x, target(0), config);
  EXPECT_EQ(z.raw, Tensor({1, 16, 16}));
  EXPECT_EQ(z.normalized, Tensor({1, 16, 16}));
}

TEST(Lime, DegenerateDesignRejected) {
  ExplainerConfig config;
  config.lime_segments = 1;
  config.lime_samples = 1;
  const Model& m = ipr::testing::trained_toy("toy-seq-3");
  EXPECT_THROW(explain_lime(m, Tensor({1, 16, 16}, 0.5), target(0), config), ValidationError);
}

TEST(Lime, GridAndLasso) {
  const auto seg = grid_segments(4, 4, 4);
  EXPECT_EQ(seg, (std::vector<std::size_t>{0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3}));
  EXPECT_THROW(grid_segments(16, 16, 15), ValidationError);
  // y = 2 a - b + 1 exactly; tiny penalty recovers it.
  std::vector<std::vector<double>> rows{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {1, 0}};
  std::vector<double> y, w(5, 1.0);
  for (const auto& r : rows) y.push_back(2 * r[0] - r[1] + 1);
  const LassoFit fit = weighted_lasso(rows, y, w, 1e-12);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coefficients[0], 2.0, 1e-6);
  EXPECT_NEAR(fit.coefficients[1], -1.0, 1e-6);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-6);
}

TEST(Dispatch, NamesAndDefaults) {
  EXPECT_EQ(default_explainers().size(), 7u);
  for (ExplainerId id : default_explainers()) {
    EXPECT_NE(id, ExplainerId::GradCAM);
    EXPECT_EQ(parse_explainer(to_string(id)), id);
  }
  EXPECT_FALSE(parse_explainer("SmoothGrad"));
  const Model& m = ipr::testing::trained_toy("toy-seq-3");
  const Tensor x = generate_synthetic_dataset(1, 16, 2, 4).images[0].tensor;
  for (ExplainerId id : default_explainers()) {
    const SaliencyMap s = explain(id, m, x, target(0), ExplainerConfig{});
    EXPECT_EQ(s.explainer, id);
    EXPECT_TRUE(s.raw.all_finite());
    EXPECT_EQ(s.normalized.shape(), (Shape{1, 16, 16}));
    EXPECT_EQ(s.raw, explain(id, m, x, target(0), ExplainerConfig{}).raw);
  }
}

TEST(Config, Validation) {
  ExplainerConfig c;
  c.ig_steps = 0;
  EXPECT_THROW(validate(c), ValidationError);
  c = {};
  c.lime_samples = c.lime_segments - 1;
  EXPECT_THROW(validate(c), ValidationError);
  c = {};
  c.lime_kernel_width = 0.0;
  EXPECT_THROW(validate(c), ValidationError);
}
