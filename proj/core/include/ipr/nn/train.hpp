#pragma once

#include <cstdint>

#include "ipr/nn/model.hpp"
#include "ipr/zoo/dataset.hpp"

namespace ipr {

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 40;
  std::size_t batch_size = 10;
  std::uint64_t seed = 1;
  /// Minimum training-set accuracy; below it train() throws TrainingError.
  double accuracy_floor = 0.95;
};

/// Throws ValidationError unless learning_rate > 0, epochs >= 1, batch_size >= 1
/// and accuracy_floor lies in [0, 1].
void validate(const TrainConfig& config);

/// Fraction of dataset images whose argmax logit equals the label.
double accuracy(const Model& model, const LabeledDataset& dataset);

/// Softmax cross-entropy of the logits against `label`.
double cross_entropy(const Tensor& logits, std::size_t label);

/// Minibatch SGD on softmax cross-entropy, deterministic for a given seed.
/// Returns a new model; the input is not modified. `epochs == 0` is a no-op
/// that returns the model unchanged without checking the accuracy floor.
Model train(const Model& model, const LabeledDataset& dataset, const TrainConfig& config);

}  // namespace ipr
