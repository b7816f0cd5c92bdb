#include "ipr/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ipr/error.hpp"
#include "ipr/rng.hpp"

namespace ipr {

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw ValidationError("train: learning_rate must be a positive finite number");
  }
  if (config.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(config.accuracy_floor >= 0.0 && config.accuracy_floor <= 1.0)) {
    throw ValidationError("train: accuracy_floor must lie in [0, 1]");
  }
}

double accuracy(const Model& model, const LabeledDataset& dataset) {
  if (dataset.images.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    if (argmax(forward(model, dataset.images[i].tensor)) == dataset.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.images.size());
}

namespace {

Tensor softmax(const Tensor& logits) {
  const double peak = logits[argmax(logits)];
  Tensor p = logits;
  double total = 0.0;
  for (double& v : p.values()) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : p.values()) v /= total;
  return p;
}

}  // namespace

double cross_entropy(const Tensor& logits, std::size_t label) {
  const Tensor p = softmax(logits);
  return -std::log(std::max(p[label], 1e-300));
}

Model train(const Model& model, const LabeledDataset& dataset, const TrainConfig& config) {
  if (config.epochs == 0) return model;
  validate(config);
  validate(dataset);
  for (std::size_t label : dataset.labels) {
    if (label >= model.num_classes) {
      throw ValidationError("train: label " + std::to_string(label) + " out of range for a " +
                            std::to_string(model.num_classes) + "-class model");
    }
  }

  Model trained = model;
  trained.training_seed = config.seed;
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the portable generator.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, order.size());
      std::map<std::string, LayerParams> batch_grad;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const ForwardTrace trace = trace_forward(trained, dataset.images[idx].tensor);
        Tensor dlogits = softmax(trace.logits());
        dlogits[dataset.labels[idx]] -= 1.0;
        BackwardOptions options;
        options.parameter_gradients = true;
        BackwardResult result = backpropagate(trained, trace, dlogits, options);
        for (auto& [id, g] : result.parameter_grads) {
          auto it = batch_grad.find(id);
          if (it == batch_grad.end()) {
            batch_grad.emplace(id, std::move(g));
          } else {
            it->second.weight = add(it->second.weight, g.weight);
            it->second.bias = add(it->second.bias, g.bias);
          }
        }
      }
      const double scale = config.learning_rate / static_cast<double>(stop - start);
      for (auto& [id, params] : trained.parameters) {
        const LayerParams& g = batch_grad.at(id);
        for (std::size_t i = 0; i < params.weight.size(); ++i) params.weight[i] -= scale * g.weight[i];
        for (std::size_t i = 0; i < params.bias.size(); ++i) params.bias[i] -= scale * g.bias[i];
      }
    }
  }

  for (const auto& [id, params] : trained.parameters) {
    require_finite(params.weight, "training");
    require_finite(params.bias, "training");
  }
  const double acc = accuracy(trained, dataset);
  if (acc < config.accuracy_floor) {
    std::ostringstream msg;
    msg << "training '" << model.architecture_id << "' reached accuracy " << acc << " after " << config.epochs
        << " epochs, below the floor " << config.accuracy_floor;
    throw TrainingError(msg.str());
  }
  return trained;
}

}  // namespace ipr
