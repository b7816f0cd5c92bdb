#include "ipr/harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "ipr/error.hpp"
#include "ipr/nn/train.hpp"
#include "ipr/rng.hpp"
#include "ipr/zoo/architectures.hpp"

namespace ipr {

void validate(const IprConfig& c) {
  if (c.explainers.empty()) throw ValidationError("ipr config: at least one explainer is required");
  std::set<ExplainerId> seen;
  for (ExplainerId e : c.explainers) {
    if (!seen.insert(e).second) throw ValidationError(std::string("ipr config: explainer listed twice: ") + to_string(e));
  }
  if (c.critical_layers && c.critical_layers->empty()) {
    throw ValidationError("ipr config: critical_layers must not be empty when given");
  }
  if (!(c.bootstrap_level > 0.0 && c.bootstrap_level < 1.0)) {
    throw ValidationError("ipr config: bootstrap_level must lie in (0, 1)");
  }
  if (c.bootstrap_resamples < 100) throw ValidationError("ipr config: bootstrap_resamples must be >= 100");
  validate(c.ssim);
  validate(c.explainer);
}

std::uint64_t layer_randomization_seed(std::uint64_t randomization_seed, const std::string& layer_id) {
  return derive_seed(derive_seed(randomization_seed, "layer"), layer_id);
}

LayerRandomizer randomize_layer_default() {
  return [](const Model& m, const std::string& id, std::uint64_t seed) { return randomize_layer(m, id, seed); };
}

namespace {

/// Runs task(i) for i in [0, n) on `threads` workers. If any task throws, the
/// exception of the lowest failing index is rethrown.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& task) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string describe(ExplainerId e, const std::string& image, const std::string& layer) {
  return std::string("explainer ") + to_string(e) + ", image '" + image + "', layer '" + layer + "'";
}

}  // namespace

ArchitectureReport run_ipr(const Model& model, const LabeledDataset& dataset, const IprConfig& config,
                           const LayerRandomizer& randomizer) {
  validate(config);
  validate(dataset);
  validate_model(model);
  if (config.required_accuracy) {
    const double acc = accuracy(model, dataset);
    if (acc < *config.required_accuracy) {
      throw ValidationError("run_ipr: model accuracy " + std::to_string(acc) + " is below the required " +
                            std::to_string(*config.required_accuracy));
    }
  }

  ArchitectureReport report;
  report.architecture_id = model.architecture_id;
  report.explainers = config.explainers;
  const auto all_layers = list_parameter_layers(model);
  if (all_layers.empty()) throw ValidationError("run_ipr: model has no parameter layers");
  if (config.critical_layers) {
    // Keep network order regardless of how the scope was listed.
    const std::set<std::string> wanted(config.critical_layers->begin(), config.critical_layers->end());
    for (const std::string& id : wanted) {
      if (std::find(all_layers.begin(), all_layers.end(), id) == all_layers.end()) {
        throw ValidationError("run_ipr: critical layer '" + id + "' is not a parameter layer of '" +
                              model.architecture_id + "'");
      }
    }
    for (const std::string& id : all_layers) {
      if (wanted.count(id)) report.layers.push_back(id);
    }
  } else {
    report.layers = all_layers;
  }

  const std::size_t threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  const std::size_t n_img = dataset.images.size();
  const std::size_t n_exp = config.explainers.size();
  const std::size_t n_lay = report.layers.size();

  for (const LabeledImage& img : dataset.images) report.image_ids.push_back(img.image_id);
  report.pinned_classes.resize(n_img);
  parallel_for(n_img, threads, [&](std::size_t i) {
    report.pinned_classes[i] = argmax(forward(model, dataset.images[i].tensor));
  });

  std::vector<Model> randomized;
  randomized.reserve(n_lay);
  for (const std::string& id : report.layers) {
    randomized.push_back(randomizer(model, id, layer_randomization_seed(config.randomization_seed, id)));
    if (randomized.back().layers != model.layers) {
      throw IprError("randomizer changed the architecture while randomizing layer '" + id + "'");
    }
  }

  report.original_maps.resize(n_exp * n_img);
  parallel_for(n_exp * n_img, threads, [&](std::size_t t) {
    const std::size_t e = t / n_img, i = t % n_img;
    const ExplainerId id = config.explainers[e];
    const ExplainTarget target{report.pinned_classes[i], dataset.images[i].image_id, "original"};
    try {
      report.original_maps[t] = explain(id, model, dataset.images[i].tensor, target, config.explainer);
    } catch (const std::exception& ex) {
      throw IprError(describe(id, target.image_id, "original") + ": " + ex.what());
    }
  });

  report.randomized_maps.resize(n_exp * n_img * n_lay);
  std::vector<double> ssim_raw(n_exp * n_img * n_lay);
  parallel_for(n_exp * n_img * n_lay, threads, [&](std::size_t t) {
    const std::size_t e = t / (n_img * n_lay);
    const std::size_t i = (t / n_lay) % n_img;
    const std::size_t l = t % n_lay;
    const ExplainerId id = config.explainers[e];
    const ExplainTarget target{report.pinned_classes[i], dataset.images[i].image_id, "randomized:" + report.layers[l]};
    try {
      report.randomized_maps[t] = explain(id, randomized[l], dataset.images[i].tensor, target, config.explainer);
      ssim_raw[t] = ssim_unclamped(report.original_maps[e * n_img + i].normalized,
                                   report.randomized_maps[t].normalized, config.ssim);
    } catch (const std::exception& ex) {
      throw IprError(describe(id, target.image_id, report.layers[l]) + ": " + ex.what());
    }
  });

  // Sequential reduce in a fixed order keeps the report schedule-independent.
  report.records.reserve(ssim_raw.size());
  for (std::size_t e = 0; e < n_exp; ++e) {
    std::vector<ImageSensitivity> images;
    for (std::size_t i = 0; i < n_img; ++i) {
      std::vector<SensitivityRecord> recs;
      for (std::size_t l = 0; l < n_lay; ++l) {
        recs.push_back(make_record(dataset.images[i].image_id, report.layers[l], config.explainers[e],
                                   ssim_raw[(e * n_img + i) * n_lay + l], config.threshold_rule));
      }
      report.records.insert(report.records.end(), recs.begin(), recs.end());
      images.push_back(image_sensitivity(std::move(recs)));
    }
    const BootstrapSpec boot{
        config.bootstrap_resamples, config.bootstrap_level,
        derive_seed(derive_seed(config.randomization_seed, "bootstrap"),
                    model.architecture_id + "/" + to_string(config.explainers[e]))};
    report.per_explainer.push_back(dataset_sensitivity(images, model.architecture_id, boot));
    report.per_image.insert(report.per_image.end(), std::make_move_iterator(images.begin()),
                            std::make_move_iterator(images.end()));
  }
  return report;
}

double SITable::at(ExplainerId e, const std::string& arch) const {
  const auto it = values.find({e, arch});
  if (it == values.end()) {
    throw ValidationError(std::string("S^I table has no value for ") + to_string(e) + " on '" + arch + "'");
  }
  return it->second;
}

SITable si_table(const std::vector<ArchitectureReport>& reports) {
  SITable table;
  for (const ArchitectureReport& r : reports) {
    table.architectures.push_back(r.architecture_id);
    for (const DatasetSensitivity& d : r.per_explainer) {
      if (std::find(table.explainers.begin(), table.explainers.end(), d.explainer) == table.explainers.end()) {
        table.explainers.push_back(d.explainer);
      }
      table.values[{d.explainer, r.architecture_id}] = d.s_I;
    }
  }
  return table;
}

CorrelationTables cross_architecture_correlations(const SITable& table) {
  if (table.architectures.size() < 3) {
    throw ValidationError("cross-architecture correlation needs at least 3 architectures, got " +
                          std::to_string(table.architectures.size()));
  }
  const std::size_t k = table.explainers.size();
  std::vector<std::vector<double>> profiles(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (const std::string& arch : table.architectures) profiles[i].push_back(table.at(table.explainers[i], arch));
  }

  CorrelationTables out;
  out.spearman.method = CorrelationMethod::Spearman;
  out.pearson.method = CorrelationMethod::Pearson;
  for (CorrelationMatrix* m : {&out.spearman, &out.pearson}) {
    m->explainers = table.explainers;
    m->cells.assign(k, std::vector<std::optional<CorrelationResult>>(k));
    for (std::size_t i = 0; i < k; ++i) {
      m->cells[i][i] = CorrelationResult{1.0, 0.0, table.architectures.size(), m->method};
      for (std::size_t j = i + 1; j < k; ++j) {
        try {
          const CorrelationResult r = m->method == CorrelationMethod::Spearman ? spearman(profiles[i], profiles[j])
                                                                               : pearson(profiles[i], profiles[j]);
          m->cells[i][j] = r;
          m->cells[j][i] = r;
        } catch (const StatisticsError&) {
          // constant profile: leave the cell undefined
        }
      }
    }
  }
  return out;
}

}  // namespace ipr
