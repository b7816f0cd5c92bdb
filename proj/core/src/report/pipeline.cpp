#include "ipr/report/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "ipr/error.hpp"
#include "ipr/io.hpp"
#include "ipr/nn/train.hpp"
#include "ipr/report/emit.hpp"
#include "ipr/rng.hpp"
#include "ipr/zoo/architectures.hpp"
#include "ipr/zoo/model_io.hpp"

namespace ipr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  // Probe with a real write; permission bits alone miss read-only mounts.
  write_file_atomic(dir / ".write-probe", "");
  std::filesystem::remove(dir / ".write-probe", ec);
}

}  // namespace

LabeledDataset evaluation_dataset(const RunConfig& config) {
  const DatasetSpec& d = config.dataset;
  return generate_synthetic_dataset(d.num_images, d.image_size, d.num_classes, d.seed);
}

LabeledDataset training_dataset(const RunConfig& config) {
  const DatasetSpec& d = config.dataset;
  return generate_synthetic_dataset(d.train_images, d.image_size, d.num_classes, derive_seed(d.seed, "train"));
}

std::filesystem::path model_cache_path(const RunConfig& config, const std::string& architecture_id) {
  const DatasetSpec& d = config.dataset;
  const TrainConfig& t = config.train;
  const std::string key = architecture_id + "|format=" + std::to_string(kModelFormatVersion) +
                          "|size=" + std::to_string(d.image_size) + "|classes=" + std::to_string(d.num_classes) +
                          "|seed=" + std::to_string(d.seed) + "|train_images=" + std::to_string(d.train_images) +
                          "|lr=" + format_double(t.learning_rate) + "|epochs=" + std::to_string(t.epochs) +
                          "|batch=" + std::to_string(t.batch_size) + "|train_seed=" + std::to_string(t.seed);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(key)));
  const std::filesystem::path dir = config.cache_dir.value_or(config.output_dir / "model-cache");
  return dir / (architecture_id + "-" + hex + ".iprm");
}

TrainedModel obtain_model(const RunConfig& config, const std::string& architecture_id) {
  const auto start = Clock::now();
  const LabeledDataset eval = evaluation_dataset(config);
  const auto cache = model_cache_path(config, architecture_id);
  TrainedModel out;
  if (config.use_cache && std::filesystem::exists(cache)) {
    out.model = load_model(cache);
    out.from_cache = true;
  } else {
    const ArchitectureOptions options{config.dataset.image_size, config.dataset.num_classes};
    const Model init = build_architecture(architecture_id, derive_seed(config.train.seed, "init/" + architecture_id),
                                          options);
    out.model = train(init, training_dataset(config), config.train);
    if (config.use_cache) {
      std::error_code ec;
      std::filesystem::create_directories(cache.parent_path(), ec);
      if (ec) throw IoError("cannot create cache directory " + cache.parent_path().string() + ": " + ec.message());
      save_model(out.model, cache);
    }
  }
  out.accuracy = accuracy(out.model, eval);
  out.seconds = seconds_since(start);
  return out;
}

RunOutcome run_command(const RunConfig& config) {
  validate(config);
  ensure_writable(config.output_dir);
  const LabeledDataset eval = evaluation_dataset(config);

  RunOutcome outcome;
  nlohmann::ordered_json timing = nlohmann::ordered_json::array();
  for (const std::string& arch : config.architectures) {
    const TrainedModel trained = obtain_model(config, arch);
    const auto start = Clock::now();
    ArchitectureReport report = run_ipr(trained.model, eval, config.ipr);
    report.architecture_id = arch;
    timing.push_back({{"architecture", arch},
                      {"model_from_cache", trained.from_cache},
                      {"train_or_load_seconds", trained.seconds},
                      {"ipr_seconds", seconds_since(start)}});
    outcome.reports.push_back(std::move(report));
    outcome.train_accuracy.push_back(trained.accuracy);
  }

  std::vector<DatasetSensitivity> scores;
  for (const auto& r : outcome.reports) scores.insert(scores.end(), r.per_explainer.begin(), r.per_explainer.end());

  const auto& dir = config.output_dir;
  const std::vector<std::pair<std::string, std::string>> files{
      {"report.json", report_json(config_echo_json(config), outcome.reports, outcome.train_accuracy)},
      {"records.csv", records_csv(outcome.reports)},
      {"correlations.csv", emit_correlation_tables(si_table(outcome.reports))},
      {"s_I_chart.svg", emit_s_I_chart(scores)},
      {"timing.json", timing.dump(2) + "\n"},
  };
  for (const auto& [name, contents] : files) {
    write_file_atomic(dir / name, contents);
    outcome.files.push_back(dir / name);
  }
  return outcome;
}

std::vector<std::filesystem::path> report_command(const std::filesystem::path& records_csv_path,
                                                  const ReportOptions& options) {
  const auto reports = recompute_from_records(read_file(records_csv_path), options.bootstrap, options.randomization_seed);
  if (reports.empty()) throw ValidationError(records_csv_path.string() + ": no records");
  const auto dir = options.output_dir.value_or(records_csv_path.parent_path().empty() ? std::filesystem::path(".")
                                                                                       : records_csv_path.parent_path());
  ensure_writable(dir);
  std::vector<DatasetSensitivity> scores;
  for (const auto& r : reports) scores.insert(scores.end(), r.per_explainer.begin(), r.per_explainer.end());
  const std::vector<std::pair<std::string, std::string>> files{
      {"aggregates.json", aggregates_json(reports)},
      {"correlations.csv", emit_correlation_tables(si_table(reports))},
      {"s_I_chart.svg", emit_s_I_chart(scores)},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, contents] : files) {
    write_file_atomic(dir / name, contents);
    written.push_back(dir / name);
  }
  return written;
}

std::vector<std::filesystem::path> gallery_command(const RunConfig& config, const std::vector<std::string>& image_ids) {
  validate(config);
  if (image_ids.empty()) throw ValidationError("gallery: no image ids given");
  const LabeledDataset eval = evaluation_dataset(config);
  for (const auto& id : image_ids) {
    const bool known = std::any_of(eval.images.begin(), eval.images.end(),
                                   [&](const LabeledImage& im) { return im.image_id == id; });
    if (!known) throw ValidationError("gallery: unknown image id '" + id + "'");
  }
  const LabeledDataset subset = select_images(eval, image_ids);
  const auto dir = config.output_dir / "gallery";
  ensure_writable(dir);
  std::vector<std::filesystem::path> written;
  for (const std::string& arch : config.architectures) {
    const TrainedModel trained = obtain_model(config, arch);
    ArchitectureReport report = run_ipr(trained.model, subset, config.ipr);
    report.architecture_id = arch;
    const auto files = export_saliency_gallery(report, image_ids, dir);
    written.insert(written.end(), files.begin(), files.end());
  }
  return written;
}

}  // namespace ipr
