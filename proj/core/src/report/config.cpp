#include "ipr/report/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "ipr/error.hpp"
#include "ipr/io.hpp"
#include "ipr/zoo/architectures.hpp"

namespace ipr {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw ConfigError("config " + (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

/// Reads keys out of one JSON object and rejects whatever was not consumed.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string pointer) : object_(object), pointer_(std::move(pointer)) {
    if (!object_.is_object()) fail(pointer_, "must be an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }

  void read(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(at(key), "must be a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void read(const std::string& key, std::uint64_t& out, int) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(at(key), "must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(at(key), "must be a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(at(key), "must be true or false");
      out = v->get<bool>();
    }
  }
  std::optional<std::string> read_string(const std::string& key) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(at(key), "must be a string");
      return v->get<std::string>();
    }
    return std::nullopt;
  }
  std::optional<std::vector<std::string>> read_strings(const std::string& key) {
    if (const json* v = find(key)) {
      if (v->is_null()) return std::nullopt;
      if (!v->is_array()) fail(at(key), "must be an array of strings");
      std::vector<std::string> out;
      for (const json& e : *v) {
        if (!e.is_string()) fail(at(key), "must be an array of strings");
        out.push_back(e.get<std::string>());
      }
      return out;
    }
    return std::nullopt;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) fail(at(key), "unknown key");
    }
  }

 private:
  const json& object_;
  std::string pointer_;
  std::set<std::string> seen_;
};

void read_dataset(const json& j, DatasetSpec& d) {
  ObjectReader r(j, "/dataset");
  r.read("num_images", d.num_images);
  r.read("image_size", d.image_size);
  r.read("num_classes", d.num_classes);
  r.read("seed", d.seed, 0);
  r.read("train_images", d.train_images);
  r.finish();
}

void read_train(const json& j, TrainConfig& t) {
  ObjectReader r(j, "/train");
  r.read("learning_rate", t.learning_rate);
  r.read("epochs", t.epochs);
  r.read("batch_size", t.batch_size);
  r.read("seed", t.seed, 0);
  r.read("accuracy_floor", t.accuracy_floor);
  r.finish();
}

void read_ssim(const json& j, SsimParams& s) {
  ObjectReader r(j, "/ipr/ssim");
  r.read("window_size", s.window_size);
  r.read("window_sigma", s.window_sigma);
  r.read("k1", s.k1);
  r.read("k2", s.k2);
  r.read("dynamic_range", s.dynamic_range);
  r.finish();
}

void read_explainer(const json& j, ExplainerConfig& e) {
  ObjectReader r(j, "/ipr/explainer");
  r.read("ig_steps", e.ig_steps);
  if (auto b = r.read_string("baseline")) {
    const auto kind = parse_baseline(*b);
    if (!kind) fail(r.at("baseline"), "unsupported baseline '" + *b + "' (only \"zero\" is implemented)");
    e.baseline = *kind;
  }
  r.read("lime_segments", e.lime_segments);
  r.read("lime_samples", e.lime_samples);
  r.read("lime_kernel_width", e.lime_kernel_width);
  r.read("lime_l1_strength", e.lime_l1_strength);
  r.read("seed", e.seed, 0);
  r.finish();
}

void read_ipr(const json& j, IprConfig& c) {
  ObjectReader r(j, "/ipr");
  if (auto names = r.read_strings("explainers")) {
    c.explainers.clear();
    for (const std::string& n : *names) {
      const auto id = parse_explainer(n);
      if (!id) fail(r.at("explainers"), "unknown explainer '" + n + "'");
      c.explainers.push_back(*id);
    }
  }
  c.critical_layers = r.read_strings("critical_layers");
  r.read("randomization_seed", c.randomization_seed, 0);
  r.read("bootstrap_resamples", c.bootstrap_resamples);
  r.read("bootstrap_level", c.bootstrap_level);
  if (auto rule = r.read_string("threshold_rule")) {
    if (*rule == "at_most") {
      c.threshold_rule = ThresholdRule::AtMost;
    } else if (*rule == "strictly_below") {
      c.threshold_rule = ThresholdRule::StrictlyBelow;
    } else {
      fail(r.at("threshold_rule"), "must be \"at_most\" or \"strictly_below\"");
    }
  }
  if (const json* s = r.find("ssim")) read_ssim(*s, c.ssim);
  if (const json* e = r.find("explainer")) read_explainer(*e, c.explainer);
  r.finish();
}

// Re-raises a semantic validation failure as a ConfigError naming `pointer`.
template <typename F>
void check(const std::string& pointer, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    fail(pointer, e.what());
  }
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.architectures.empty()) fail("/architectures", "at least one architecture is required");
  std::set<std::string> seen;
  for (const std::string& a : c.architectures) {
    const auto& known = known_architectures();
    if (std::find(known.begin(), known.end(), a) == known.end()) fail("/architectures", "unknown architecture '" + a + "'");
    if (!seen.insert(a).second) fail("/architectures", "architecture listed twice: '" + a + "'");
  }
  const DatasetSpec& d = c.dataset;
  if (d.num_images < 1) fail("/dataset/num_images", "must be >= 1");
  if (d.train_images < 1) fail("/dataset/train_images", "must be >= 1");
  if (d.num_classes < 2 || d.num_classes > 4) fail("/dataset/num_classes", "must be 2, 3 or 4");
  if (d.image_size < 8) fail("/dataset/image_size", "must be >= 8");
  if (d.image_size < c.ipr.ssim.window_size) fail("/dataset/image_size", "must be at least the SSIM window size");
  check("/train", [&] { validate(c.train); });
  check("/ipr", [&] { validate(c.ipr); });
  if (c.output_dir.empty()) fail("/output_dir", "must not be empty");
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    const std::size_t nl = text.substr(0, upto).rfind('\n');
    const std::size_t col = nl == std::string_view::npos ? upto + 1 : upto - nl;
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }

  RunConfig c;
  ObjectReader r(root, "");
  if (auto archs = r.read_strings("architectures")) c.architectures = *archs;
  if (const json* d = r.find("dataset")) read_dataset(*d, c.dataset);
  if (const json* t = r.find("train")) read_train(*t, c.train);
  if (const json* i = r.find("ipr")) read_ipr(*i, c.ipr);
  r.read("threads", c.ipr.threads);
  if (auto out = r.read_string("output_dir")) c.output_dir = *out;
  if (const json* cache = r.find("cache_dir"); cache && !cache->is_null()) {
    if (!cache->is_string()) fail("/cache_dir", "must be a string or null");
    c.cache_dir = cache->get<std::string>();
  }
  r.read("use_cache", c.use_cache);
  r.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string config_echo_json(const RunConfig& c) {
  json explainers = json::array();
  for (ExplainerId e : c.ipr.explainers) explainers.push_back(to_string(e));
  const ExplainerConfig& ex = c.ipr.explainer;
  const SsimParams& s = c.ipr.ssim;
  json j = {
      {"architectures", c.architectures},
      {"dataset",
       {{"num_images", c.dataset.num_images},
        {"image_size", c.dataset.image_size},
        {"num_classes", c.dataset.num_classes},
        {"seed", c.dataset.seed},
        {"train_images", c.dataset.train_images}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"seed", c.train.seed},
        {"accuracy_floor", c.train.accuracy_floor}}},
      {"ipr",
       {{"explainers", explainers},
        {"critical_layers", c.ipr.critical_layers ? json(*c.ipr.critical_layers) : json(nullptr)},
        {"randomization_seed", c.ipr.randomization_seed},
        {"bootstrap_resamples", c.ipr.bootstrap_resamples},
        {"bootstrap_level", c.ipr.bootstrap_level},
        {"threshold_rule", to_string(c.ipr.threshold_rule)},
        {"ssim",
         {{"window_size", s.window_size},
          {"window_sigma", s.window_sigma},
          {"k1", s.k1},
          {"k2", s.k2},
          {"dynamic_range", s.dynamic_range}}},
        {"explainer",
         {{"ig_steps", ex.ig_steps},
          {"baseline", to_string(ex.baseline)},
          {"lime_segments", ex.lime_segments},
          {"lime_samples", ex.lime_samples},
          {"lime_kernel_width", ex.lime_kernel_width},
          {"lime_l1_strength", ex.lime_l1_strength},
          {"seed", ex.seed}}}}},
  };
  return j.dump();
}

}  // namespace ipr
