#include "ipr/report/emit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ipr/error.hpp"
#include "ipr/io.hpp"
#include "ipr/rng.hpp"

namespace ipr {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string records_csv(const std::vector<ArchitectureReport>& reports) {
  std::string out(kRecordsHeader);
  out += "\n";
  for (const ArchitectureReport& report : reports) {
    for (const SensitivityRecord& r : report.records) {
      out += report.architecture_id + "," + to_string(r.explainer) + "," + r.image_id + "," + r.layer_id + "," +
             format_double(r.ssim_raw) + "," + format_double(r.ssim) + "," + format_double(r.layer_sensitivity) + "," +
             (r.sensitive_to_layer ? "true" : "false") + "\n";
    }
  }
  return out;
}

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("records.csv line " + std::to_string(line) + ": '" + s + "' is not a number", 0);
  }
}

std::uint64_t bootstrap_seed(std::uint64_t randomization_seed, const std::string& arch, ExplainerId e) {
  return derive_seed(derive_seed(randomization_seed, "bootstrap"), arch + "/" + to_string(e));
}

ordered_json architecture_json(const ArchitectureReport& r) {
  ordered_json per_explainer = ordered_json::array();
  for (const DatasetSensitivity& d : r.per_explainer) {
    per_explainer.push_back({{"explainer", to_string(d.explainer)},
                             {"s_I", d.s_I},
                             {"sensitive_to_dataset", d.sensitive_to_dataset},
                             {"ci_lo", d.ci.lo},
                             {"ci_hi", d.ci.hi},
                             {"num_images", d.num_images},
                             {"num_layers", d.num_layers}});
  }
  ordered_json per_image = ordered_json::array();
  for (const ImageSensitivity& s : r.per_image) {
    per_image.push_back({{"explainer", to_string(s.explainer)},
                         {"image_id", s.image_id},
                         {"s_i", s.s_i},
                         {"sensitive_to_image", s.sensitive_to_image}});
  }
  return {{"architecture_id", r.architecture_id},
          {"layers", r.layers},
          {"dataset_sensitivity", per_explainer},
          {"image_sensitivity", per_image}};
}

ordered_json correlation_json(const CorrelationMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : m.cells) {
    ordered_json cells = ordered_json::array();
    for (const auto& cell : row) {
      if (cell) {
        cells.push_back({{"coefficient", cell->coefficient},
                         {"p_value", cell->p_value},
                         {"stars", significance_stars(cell->p_value)}});
      } else {
        cells.push_back(nullptr);
      }
    }
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

std::vector<ArchitectureReport> recompute_from_records(std::string_view csv, const BootstrapSpec& bootstrap_defaults,
                                                       std::uint64_t randomization_seed) {
  std::vector<std::string> lines;
  for (auto& l : split(csv, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) lines.push_back(std::move(l));
  }
  if (lines.empty() || lines.front() != kRecordsHeader) {
    throw FormatError("records.csv: header must be exactly '" + std::string(kRecordsHeader) + "'", 0);
  }

  std::vector<ArchitectureReport> reports;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto f = split(lines[n], ',');
    if (f.size() != 8) throw FormatError("records.csv line " + std::to_string(n + 1) + ": expected 8 fields", 0);
    const auto explainer = parse_explainer(f[1]);
    if (!explainer) throw FormatError("records.csv line " + std::to_string(n + 1) + ": unknown explainer", 0);
    if (f[7] != "true" && f[7] != "false") {
      throw FormatError("records.csv line " + std::to_string(n + 1) + ": sensitive_to_layer must be true/false", 0);
    }
    auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.architecture_id == f[0]; });
    if (it == reports.end()) {
      reports.emplace_back();
      reports.back().architecture_id = f[0];
      it = reports.end() - 1;
    }
    SensitivityRecord r;
    r.image_id = f[2];
    r.layer_id = f[3];
    r.explainer = *explainer;
    r.ssim_raw = parse_real(f[4], n + 1);
    r.ssim = parse_real(f[5], n + 1);
    r.layer_sensitivity = parse_real(f[6], n + 1);
    r.sensitive_to_layer = f[7] == "true";
    if (std::find(it->layers.begin(), it->layers.end(), r.layer_id) == it->layers.end()) it->layers.push_back(r.layer_id);
    if (std::find(it->explainers.begin(), it->explainers.end(), r.explainer) == it->explainers.end()) {
      it->explainers.push_back(r.explainer);
    }
    if (std::find(it->image_ids.begin(), it->image_ids.end(), r.image_id) == it->image_ids.end()) {
      it->image_ids.push_back(r.image_id);
    }
    it->records.push_back(std::move(r));
  }

  for (ArchitectureReport& report : reports) {
    for (ExplainerId e : report.explainers) {
      std::vector<ImageSensitivity> images;
      for (const std::string& image : report.image_ids) {
        std::vector<SensitivityRecord> group;
        for (const SensitivityRecord& r : report.records) {
          if (r.explainer == e && r.image_id == image) group.push_back(r);
        }
        if (!group.empty()) images.push_back(image_sensitivity(std::move(group)));
      }
      BootstrapSpec boot = bootstrap_defaults;
      boot.seed = bootstrap_seed(randomization_seed, report.architecture_id, e);
      report.per_explainer.push_back(dataset_sensitivity(images, report.architecture_id, boot));
      report.per_image.insert(report.per_image.end(), images.begin(), images.end());
    }
  }
  return reports;
}

std::string aggregates_json(const std::vector<ArchitectureReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const ArchitectureReport& r : reports) arr.push_back(architecture_json(r));
  return arr.dump(2) + "\n";
}

std::string report_json(const std::string& config_echo, const std::vector<ArchitectureReport>& reports,
                        const std::vector<double>& train_accuracy) {
  ordered_json root;
  root["format"] = "ipr-report/1";
  root["config"] = ordered_json::parse(config_echo);
  root["thresholds"] = {{"ssim", kSsimThreshold}, {"sensitivity", kSensitivityThreshold}};
  ordered_json archs = ordered_json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    ordered_json a = architecture_json(reports[i]);
    if (i < train_accuracy.size()) a["train_accuracy"] = train_accuracy[i];
    ordered_json pinned = ordered_json::array();
    for (std::size_t k = 0; k < reports[i].image_ids.size() && k < reports[i].pinned_classes.size(); ++k) {
      pinned.push_back({{"image_id", reports[i].image_ids[k]}, {"class", reports[i].pinned_classes[k]}});
    }
    a["pinned_classes"] = pinned;
    ordered_json records = ordered_json::array();
    for (const SensitivityRecord& r : reports[i].records) {
      records.push_back({{"explainer", to_string(r.explainer)},
                         {"image_id", r.image_id},
                         {"layer_id", r.layer_id},
                         {"ssim_raw", r.ssim_raw},
                         {"ssim", r.ssim},
                         {"layer_sensitivity", r.layer_sensitivity},
                         {"sensitive_to_layer", r.sensitive_to_layer}});
    }
    a["records"] = records;
    archs.push_back(a);
  }
  root["architectures"] = archs;

  const SITable table = si_table(reports);
  ordered_json si = ordered_json::object();
  for (ExplainerId e : table.explainers) {
    ordered_json row = ordered_json::object();
    for (const std::string& arch : table.architectures) row[arch] = table.at(e, arch);
    si[to_string(e)] = row;
  }
  root["s_I_table"] = si;
  if (table.architectures.size() >= 3) {
    const CorrelationTables tables = cross_architecture_correlations(table);
    ordered_json names = ordered_json::array();
    for (ExplainerId e : table.explainers) names.push_back(to_string(e));
    root["correlations"] = {{"explainers", names},
                            {"spearman", correlation_json(tables.spearman)},
                            {"pearson", correlation_json(tables.pearson)}};
  } else {
    root["correlations"] = {{"warning", "correlation tables require at least 3 architectures"}};
  }
  return root.dump(2) + "\n";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 6> kPalette{"#4e79a7", "#f28e2b", "#59a14f", "#b07aa1", "#edc948", "#76b7b2"};

}  // namespace

std::string emit_s_I_chart(const std::vector<DatasetSensitivity>& scores, const ChartGeometry& g) {
  if (scores.empty()) throw ValidationError("emit_s_I_chart: no S^I values to plot");
  std::vector<ExplainerId> explainers;
  std::vector<std::string> archs;
  for (const DatasetSensitivity& d : scores) {
    if (std::find(explainers.begin(), explainers.end(), d.explainer) == explainers.end()) explainers.push_back(d.explainer);
    if (std::find(archs.begin(), archs.end(), d.architecture_id) == archs.end()) archs.push_back(d.architecture_id);
  }
  const double group_width = static_cast<double>(archs.size()) * g.bar_width + g.group_gap;
  const double plot_width = static_cast<double>(explainers.size()) * group_width;
  const double width = g.left + plot_width + 160.0;
  const double height = g.top + g.plot_height + 90.0;
  const double x_end = g.left + plot_width;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n"
      << "  <title>S^I per explanation method</title>\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height) << "\" fill=\"white\"/>\n";

  // Axes and ticks.
  svg << "  <line class=\"axis\" x1=\"" << fmt(g.left) << "\" y1=\"" << fmt(g.y_of(1.0)) << "\" x2=\"" << fmt(g.left)
      << "\" y2=\"" << fmt(g.y_of(0.0)) << "\" stroke=\"black\"/>\n";
  svg << "  <line class=\"axis\" x1=\"" << fmt(g.left) << "\" y1=\"" << fmt(g.y_of(0.0)) << "\" x2=\"" << fmt(x_end)
      << "\" y2=\"" << fmt(g.y_of(0.0)) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    svg << "  <text class=\"tick\" x=\"" << fmt(g.left - 6.0) << "\" y=\"" << fmt(g.y_of(v) + 4.0)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v).substr(0, 4) << "</text>\n";
  }
  svg << "  <text x=\"16\" y=\"" << fmt(g.top + g.plot_height / 2.0) << "\" font-size=\"12\" transform=\"rotate(-90 16 "
      << fmt(g.top + g.plot_height / 2.0) << ")\" text-anchor=\"middle\">S^I</text>\n";

  for (std::size_t e = 0; e < explainers.size(); ++e) {
    const double gx = g.left + static_cast<double>(e) * group_width + g.group_gap / 2.0;
    for (std::size_t a = 0; a < archs.size(); ++a) {
      const auto it = std::find_if(scores.begin(), scores.end(), [&](const DatasetSensitivity& d) {
        return d.explainer == explainers[e] && d.architecture_id == archs[a];
      });
      if (it == scores.end()) continue;
      const double x = gx + static_cast<double>(a) * g.bar_width;
      const double v = std::clamp(it->s_I, 0.0, 1.0);
      svg << "  <rect class=\"bar\" data-explainer=\"" << to_string(explainers[e]) << "\" data-architecture=\""
          << xml_escape(archs[a]) << "\" data-value=\"" << format_double(it->s_I) << "\" x=\"" << fmt(x) << "\" y=\""
          << fmt(g.y_of(v)) << "\" width=\"" << fmt(g.bar_width - 2.0) << "\" height=\"" << fmt(g.plot_height * v)
          << "\" fill=\"" << kPalette[a % kPalette.size()] << "\"/>\n";
      const double cx = x + (g.bar_width - 2.0) / 2.0;
      const double lo = std::clamp(it->ci.lo, 0.0, 1.0), hi = std::clamp(it->ci.hi, 0.0, 1.0);
      svg << "  <line class=\"ci\" x1=\"" << fmt(cx) << "\" y1=\"" << fmt(g.y_of(lo)) << "\" x2=\"" << fmt(cx)
          << "\" y2=\"" << fmt(g.y_of(hi)) << "\" stroke=\"black\"/>\n";
      for (double w : {lo, hi}) {
        svg << "  <line class=\"ci\" x1=\"" << fmt(cx - 3.0) << "\" y1=\"" << fmt(g.y_of(w)) << "\" x2=\""
            << fmt(cx + 3.0) << "\" y2=\"" << fmt(g.y_of(w)) << "\" stroke=\"black\"/>\n";
      }
    }
    svg << "  <text class=\"label\" x=\"" << fmt(gx + static_cast<double>(archs.size()) * g.bar_width / 2.0)
        << "\" y=\"" << fmt(g.y_of(0.0) + 16.0) << "\" font-size=\"10\" text-anchor=\"middle\">"
        << to_string(explainers[e]) << "</text>\n";
  }

  svg << "  <line class=\"threshold\" data-value=\"" << format_double(kSensitivityThreshold) << "\" x1=\""
      << fmt(g.left) << "\" y1=\"" << fmt(g.y_of(kSensitivityThreshold)) << "\" x2=\"" << fmt(x_end) << "\" y2=\""
      << fmt(g.y_of(kSensitivityThreshold)) << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";

  for (std::size_t a = 0; a < archs.size(); ++a) {
    const double ly = g.top + 14.0 * static_cast<double>(a);
    svg << "  <rect class=\"legend\" x=\"" << fmt(x_end + 20.0) << "\" y=\"" << fmt(ly) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[a % kPalette.size()] << "\"/>\n";
    svg << "  <text x=\"" << fmt(x_end + 34.0) << "\" y=\"" << fmt(ly + 9.0) << "\" font-size=\"11\">"
        << xml_escape(archs[a]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string format_coefficient(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string emit_correlation_tables(const SITable& table) {
  if (table.architectures.size() < 3) {
    return "# warning,correlation tables require at least 3 architectures (got " +
           std::to_string(table.architectures.size()) + ")\n";
  }
  const CorrelationTables tables = cross_architecture_correlations(table);
  std::string out;
  for (const CorrelationMatrix* m : {&tables.spearman, &tables.pearson}) {
    if (!out.empty()) out += "\n";
    out += std::string("# ") + to_string(m->method) + "\n";
    out += "explainer";
    for (ExplainerId e : m->explainers) out += std::string(",") + to_string(e);
    out += "\n";
    for (std::size_t i = 0; i < m->explainers.size(); ++i) {
      out += to_string(m->explainers[i]);
      for (std::size_t j = 0; j < m->explainers.size(); ++j) {
        out += ",";
        const auto& cell = m->cells[i][j];
        if (i == j) {
          out += "1";
        } else if (!cell) {
          out += "undefined";
        } else {
          out += format_coefficient(cell->coefficient) + " (" + significance_stars(cell->p_value) + ")";
        }
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<std::filesystem::path> export_saliency_gallery(const ArchitectureReport& report,
                                                           const std::vector<std::string>& image_ids,
                                                           const std::filesystem::path& directory) {
  for (const std::string& id : image_ids) {
    if (std::find(report.image_ids.begin(), report.image_ids.end(), id) == report.image_ids.end()) {
      throw ValidationError("gallery: unknown image id '" + id + "'");
    }
  }
  std::filesystem::create_directories(directory);
  auto file_tag = [](std::string tag) {
    std::replace(tag.begin(), tag.end(), ':', '-');
    return tag;
  };
  std::vector<std::filesystem::path> written;
  auto emit = [&](const SaliencyMap& m) {
    if (std::find(image_ids.begin(), image_ids.end(), m.image_id) == image_ids.end()) return;
    const auto path = directory / (report.architecture_id + "__" + m.image_id + "__" + to_string(m.explainer) + "__" +
                                   file_tag(m.model_tag) + ".pgm");
    write_pgm(path, m.normalized);
    written.push_back(path);
  };
  for (const SaliencyMap& m : report.original_maps) emit(m);
  for (const SaliencyMap& m : report.randomized_maps) emit(m);
  return written;
}

}  // namespace ipr
