#include "rfclust/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rfclust/common.hpp"
#include "rfclust/csv.hpp"

namespace rfclust {
namespace fs = std::filesystem;
namespace {

std::string schema_line(std::string_view extra = {}) {
  std::string line = "# schema_version=" + std::to_string(kReportSchemaVersion);
  if (!extra.empty()) line += " " + std::string(extra);
  return line + "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot write " + path.string());
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
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
      default: out.push_back(c);
    }
  }
  return out;
}

// White to red.
std::string heat_color(double fraction) {
  fraction = std::clamp(fraction, 0.0, 1.0);
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - 0.75 * fraction)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#ff%02x%02x", g, g);
  return buf;
}

std::string read_comment_value(const fs::path& path, std::string_view key) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with('#')) break;
    const std::string needle = std::string(key) + "=";
    auto pos = line.find(needle);
    if (pos != std::string::npos) {
      auto end = line.find(' ', pos);
      return line.substr(pos + needle.size(),
                         end == std::string::npos ? std::string::npos : end - pos - needle.size());
    }
  }
  return {};
}

double quantile(std::vector<double> sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string fold_file_stem(std::string_view problem_id) {
  std::string out = "fold_";
  for (char c : problem_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

HeatmapData heatmap_from_summary(const RunSummary& summary) {
  HeatmapData data;
  data.algorithm = summary.config.algorithm;
  data.problem_ids = summary.problem_ids;
  for (const SummaryCell& c : summary.cells) {
    HeatmapRow row;
    row.variant = std::string(variant_name(c.variant));
    row.errors = summary.errors(c.variant, c.threshold);
    if (c.variant != Variant::rf) {
      row.threshold = c.threshold;
      for (std::size_t k : summary.neighbor_counts(c.variant, c.threshold)) row.k.push_back(k);
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

std::vector<WeightRecord> weights_from_summary(const RunSummary& summary) {
  std::vector<WeightRecord> out;
  for (const auto& fold : summary.folds) {
    const std::pair<const char*, const std::optional<ImportanceResult>*> methods[] = {
        {"unsup", &fold.unsupervised}, {"perm", &fold.permutation}};
    for (auto [method, result] : methods) {
      if (!*result) continue;
      const WeightVector& w = (*result)->weights;
      for (std::size_t i = 0; i < w.size(); ++i) {
        out.push_back({fold.test_problem, summary.feature_names[w.feature_indices[i]], method,
                       w.weights[i]});
      }
    }
  }
  return out;
}

void write_heatmap_csv(std::ostream& out, const HeatmapData& data) {
  out << schema_line("algorithm=" + data.algorithm + " cell=error|k");
  std::vector<std::string> header{"variant", "threshold"};
  header.insert(header.end(), data.problem_ids.begin(), data.problem_ids.end());
  csv::write_row(out, header);
  for (const auto& row : data.rows) {
    std::vector<std::string> fields{row.variant,
                                    row.threshold ? format_double(*row.threshold) : ""};
    for (std::size_t i = 0; i < row.errors.size(); ++i) {
      std::string cell = format_double(row.errors[i]);
      if (i < row.k.size() && row.k[i]) cell += "|" + std::to_string(*row.k[i]);
      fields.push_back(std::move(cell));
    }
    csv::write_row(out, fields);
  }
}

void write_weights_csv(std::ostream& out, const std::vector<WeightRecord>& records) {
  out << schema_line();
  out << "fold,feature,method,weight\n";
  for (const auto& r : records) csv::write_row(out, {r.fold, r.feature, r.method, format_double(r.weight)});
}

HeatmapData read_heatmap_csv(const fs::path& path) {
  const csv::Table t = csv::read_file(path);
  if (t.header.size() < 3 || t.header[0] != "variant" || t.header[1] != "threshold") {
    throw ValidationError(path.string() + ": not a heatmap table");
  }
  HeatmapData data;
  data.algorithm = read_comment_value(path, "algorithm");
  data.problem_ids.assign(t.header.begin() + 2, t.header.end());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& fields = t.rows[r];
    if (fields.size() != t.header.size()) {
      throw ValidationError(path.string() + ": line " + std::to_string(t.line_numbers[r]) +
                            " has the wrong number of fields");
    }
    HeatmapRow row;
    row.variant = fields[0];
    if (!fields[1].empty()) row.threshold = csv::parse_double(fields[1]);
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const std::string& cell = fields[c];
      const auto bar = cell.find('|');
      auto err = csv::parse_double(std::string_view(cell).substr(0, bar));
      if (!err) throw ValidationError(path.string() + ": bad cell '" + cell + "'");
      row.errors.push_back(*err);
      if (bar != std::string::npos) {
        row.k.push_back(static_cast<std::size_t>(std::stoul(cell.substr(bar + 1))));
      }
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

std::vector<WeightRecord> read_weights_csv(const fs::path& path) {
  const csv::Table t = csv::read_file(path);
  if (t.header != std::vector<std::string>{"fold", "feature", "method", "weight"}) {
    throw ValidationError(path.string() + ": not a weights table");
  }
  std::vector<WeightRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    auto w = f.size() == 4 ? csv::parse_double(f[3]) : std::nullopt;
    if (!w) {
      throw ValidationError(path.string() + ": malformed line " + std::to_string(t.line_numbers[r]));
    }
    out.push_back({f[0], f[1], f[2], *w});
  }
  return out;
}

std::string render_heatmap_svg(const HeatmapData& data) {
  constexpr int cell_w = 44, cell_h = 34, label_w = 190, top = 40;
  const int width = label_w + cell_w * static_cast<int>(data.problem_ids.size()) + 10;
  const int height = top + cell_h * static_cast<int>(data.rows.size()) + 10;
  double max_err = 0.0;
  for (const auto& row : data.rows) {
    for (double e : row.errors) max_err = std::max(max_err, e);
  }
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s << "<text x=\"4\" y=\"14\" font-size=\"12\">absolute error per problem"
    << (data.algorithm.empty() ? "" : " (" + xml_escape(data.algorithm) + ")") << "</text>\n";
  for (std::size_t c = 0; c < data.problem_ids.size(); ++c) {
    s << "<text x=\"" << label_w + cell_w * static_cast<int>(c) + cell_w / 2 << "\" y=\""
      << top - 6 << "\" text-anchor=\"middle\">" << xml_escape(data.problem_ids[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    const int y = top + cell_h * static_cast<int>(r);
    std::string label = row.variant;
    if (row.threshold) label += " " + fixed(*row.threshold, 2);
    s << "<text x=\"4\" y=\"" << y + cell_h / 2 + 4 << "\">" << xml_escape(label) << "</text>\n";
    for (std::size_t c = 0; c < row.errors.size(); ++c) {
      const int x = label_w + cell_w * static_cast<int>(c);
      // Cells with no neighbors repeat the RF result and stay blank.
      const bool blank = row.threshold && c < row.k.size() && row.k[c] && *row.k[c] == 0;
      const std::string fill = blank ? "#ffffff" : heat_color(max_err > 0 ? row.errors[c] / max_err : 0);
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\""
        << cell_h << "\" fill=\"" << fill << "\" stroke=\"#cccccc\"/>\n";
      if (blank) continue;
      s << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + 14 << "\" text-anchor=\"middle\">"
        << fixed(row.errors[c], 2) << "</text>\n";
      if (c < row.k.size() && row.k[c]) {
        s << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + 27
          << "\" text-anchor=\"middle\" fill=\"#555555\">" << *row.k[c] << "</text>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_weights_svg(const std::vector<WeightRecord>& records) {
  std::vector<std::string> features;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (std::find(features.begin(), features.end(), r.feature) == features.end()) {
      features.push_back(r.feature);
    }
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
    groups[{r.feature, r.method}].push_back(r.weight);
  }
  double max_w = 0.0;
  for (const auto& r : records) max_w = std::max(max_w, r.weight);
  if (max_w <= 0.0) max_w = 1.0;

  constexpr int box_w = 12, plot_h = 240, left = 50, top = 30, bottom = 140;
  const int slot = box_w * static_cast<int>(std::max<std::size_t>(methods.size(), 1)) + 10;
  const int width = left + slot * static_cast<int>(features.size()) + 20;
  const int height = top + plot_h + bottom;
  auto ypos = [&](double w) { return top + plot_h - static_cast<int>(std::lround(w / max_w * plot_h)); };
  static constexpr const char* palette[] = {"#4c78a8", "#f58518", "#54a24b", "#b279a2"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s << "<text x=\"4\" y=\"14\" font-size=\"12\">feature weights over folds</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
    << top + plot_h << "\" stroke=\"#000000\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double w = max_w * tick / 4.0;
    s << "<text x=\"" << left - 4 << "\" y=\"" << ypos(w) + 3 << "\" text-anchor=\"end\">"
      << fixed(w, 3) << "</text>\n";
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    s << "<rect x=\"" << width - 90 << "\" y=\"" << 6 + 12 * static_cast<int>(m)
      << "\" width=\"8\" height=\"8\" fill=\"" << palette[m % 4] << "\"/><text x=\""
      << width - 78 << "\" y=\"" << 14 + 12 * static_cast<int>(m) << "\">"
      << xml_escape(methods[m]) << "</text>\n";
  }
  for (std::size_t f = 0; f < features.size(); ++f) {
    const int x0 = left + 10 + slot * static_cast<int>(f);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto it = groups.find({features[f], methods[m]});
      if (it == groups.end()) continue;
      std::vector<double> v = it->second;
      std::sort(v.begin(), v.end());
      const int x = x0 + box_w * static_cast<int>(m);
      const int q1 = ypos(quantile(v, 0.25)), q3 = ypos(quantile(v, 0.75));
      const int med = ypos(quantile(v, 0.5));
      s << "<line x1=\"" << x + box_w / 2 << "\" y1=\"" << ypos(v.back()) << "\" x2=\""
        << x + box_w / 2 << "\" y2=\"" << ypos(v.front()) << "\" stroke=\"#333333\"/>\n";
      s << "<rect x=\"" << x + 1 << "\" y=\"" << q3 << "\" width=\"" << box_w - 2
        << "\" height=\"" << std::max(1, q1 - q3) << "\" fill=\"" << palette[m % 4]
        << "\" stroke=\"#333333\"/>\n";
      s << "<line x1=\"" << x + 1 << "\" y1=\"" << med << "\" x2=\"" << x + box_w - 1
        << "\" y2=\"" << med << "\" stroke=\"#000000\"/>\n";
    }
    s << "<text transform=\"translate(" << x0 + 4 << "," << top + plot_h + 8
      << ") rotate(60)\">" << xml_escape(features[f]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void regenerate_svgs(const fs::path& out_dir) {
  const fs::path heatmap = out_dir / "heatmap.csv";
  const fs::path weights = out_dir / "weights.csv";
  if (!fs::exists(heatmap)) throw ValidationError("missing " + heatmap.string());
  open_out(out_dir / "heatmap.svg") << render_heatmap_svg(read_heatmap_csv(heatmap));
  if (fs::exists(weights)) {
    const auto records = read_weights_csv(weights);
    if (!records.empty()) open_out(out_dir / "weights.svg") << render_weights_svg(records);
  }
}

void emit_reports(const RunSummary& summary, const Dataset& dataset, const fs::path& out_dir,
                  const ReportOptions& options) {
  std::error_code ec;
  fs::create_directories(out_dir / "folds", ec);
  if (ec) throw ComputeError("cannot create " + (out_dir / "folds").string() + ": " + ec.message());

  {
    auto out = open_out(out_dir / "summary.csv");
    out << schema_line("metric=mae");
    csv::write_row(out, {"model", "threshold", summary.config.algorithm});
    for (const SummaryCell& c : summary.cells) {
      csv::write_row(out, {std::string(variant_label(c.variant)),
                           c.variant == Variant::rf ? "" : format_double(c.threshold),
                           format_double(c.mae)});
    }
  }

  const HeatmapData heatmap = heatmap_from_summary(summary);
  {
    auto out = open_out(out_dir / "heatmap.csv");
    write_heatmap_csv(out, heatmap);
  }

  const std::vector<WeightRecord> weights = weights_from_summary(summary);
  {
    auto out = open_out(out_dir / "weights.csv");
    write_weights_csv(out, weights);
  }

  {
    auto out = open_out(out_dir / "similarity_pairs.csv");
    out << schema_line();
    out << "fold,train_problem,method,similarity,abs_performance_diff\n";
    for (const auto& fold : summary.folds) {
      for (const auto& p : fold.similarity_pairs) {
        csv::write_row(out, {fold.test_problem, p.train_problem, p.method,
                             p.similarity ? format_double(*p.similarity) : "",
                             format_double(p.abs_performance_diff)});
      }
    }
  }

  for (const auto& fold : summary.folds) {
    const std::string stem = fold_file_stem(fold.test_problem);
    open_out(out_dir / "folds" / (stem + ".json"))
        << fold_result_to_json(fold, dataset, summary.config).dump(2) << '\n';
    if (options.save_models) {
      open_out(out_dir / "folds" / (stem + ".model.json")) << forest_to_json(fold.model).dump() << '\n';
    }
  }

  if (options.svg) {
    open_out(out_dir / "heatmap.svg") << render_heatmap_svg(heatmap);
    if (!weights.empty()) open_out(out_dir / "weights.svg") << render_weights_svg(weights);
  }
}

}  // namespace rfclust
