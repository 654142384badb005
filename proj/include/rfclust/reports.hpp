#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfclust/dataset.hpp"
#include "rfclust/harness.hpp"

namespace rfclust {

inline constexpr int kReportSchemaVersion = 1;

struct ReportOptions {
  bool svg = true;
  bool save_models = false;  // folds/fold_<id>.model.json
};

// Writes summary.csv, heatmap.csv, weights.csv, similarity_pairs.csv,
// folds/fold_<id>.json and, if requested, heatmap.svg / weights.svg.
// Nothing written depends on wall-clock time or absolute paths.
void emit_reports(const RunSummary& summary, const Dataset& dataset,
                  const std::filesystem::path& out_dir, const ReportOptions& options = {});

// Data behind the per-problem error heatmap.
struct HeatmapRow {
  std::string variant;
  std::optional<double> threshold;  // empty for rf
  std::vector<double> errors;
  std::vector<std::optional<std::size_t>> k;  // empty for rf
};

struct HeatmapData {
  std::string algorithm;
  std::vector<std::string> problem_ids;
  std::vector<HeatmapRow> rows;
};

struct WeightRecord {
  std::string fold;
  std::string feature;
  std::string method;
  double weight = 0.0;
};

HeatmapData heatmap_from_summary(const RunSummary& summary);
std::vector<WeightRecord> weights_from_summary(const RunSummary& summary);

void write_heatmap_csv(std::ostream& out, const HeatmapData& data);
void write_weights_csv(std::ostream& out, const std::vector<WeightRecord>& records);
HeatmapData read_heatmap_csv(const std::filesystem::path& path);
std::vector<WeightRecord> read_weights_csv(const std::filesystem::path& path);

std::string render_heatmap_svg(const HeatmapData& data);
// One box per (feature, method) over folds.
std::string render_weights_svg(const std::vector<WeightRecord>& records);

// Regenerates the SVG files of out_dir from its CSVs.
void regenerate_svgs(const std::filesystem::path& out_dir);

std::string fold_file_stem(std::string_view problem_id);

}  // namespace rfclust
