#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/labeling.hpp"
#include "focus/raster.hpp"

namespace focus::eval {

struct ClassMetrics {
  double accuracy = 0.0;
  double iou = 0.0;
  double fscore = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  long support = 0;
};

/// One-vs-rest metrics per class plus their unweighted means. A ratio whose
/// numerator and denominator are both empty (class absent from truth and
/// prediction) counts as 1.
struct MetricReport {
  int classes = 0;
  std::vector<std::vector<long>> confusion;  // [truth][prediction]
  std::vector<ClassMetrics> per_class;
  ClassMetrics macro;
  /// Fraction of all points predicted correctly.
  double overall_accuracy = 0.0;
  long total = 0;
};

MetricReport metrics_from_confusion(const std::vector<std::vector<long>>& confusion);
MetricReport metrics_from_labels(std::span<const int> truth, std::span<const int> prediction, int classes);

/// Confusion counts at sample pixels only. Each sample is scored on the
/// prediction map whose center is nearest to it. Throws ValidationError
/// listing every sample that lies outside all maps or on a non-water cell.
MetricReport sample_point_metrics(std::span<const RasterGrid> label_maps,
                                  std::span<const labeling::SamplePoint> samples,
                                  labeling::LabelMode mode = labeling::LabelMode::Binary);

std::string format_report_csv(const MetricReport& report);
std::string format_report_table(const MetricReport& report);

/// Expected calibration error over equal-width confidence bins.
double ece(std::span<const double> confidences, std::span<const std::uint8_t> correct, int bins = 10);

/// Georeferenced overlap of two grids in pixel coordinates of `a`.
struct Overlap {
  int row0 = 0;
  int col0 = 0;
  int row_shift = 0;  // b row = a row + row_shift
  int col_shift = 0;
  int rows = 0;
  int cols = 0;
};
Overlap overlap_of(const RasterGrid& a, const RasterGrid& b);

/// Share of overlap pixels with equal labels. Pixels where either map holds
/// `ignore` are skipped. Throws ValidationError on an empty overlap.
double consistency_agreement(const RasterGrid& a, const RasterGrid& b, std::optional<double> ignore = std::nullopt);

struct WilcoxonResult {
  int n = 0;  // nonzero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  double w = 0.0;  // min(w_plus, w_minus)
  double p_one_sided = 1.0;
  double p_two_sided = 1.0;
  bool exact = true;
};

/// Paired signed-rank test on a - b with zero differences dropped and
/// average ranks for ties. Exact null distribution for n <= 20, normal
/// approximation with continuity correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// The 24 permutations of (0.4, 0.3, 0.2, 0.1) in lexicographic order.
std::vector<labeling::NoiseWeights> default_weight_grid();

struct GridRow {
  labeling::NoiseWeights weights;
  MetricReport report;
};

using GridHarness = std::function<MetricReport(const labeling::NoiseWeights&)>;

/// Runs the harness per config and returns rows sorted by descending macro
/// F-score (stable, so ties keep input order).
std::vector<GridRow> noise_weight_grid_search(std::span<const labeling::NoiseWeights> configs,
                                              const GridHarness& harness);
std::string format_grid_csv(std::span<const GridRow> rows);
std::string format_grid_table(std::span<const GridRow> rows);

}  // namespace focus::eval
