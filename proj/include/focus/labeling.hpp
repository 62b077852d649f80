#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "focus/raster.hpp"

namespace focus::labeling {

struct Compound {
  std::string name;
  double concentration = 0.0;  // ng/g or ng/L
  double threshold = 1.0;      // advisory threshold, same units
  double mdl = 0.0;            // method detection limit, same units

  /// Reported below the detection limit.
  bool non_detect() const { return concentration < mdl; }
};

struct SamplePoint {
  std::string id;
  Coord location{};
  int year = 0;
  std::vector<Compound> compounds;
  int label = 0;
};

enum class LabelMode { Binary, Ternary };

/// Label value carried by non-water cells of a LabelMask. Binary masks use
/// 2; ternary masks need 2 for the "high" class and use 3 instead.
constexpr int non_water_label(LabelMode mode) { return mode == LabelMode::Binary ? 2 : 3; }
constexpr int class_count(LabelMode mode) { return mode == LabelMode::Binary ? 2 : 3; }

/// Sum of concentration-to-threshold ratios.
double hazard_index(std::span<const Compound> compounds);

/// Binary: 1 iff hi >= 1. Ternary: 0 below 1, 1 on [1, 1000], 2 above 1000.
int classify_sample(double hi, LabelMode mode);

/// Relabels every sample from its compounds.
void assign_labels(std::span<SamplePoint> samples, LabelMode mode);

/// Samples whose location falls inside `grid`.
std::vector<SamplePoint> samples_inside(std::span<const SamplePoint> samples, const RasterGrid& grid);

/// Dense label mask: non-water cells take non_water_label(mode), every water
/// cell takes the label of its nearest in-patch sample (ties to the earlier
/// sample).
RasterGrid expand_ground_truth(const PatchStack& patch, std::span<const SamplePoint> samples,
                               LabelMode mode = LabelMode::Binary);

// ---------------------------------------------------------------------------
// Noise mask

struct NoiseWeights {
  double dischargers = 0.4;
  double landcover = 0.2;
  double sample_dist = 0.1;
  double downstream = 0.3;

  /// Nonnegative and summing to one within 1e-9.
  void validate() const;
  bool operator==(const NoiseWeights&) const = default;
};

struct NoiseParams {
  double discharger_lambda = 1000.0;  // meters
  double sample_lambda = 500.0;       // meters
  int landcover_radius = 5;           // cells
  double downstream_neutral = 0.5;
};

/// Positive hypothesis for the component probabilities: any label >= 1.
constexpr bool is_positive(int label) { return label >= 1; }

double p_dischargers(const PatchStack& patch, GridIndex cell, int label, double decay_lambda);
double p_landcover(const PatchStack& patch, GridIndex cell, int label, int radius);
double p_sample_dist(const PatchStack& patch, GridIndex cell, std::span<const SamplePoint> samples,
                     double decay_lambda);

/// Cells on the downstream traces of positive and negative samples.
struct DownstreamEvidence {
  RasterGrid positive;
  RasterGrid negative;
};

DownstreamEvidence downstream_evidence(const RasterGrid& dirs, std::span<const SamplePoint> samples);
double p_downstream(const DownstreamEvidence& evidence, GridIndex cell, int cell_label, double neutral = 0.5);
double p_downstream(const PatchStack& patch, GridIndex cell, int cell_label, std::span<const SamplePoint> samples,
                    const RasterGrid& dirs);

/// Multiplier applied to a label-0 sample cell: the minimum of
/// min(1, threshold / MDL) over its non-detected compounds (1 when none).
double mdl_multiplier(const SamplePoint& sample);

/// Convex combination of the four components.
double combine(const NoiseWeights& w, double dischargers, double landcover, double sample_dist, double downstream);

/// Per-cell label confidence on water cells, nodata elsewhere.
RasterGrid noise_mask(const PatchStack& patch, const RasterGrid& label_mask, std::span<const SamplePoint> samples,
                      const NoiseWeights& weights, const NoiseParams& params = {},
                      LabelMode mode = LabelMode::Binary);

/// Fraction of developed / undeveloped cells in each clipped (2r+1)^2 window.
struct NeighborhoodFractions {
  std::vector<double> developed;
  std::vector<double> undeveloped;
};
NeighborhoodFractions landcover_fractions(const RasterGrid& landcover, int radius);

/// Minimum over the patch's distance channels, per cell.
std::vector<double> min_discharger_distance(const PatchStack& patch);

// ---------------------------------------------------------------------------
// Samples CSV: id,easting,northing,year,compound,concentration,threshold,mdl

std::vector<SamplePoint> read_samples_csv(const std::filesystem::path& path, LabelMode mode = LabelMode::Binary);
std::vector<SamplePoint> parse_samples_csv(const std::string& text, LabelMode mode = LabelMode::Binary);
void write_samples_csv(std::span<const SamplePoint> samples, const std::filesystem::path& path);
std::string format_samples_csv(std::span<const SamplePoint> samples);

}  // namespace focus::labeling
