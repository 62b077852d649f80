#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "focus/labeling.hpp"
#include "focus/raster.hpp"

namespace focus::synth {

struct WorldSpec {
  std::uint64_t seed = 42;
  int extent = 1024;  // cells per side
  double cell_size = 30.0;
  Coord origin{500000.0, 4500000.0};
  int n_dischargers = 120;
  int n_industries = 3;
  double urban_fraction = 0.12;
  double water_fraction = 0.10;
  double relief = 150.0;  // meters of noise relief
  double tilt = 60.0;     // meters of north-south fall
  double carve_depth = 2.0;

  /// Throws ValidationError for infeasible settings.
  void validate() const;
  bool operator==(const WorldSpec&) const = default;
};

struct World {
  WorldSpec spec;
  RasterGrid dem;  // carved, depression-filled
  RasterGrid landcover;
  RasterGrid soil;
  RasterGrid slope;  // percent
  RasterGrid flowdir;
  RasterGrid accumulation;
  std::vector<Coord> dischargers;
  std::vector<int> discharger_industry;
  std::vector<RasterGrid> distance;  // one per industry
  RasterGrid truth;                  // simulated concentration

  /// Channels a patch is cut from: landcover, flowdir, dist_<k>, dem, soil,
  /// slope.
  std::vector<Channel> channels(bool include_dem = true) const;
  bool operator==(const World&) const = default;
};

/// Deterministic world: value-noise DEM, depression filling, D8 routing,
/// water along the highest-accumulation cells, noise-driven land cover,
/// dischargers placed by developed density, truth from the transport
/// simulator.
World generate_world(const WorldSpec& spec);

/// Seeded multi-octave value noise in [0, 1].
double value_noise(std::uint64_t seed, double x, double y, double period, int octaves);

/// Raises pits so every cell drains to the grid edge (epsilon priority flood).
RasterGrid fill_depressions(const RasterGrid& dem, double epsilon = 1e-3);

/// Slope in percent from central differences.
RasterGrid slope_percent(const RasterGrid& dem);

/// Worlds persist as one FPS1 stack with extra "dischargers" (industry + 1
/// at discharger cells) and "truth" channels.
void write_world(const World& world, const std::filesystem::path& path);
World read_world(const std::filesystem::path& path);

struct SampleConfig {
  int n = 866;
  double positive_fraction = 0.895;
  /// Cells closer than this to the edge are never sampled.
  int margin = 0;
  int year = 2023;
  std::uint64_t seed = 42;
  /// Log-normal noise (sigma) applied to the truth before ranking, i.e. label
  /// corruption relative to the simulated field.
  double label_noise = 0.0;
};

/// Distinct water cells sampled uniformly; the lowest-truth share becomes
/// label 0 with exact counts; per-compound concentrations reproduce each
/// label through the hazard index.
std::vector<labeling::SamplePoint> sample_points(const World& world, const SampleConfig& config);

struct SplitResult {
  std::vector<int> assignment;  // split index per sample
  std::vector<std::vector<std::size_t>> members;
};

/// Groups samples whose size x size windows intersect (union-find) and
/// assigns whole groups, largest first, to the split furthest below its
/// target. Throws ValidationError when a split with a positive fraction ends
/// up empty.
SplitResult disjoint_split(std::span<const labeling::SamplePoint> samples, const RasterGrid& reference, int size,
                           std::span<const double> fractions);

/// Pixel windows of two samples intersect.
bool windows_overlap(GridIndex a, GridIndex b, int size);

}  // namespace focus::synth
