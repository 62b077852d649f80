#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "focus/raster.hpp"

namespace focus::eval {

enum class BenchMode { PatchPipeline, PerPointAggregation };
std::string_view bench_mode_name(BenchMode mode);
BenchMode parse_bench_mode(std::string_view name);

struct BenchConfig {
  int runs = 10;
  int patch_size = 64;
  /// Buffer radii (meters) of the per-point aggregation baseline.
  std::vector<double> buffer_radii = {300.0, 1000.0, 2000.0};
};

struct TimingReport {
  BenchMode mode = BenchMode::PatchPipeline;
  std::vector<double> seconds;  // one per run
  double mean = 0.0;
  double stddev = 0.0;  // population
  int threads = 1;
  std::size_t points = 0;
  /// Sum over the extracted features; identical across runs for a fixed world.
  double checksum = 0.0;
};

/// Times feature extraction for every point, single-threaded.
/// PatchPipeline cuts a patch per point and one-hot encodes it;
/// PerPointAggregation computes buffer means of every continuous channel and
/// land-cover group shares within each radius, cell by cell.
TimingReport timing_benchmark(std::span<const Channel> world, std::span<const Coord> points, BenchMode mode,
                              const BenchConfig& config = {});

}  // namespace focus::eval
