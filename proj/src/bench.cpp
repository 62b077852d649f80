#include "focus/bench.hpp"

#include <chrono>
#include <cmath>

#include "focus/error.hpp"
#include "focus/model.hpp"

namespace focus::eval {

std::string_view bench_mode_name(BenchMode mode) {
  return mode == BenchMode::PatchPipeline ? "patch_pipeline" : "per_point_aggregation";
}

BenchMode parse_bench_mode(std::string_view name) {
  if (name == "patch_pipeline") return BenchMode::PatchPipeline;
  if (name == "per_point_aggregation") return BenchMode::PerPointAggregation;
  throw ValidationError("unknown benchmark mode '" + std::string(name) + "'");
}

namespace {

double patch_pipeline(std::span<const Channel> world, std::span<const Coord> points, int size) {
  double checksum = 0.0;
  PatchStack first = extract_patch(world, points.front(), size);
  const auto layout = model::FeatureLayout::from_patch(first);
  for (const Coord& p : points) {
    const PatchStack patch = extract_patch(world, p, size);
    const nn::Tensor t = model::encode_features(patch, layout);
    for (double v : t.data) checksum += v;
  }
  return checksum;
}

double per_point_aggregation(std::span<const Channel> world, std::span<const Coord> points,
                             const std::vector<double>& radii) {
  double checksum = 0.0;
  for (const Coord& p : points) {
    for (const Channel& ch : world) {
      const RasterGrid& g = ch.grid;
      const auto ix = g.locate(p);
      if (!ix) throw OutOfBoundsError("benchmark point outside channel '" + ch.name + "'");
      for (double radius : radii) {
        const int rc = static_cast<int>(std::ceil(radius / g.cell_size()));
        const double r2 = (radius / g.cell_size()) * (radius / g.cell_size());
        double sum = 0.0;
        long count = 0;
        std::vector<long> groups(landcover::kGroupCount, 0);
        for (int r = std::max(0, ix->row - rc); r <= std::min(g.height() - 1, ix->row + rc); ++r) {
          for (int c = std::max(0, ix->col - rc); c <= std::min(g.width() - 1, ix->col + rc); ++c) {
            const double dr = r - ix->row;
            const double dc = c - ix->col;
            if (dr * dr + dc * dc > r2) continue;
            const double v = g.at(r, c);
            if (g.is_nodata(v)) continue;
            ++count;
            if (ch.role == ChannelRole::LandCover) {
              ++groups[static_cast<int>(landcover::group_of(static_cast<int>(v)))];
            } else {
              sum += v;
            }
          }
        }
        if (!count) continue;
        if (ch.role == ChannelRole::LandCover) {
          for (long n : groups) checksum += static_cast<double>(n) / count;
        } else {
          checksum += sum / count;
        }
      }
    }
  }
  return checksum;
}

}  // namespace

TimingReport timing_benchmark(std::span<const Channel> world, std::span<const Coord> points, BenchMode mode,
                              const BenchConfig& config) {
  if (points.empty()) throw ValidationError("timing_benchmark: no points");
  if (config.runs < 1) throw ValidationError("timing_benchmark: runs must be positive");
  TimingReport rep;
  rep.mode = mode;
  rep.points = points.size();
  for (int run = 0; run < config.runs; ++run) {
    const auto t0 = std::chrono::steady_clock::now();
    const double sum = mode == BenchMode::PatchPipeline ? patch_pipeline(world, points, config.patch_size)
                                                        : per_point_aggregation(world, points, config.buffer_radii);
    const auto t1 = std::chrono::steady_clock::now();
    rep.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    if (run == 0) {
      rep.checksum = sum;
    } else if (sum != rep.checksum) {
      throw NumericError("timing_benchmark: outputs differ between runs");
    }
  }
  for (double s : rep.seconds) rep.mean += s / config.runs;
  for (double s : rep.seconds) rep.stddev += (s - rep.mean) * (s - rep.mean) / config.runs;
  rep.stddev = std::sqrt(rep.stddev);
  return rep;
}

}  // namespace focus::eval
