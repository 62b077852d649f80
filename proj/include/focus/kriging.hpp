#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "focus/raster.hpp"

namespace focus::baselines {

/// Spherical variogram: nugget + (sill - nugget)(1.5 h/a - 0.5 (h/a)^3) for
/// 0 < h < a, sill beyond the range, 0 at h = 0.
struct VariogramModel {
  double nugget = 0.0;
  double sill = 1.0;
  double range = 1.0;

  double gamma(double h) const;
  /// sill - gamma(h)
  double covariance(double h) const;
  void validate() const;
};

struct VariogramBin {
  double lag = 0.0;          // mean pair distance in the bin (bin midpoint when empty)
  double semivariance = 0.0;
  std::size_t pairs = 0;
};

/// Half mean squared difference per distance bin [edge_i, edge_{i+1}).
std::vector<VariogramBin> empirical_semivariogram(std::span<const Coord> points, std::span<const double> values,
                                                  std::span<const double> bin_edges);

/// Pair-count-weighted least squares fit of the spherical form.
VariogramModel fit_spherical(std::span<const VariogramBin> bins);

/// Weighted SSE of a model against the bins (weights = pair counts).
double weighted_sse(const VariogramModel& model, std::span<const VariogramBin> bins);

struct KrigingEstimate {
  double estimate = 0.0;
  double variance = 0.0;
  std::vector<double> weights;
  double lagrange = 0.0;
};

/// Ordinary Kriging with a global neighborhood. The system matrix is factored
/// once; each query costs one solve.
class OrdinaryKriging {
 public:
  OrdinaryKriging(std::vector<Coord> points, std::vector<double> values, VariogramModel model);

  KrigingEstimate predict(Coord query) const;
  /// Binary class: estimate >= threshold.
  int classify(Coord query, double threshold = 0.5) const { return predict(query).estimate >= threshold ? 1 : 0; }

  const VariogramModel& model() const { return model_; }

 private:
  std::vector<Coord> points_;
  std::vector<double> values_;
  VariogramModel model_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// One-shot convenience wrapper around OrdinaryKriging.
KrigingEstimate kriging_predict(std::span<const Coord> points, std::span<const double> values,
                                const VariogramModel& model, Coord query);

void write_variogram_json(const VariogramModel& model, const std::filesystem::path& path);
VariogramModel read_variogram_json(const std::filesystem::path& path);

}  // namespace focus::baselines
