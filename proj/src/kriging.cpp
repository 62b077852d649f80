#include "focus/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "focus/error.hpp"

namespace focus::baselines {

double VariogramModel::gamma(double h) const {
  if (h <= 0.0) return 0.0;
  if (h >= range) return sill;
  const double r = h / range;
  return nugget + (sill - nugget) * (1.5 * r - 0.5 * r * r * r);
}

double VariogramModel::covariance(double h) const { return sill - gamma(h); }

void VariogramModel::validate() const {
  if (!(nugget >= 0.0) || !(sill >= nugget) || !(range > 0.0)) {
    throw ValidationError("variogram needs nugget >= 0, sill >= nugget, range > 0");
  }
}

std::vector<VariogramBin> empirical_semivariogram(std::span<const Coord> points, std::span<const double> values,
                                                  std::span<const double> edges) {
  if (points.size() != values.size()) throw ValidationError("semivariogram: points and values differ in length");
  if (points.size() < 2) throw ValidationError("semivariogram: need at least two points");
  if (edges.size() < 2) throw ValidationError("semivariogram: need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw ValidationError("semivariogram: bin edges must increase");
  }
  const std::size_t nb = edges.size() - 1;
  std::vector<double> sq(nb, 0.0), dist(nb, 0.0);
  std::vector<std::size_t> count(nb, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double h = std::hypot(points[i].easting - points[j].easting, points[i].northing - points[j].northing);
      if (h < edges.front() || h >= edges.back()) continue;
      const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), h) - edges.begin() - 1);
      const double d = values[i] - values[j];
      sq[b] += d * d;
      dist[b] += h;
      ++count[b];
    }
  }
  std::vector<VariogramBin> bins(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    bins[b].pairs = count[b];
    if (count[b]) {
      bins[b].semivariance = sq[b] / (2.0 * static_cast<double>(count[b]));
      bins[b].lag = dist[b] / static_cast<double>(count[b]);
    } else {
      bins[b].lag = 0.5 * (edges[b] + edges[b + 1]);
    }
  }
  return bins;
}

double weighted_sse(const VariogramModel& model, std::span<const VariogramBin> bins) {
  double s = 0.0;
  for (const auto& b : bins) {
    if (!b.pairs) continue;
    const double r = model.gamma(b.lag) - b.semivariance;
    s += static_cast<double>(b.pairs) * r * r;
  }
  return s;
}

namespace {

/// Best (nugget, partial sill) for a fixed range: the model is linear in
/// both, so this is a 2x2 weighted least squares with nonnegativity.
VariogramModel fit_for_range(std::span<const VariogramBin> bins, double range) {
  // gamma = nugget * 1 + psill * f(h), f = spherical shape (1 beyond range).
  double s11 = 0, s12 = 0, s22 = 0, t1 = 0, t2 = 0;
  for (const auto& b : bins) {
    if (!b.pairs) continue;
    const double w = static_cast<double>(b.pairs);
    const double r = b.lag / range;
    const double f = b.lag >= range ? 1.0 : 1.5 * r - 0.5 * r * r * r;
    s11 += w;
    s12 += w * f;
    s22 += w * f * f;
    t1 += w * b.semivariance;
    t2 += w * f * b.semivariance;
  }
  double nugget = 0.0;
  double psill = 0.0;
  const double det = s11 * s22 - s12 * s12;
  if (std::abs(det) > 1e-12 * std::max(1.0, s11 * s22)) {
    nugget = (s22 * t1 - s12 * t2) / det;
    psill = (s11 * t2 - s12 * t1) / det;
  }
  if (!(nugget >= 0.0) || !(psill >= 0.0) || std::abs(det) <= 1e-12 * std::max(1.0, s11 * s22)) {
    // Boundary solutions: pure structured or pure nugget.
    const double psill_only = s22 > 0 ? std::max(0.0, t2 / s22) : 0.0;
    const double nugget_only = std::max(0.0, t1 / s11);
    VariogramModel a{0.0, psill_only, range};
    VariogramModel b{nugget_only, nugget_only, range};
    return weighted_sse(a, bins) <= weighted_sse(b, bins) ? a : b;
  }
  return {nugget, nugget + psill, range};
}

}  // namespace

VariogramModel fit_spherical(std::span<const VariogramBin> bins) {
  std::size_t nonempty = 0;
  double max_lag = 0.0;
  double min_lag = std::numeric_limits<double>::infinity();
  bool all_zero = true;
  for (const auto& b : bins) {
    if (!b.pairs) continue;
    ++nonempty;
    max_lag = std::max(max_lag, b.lag);
    if (b.lag > 0.0) min_lag = std::min(min_lag, b.lag);
    all_zero = all_zero && b.semivariance == 0.0;
  }
  if (nonempty < 3) throw ValidationError("fit_spherical: need at least three nonempty bins");
  if (!(max_lag > 0.0)) throw ValidationError("fit_spherical: all lags are zero");
  if (all_zero) return {0.0, 0.0, max_lag};
  if (!std::isfinite(min_lag)) min_lag = max_lag;

  // Log-spaced scan over the range, then golden-section refinement around
  // the best grid point.
  const double lo = 0.25 * min_lag;
  const double hi = 2.0 * max_lag;
  constexpr int kGrid = 400;
  auto sse_at = [&](double a) { return weighted_sse(fit_for_range(bins, a), bins); };
  std::vector<double> grid(kGrid);
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kGrid - 1));
    const double s = sse_at(grid[i]);
    if (s < best_sse) {
      best_sse = s;
      best = i;
    }
  }
  double a = grid[std::max(0, best - 1)];
  double b = grid[std::min(kGrid - 1, best + 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = sse_at(x1);
  double f2 = sse_at(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * b; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = sse_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = sse_at(x2);
    }
  }
  VariogramModel refined = fit_for_range(bins, 0.5 * (a + b));
  VariogramModel grid_best = fit_for_range(bins, grid[best]);
  return weighted_sse(refined, bins) <= weighted_sse(grid_best, bins) ? refined : grid_best;
}

// ---------------------------------------------------------------------------

OrdinaryKriging::OrdinaryKriging(std::vector<Coord> points, std::vector<double> values, VariogramModel model)
    : points_(std::move(points)), values_(std::move(values)), model_(model) {
  model_.validate();
  if (points_.empty()) throw ValidationError("kriging: need at least one training point");
  if (points_.size() != values_.size()) throw ValidationError("kriging: points and values differ in length");
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::MatrixXd a(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = std::hypot(points_[i].easting - points_[j].easting, points_[i].northing - points_[j].northing);
      a(i, j) = model_.covariance(h);
    }
    a(i, n) = 1.0;
    a(n, i) = 1.0;
  }
  a(n, n) = 0.0;
  // Rank check first: PartialPivLU does not report singularity.
  Eigen::FullPivLU<Eigen::MatrixXd> full(a);
  full.setThreshold(1e-12);
  if (!full.isInvertible()) {
    throw SingularSystemError(
        "kriging: singular system (duplicate points with zero nugget?); add a nugget or jitter the points");
  }
  lu_.compute(a);
}

KrigingEstimate OrdinaryKriging::predict(Coord q) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::VectorXd rhs(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs(i) = model_.covariance(std::hypot(points_[i].easting - q.easting, points_[i].northing - q.northing));
  }
  rhs(n) = 1.0;
  const Eigen::VectorXd sol = lu_.solve(rhs);
  KrigingEstimate out;
  out.weights.resize(static_cast<std::size_t>(n));
  double c0w = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.weights[i] = sol(i);
    out.estimate += sol(i) * values_[i];
    c0w += sol(i) * rhs(i);
  }
  out.lagrange = sol(n);
  // sigma^2 = C(0) - w.c0 - mu with the system written as [C 1; 1 0][w; mu].
  out.variance = std::max(0.0, model_.covariance(0.0) - c0w - out.lagrange);
  return out;
}

KrigingEstimate kriging_predict(std::span<const Coord> points, std::span<const double> values,
                                const VariogramModel& model, Coord query) {
  return OrdinaryKriging({points.begin(), points.end()}, {values.begin(), values.end()}, model).predict(query);
}

void write_variogram_json(const VariogramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  nlohmann::json j{{"nugget", model.nugget}, {"sill", model.sill}, {"range", model.range}, {"form", "spherical"}};
  out << j.dump(2) << '\n';
}

VariogramModel read_variogram_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("form").get<std::string>() != "spherical") throw FormatError("variogram form must be spherical");
    VariogramModel m{j.at("nugget").get<double>(), j.at("sill").get<double>(), j.at("range").get<double>()};
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("variogram JSON: ") + e.what());
  }
}

}  // namespace focus::baselines
