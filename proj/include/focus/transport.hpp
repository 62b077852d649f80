#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "focus/raster.hpp"

namespace focus::baselines {

/// HRU land classes used by the lookup table.
enum class HruLand { Water, Developed, Cropland, Natural };
std::string_view hru_land_name(HruLand land);
HruLand hru_land_of(int landcover_code);

struct HruKey {
  HruLand land = HruLand::Natural;
  int soil = 0;
  int slope_band = 0;
  auto operator<=>(const HruKey&) const = default;
};

struct HruParams {
  double infiltration = 0.0;
  double runoff = 0.0;
};

/// Hydrologic response unit lookup: (land, soil, slope band) -> fractions.
class HruTable {
 public:
  void set(HruKey key, HruParams params);
  /// Throws ValidationError naming the key when absent.
  const HruParams& lookup(HruKey key) const;
  std::size_t size() const { return rows_.size(); }
  const std::map<HruKey, HruParams>& rows() const { return rows_; }

  /// 4 land classes x 3 slope bands, soil class 0.
  static HruTable defaults();
  /// CSV columns: landcover,soil,slope_band,infiltration,runoff
  static HruTable parse_csv(const std::string& text);
  static HruTable load_csv(const std::filesystem::path& path);
  std::string format_csv() const;

 private:
  std::map<HruKey, HruParams> rows_;
};

struct TransportParams {
  int max_steps = 200;
  double tolerance = 1e-6;
  double discharger_value = 100.0;
  double urban_default = 10.0;
  double cropland_default = 5.0;
  double natural_default = 1.0;
  double water_default = 0.0;
  /// Slope (percent) band edges: band 0 below the first edge, band 2 at or
  /// above the second.
  double slope_edge_low = 2.0;
  double slope_edge_high = 8.0;
};

struct MassLedger {
  double in_cells = 0.0;
  double infiltrated = 0.0;
  double exited = 0.0;
  double total() const { return in_cells + infiltrated + exited; }
};

struct TransportResult {
  RasterGrid concentration;
  RasterGrid exposure;  // concentration summed over completed steps
  int steps = 0;
  bool converged = false;
  double initial_mass = 0.0;
  std::vector<MassLedger> ledger;  // one entry per completed step
};

int slope_band(double slope_percent, const TransportParams& params);

/// Accumulation scaling in [0, 1]: log(2 + a) / log(2 + a_max), i.e. the
/// log of the contributing area counting the cell itself.
double accumulation_scale(double accumulation, double max_accumulation);

/// Initial concentrations: discharger cells get params.discharger_value,
/// others their land-cover default.
RasterGrid initial_concentration(const RasterGrid& landcover, const RasterGrid& dischargers,
                                 const TransportParams& params);

/// Iterated mass transfer along D8 directions. Each step every cell loses
/// mass * infiltration, sends mass * runoff * s(accum) downstream (or out of
/// the grid), and keeps the rest. Stops after max_steps or once the largest
/// per-cell change falls below the tolerance.
TransportResult transport_simulate(const RasterGrid& initial, const RasterGrid& landcover, const RasterGrid& soil,
                                   const RasterGrid& slope, const RasterGrid& dirs, const RasterGrid& accumulation,
                                   const HruTable& hru, const TransportParams& params);

/// Convenience overload building the initial state from a patch with
/// landcover / soil / slope / flowdir channels and a discharger mask.
TransportResult transport_simulate(const PatchStack& patch, const RasterGrid& dischargers, const HruTable& hru,
                                   const TransportParams& params);

/// Pooled median over all rasters (mean of the middle two for even counts).
double pooled_median(std::span<const RasterGrid> rasters);

/// Cells >= the pooled median become 1, others 0.
std::vector<RasterGrid> threshold_by_median(std::span<const RasterGrid> rasters);

}  // namespace focus::baselines
