#pragma once

#include <array>
#include <optional>
#include <vector>

#include "focus/raster.hpp"

namespace focus::hydro {

/// D8 direction codes; 0 marks a sink or flat.
inline constexpr int kEast = 1;
inline constexpr int kSouthEast = 2;
inline constexpr int kSouth = 4;
inline constexpr int kSouthWest = 8;
inline constexpr int kWest = 16;
inline constexpr int kNorthWest = 32;
inline constexpr int kNorth = 64;
inline constexpr int kNorthEast = 128;
inline constexpr int kSink = 0;

struct Step {
  int code;
  int drow;
  int dcol;
};

/// Neighbors in ascending code order, which is also the tie-break order.
inline constexpr std::array<Step, 8> kSteps = {{{kEast, 0, 1},
                                                {kSouthEast, 1, 1},
                                                {kSouth, 1, 0},
                                                {kSouthWest, 1, -1},
                                                {kWest, 0, -1},
                                                {kNorthWest, -1, -1},
                                                {kNorth, -1, 0},
                                                {kNorthEast, -1, 1}}};

bool is_valid_code(int code);
std::optional<Step> step_for(int code);
/// Code mirrored across the north-south axis (E<->W, NE<->NW, SE<->SW).
int mirror_code(int code);

/// Downstream neighbor of a cell, or nullopt for sinks and codes that leave
/// the grid.
std::optional<GridIndex> downstream_of(const RasterGrid& dirs, GridIndex cell);

/// Steepest-descent direction per cell. Ties go to the smallest code;
/// neighbors outside the grid are never chosen.
RasterGrid d8_flow_direction(const RasterGrid& dem);

/// Number of upstream cells draining through each cell (the cell itself
/// excluded). Throws CycleError if the direction graph has a cycle.
RasterGrid flow_accumulation(const RasterGrid& dirs);

/// Ordered cells on the D8 path from `seed`, seed excluded.
std::vector<GridIndex> downstream_path(const RasterGrid& dirs, GridIndex seed);

/// Binary mask of downstream_path().
RasterGrid downstream_mask(const RasterGrid& dirs, GridIndex seed);

/// Throws ValidationError unless every value is a D8 code and no code points
/// outside the grid.
void validate_flow_directions(const RasterGrid& dirs);

/// Recodes cells whose direction leaves the grid to 0. Used on windows cut
/// from a larger direction raster.
RasterGrid clip_outward_directions(RasterGrid dirs);

}  // namespace focus::hydro
