#pragma once

#include <span>

#include "focus/labeling.hpp"
#include "focus/raster.hpp"

namespace focus::baselines {

struct RuleParams {
  labeling::NoiseWeights weights{};
  labeling::NoiseParams noise{};
  double threshold = 0.5;
};

struct RulePrediction {
  RasterGrid probability;  // nodata off water
  RasterGrid labels;       // 0/1 on water, 2 elsewhere
};

/// Contamination probability under the positive hypothesis from the
/// discharger, land-cover and downstream components, renormalized by their
/// weights; downstream evidence comes from `known` samples and is neutral
/// elsewhere. Water cells at or above the threshold are predicted 1.
RulePrediction rule_based_predict(const PatchStack& patch, std::span<const labeling::SamplePoint> known,
                                  const RuleParams& params);

/// Same prediction for the size x size window at `center`, computed on a
/// window widened by the land-cover radius and cropped back, so that
/// overlapping windows cut from one world agree exactly.
RulePrediction rule_based_predict_window(std::span<const Channel> world, Coord center, int size,
                                         std::span<const labeling::SamplePoint> known, const RuleParams& params);

/// Sub-window of `grid` starting at (row0, col0).
RasterGrid crop(const RasterGrid& grid, int row0, int col0, int width, int height);

}  // namespace focus::baselines
