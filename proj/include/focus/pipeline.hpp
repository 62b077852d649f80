#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/config.hpp"
#include "focus/eval.hpp"
#include "focus/kriging.hpp"
#include "focus/labeling.hpp"
#include "focus/model.hpp"
#include "focus/optim.hpp"
#include "focus/rule_based.hpp"
#include "focus/synth.hpp"
#include "focus/training.hpp"
#include "focus/transport.hpp"

namespace focus::pipeline {

/// Every tunable of the workflow, read from a flat config file.
struct Settings {
  synth::WorldSpec world;
  synth::SampleConfig sample;
  double train_fraction = 0.8;
  int patch_size = 64;
  bool use_dem = true;
  labeling::LabelMode label_mode = labeling::LabelMode::Binary;
  labeling::NoiseWeights weights;
  labeling::NoiseParams noise;
  std::vector<int> widths = {16, 32, 48, 64};
  model::TrainConfig train;
  model::PretrainConfig pretrain;
  std::uint64_t model_seed = 42;
  double rule_threshold = 0.5;
  double krige_threshold = 0.5;
  int krige_bins = 15;
  int consistency_patch = 256;
  int consistency_trials = 3;
  std::vector<int> consistency_overlaps = {56, 156};
  int bench_runs = 10;
  int bench_points = 1000;
  int grid_epochs = 0;  // 0 keeps train.epochs

  /// Reads known keys; unknown keys are rejected. A seed override replaces
  /// every seed.
  static Settings from_config(const Config& config, std::optional<std::uint64_t> seed = std::nullopt);
  /// Margin keeping every patch (and the rule-based halo) inside the world.
  int sample_margin() const;
};

/// Config keys understood by Settings::from_config, for documentation and
/// validation.
std::span<const char* const> known_keys();

inline constexpr int kTrainSplit = 0;
inline constexpr int kTestSplit = 1;
std::string split_name(int split);
int parse_split(const std::string& name);

/// id -> split for every sample, as CSV "id,split".
std::string format_split_csv(std::span<const labeling::SamplePoint> samples, std::span<const int> assignment);
std::vector<int> parse_split_csv(const std::string& text, std::span<const labeling::SamplePoint> samples);

/// A labeled patch: model inputs plus expanded labels and noise mask.
struct PatchRecord {
  std::string id;
  int split = kTrainSplit;
  PatchStack inputs;
  RasterGrid label;
  RasterGrid noise;
};

/// One patch per sample centered on it. Labels and noise masks use the
/// samples of the same split lying inside the window.
std::vector<PatchRecord> make_patch_records(const synth::World& world, std::span<const labeling::SamplePoint> samples,
                                            std::span<const int> assignment, const Settings& settings);

/// Recomputes noise masks under different weights.
void recompute_noise(std::vector<PatchRecord>& records, std::span<const labeling::SamplePoint> samples,
                     std::span<const int> assignment, const labeling::NoiseWeights& weights,
                     const Settings& settings);

void write_patch_record(const PatchRecord& record, const std::filesystem::path& path);
PatchRecord read_patch_record(const std::filesystem::path& path, const std::string& id, int split);

/// Fresh model sized for the layout with normalization fit on `records`.
model::ModelState build_model(std::span<const PatchRecord> records, const Settings& settings, std::uint64_t seed);

/// Normalized training examples; noise masks included unless `with_noise` is false.
std::vector<model::TrainingExample> make_examples(std::span<const PatchRecord> records,
                                                  const model::ModelState& state, bool with_noise = true);

std::vector<nn::Tensor> normalized_inputs(std::span<const PatchRecord> records, const model::ModelState& state);

struct Prediction {
  std::string id;
  RasterGrid probability;  // class-1 probability on water, nodata elsewhere
  RasterGrid labels;       // argmax on water, non-water label elsewhere
};

Prediction predict_record(const model::ModelState& state, const PatchStack& inputs, const std::string& id);
std::vector<Prediction> predict_records(const model::ModelState& state, std::span<const PatchRecord> records);

void write_prediction(const Prediction& prediction, const std::filesystem::path& path);
Prediction read_prediction(const std::filesystem::path& path, const std::string& id);

/// Samples assigned to `split`.
std::vector<labeling::SamplePoint> samples_of(std::span<const labeling::SamplePoint> samples,
                                              std::span<const int> assignment, int split);

eval::MetricReport evaluate_predictions(std::span<const Prediction> predictions,
                                        std::span<const labeling::SamplePoint> samples,
                                        labeling::LabelMode mode = labeling::LabelMode::Binary);

/// Builds, trains and evaluates one model; optional per-epoch test metrics.
struct TrainOutcome {
  model::ModelState state;
  model::TrainLog log;
  eval::MetricReport report;
};
TrainOutcome train_and_evaluate(std::span<const PatchRecord> train, std::span<const PatchRecord> test,
                                std::span<const labeling::SamplePoint> test_samples, const Settings& settings,
                                model::LossMode loss_mode, std::uint64_t seed, bool log_epochs = false,
                                const model::ModelState* init = nullptr);

std::string format_metric_log_csv(std::span<const model::EpochMetrics> metrics);
std::string format_loss_log_csv(const model::TrainLog& log);

// ---------------------------------------------------------------------------
// Baselines at sample points

eval::MetricReport rule_baseline(const synth::World& world, std::span<const labeling::SamplePoint> known,
                                 std::span<const labeling::SamplePoint> test, const Settings& settings);

struct KrigeOutcome {
  baselines::VariogramModel model;
  eval::MetricReport report;
};
KrigeOutcome krige_baseline(std::span<const labeling::SamplePoint> train, std::span<const labeling::SamplePoint> test,
                            const Settings& settings);

eval::MetricReport simulate_baseline(const synth::World& world, std::span<const labeling::SamplePoint> test,
                                     const Settings& settings);

// ---------------------------------------------------------------------------
// Consistency

struct ConsistencyTrial {
  int overlap = 0;
  int trial = 0;
  Coord center_a{};
  Coord center_b{};
  double model_water = 0.0;  // agreement on water pixels
  double model_all = 0.0;    // agreement on every overlap pixel
  double rule = 0.0;         // rule-based agreement on every overlap pixel
};

/// Pairs of patches offset diagonally so their windows share an
/// overlap x overlap square, at random world locations.
std::vector<ConsistencyTrial> consistency_trials(const synth::World& world, const model::ModelState* state,
                                                 const Settings& settings, std::uint64_t seed);
std::string format_consistency_csv(std::span<const ConsistencyTrial> trials);

// ---------------------------------------------------------------------------
// Ablation

struct AblationRun {
  std::uint64_t seed = 0;
  eval::MetricReport focus;
  eval::MetricReport focal;
};

std::vector<AblationRun> loss_ablation(std::span<const PatchRecord> train, std::span<const PatchRecord> test,
                                       std::span<const labeling::SamplePoint> test_samples, const Settings& settings,
                                       std::span<const std::uint64_t> seeds);

/// Random water-cell coordinates at least `margin` cells from the edge.
std::vector<Coord> random_water_points(const synth::World& world, int count, int margin, std::uint64_t seed);

}  // namespace focus::pipeline
