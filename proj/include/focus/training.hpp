#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "focus/labeling.hpp"
#include "focus/model.hpp"
#include "focus/optim.hpp"
#include "focus/rng.hpp"

namespace focus::model {

/// One labeled patch in network-ready form.
struct TrainingExample {
  nn::Tensor input;  // normalized features
  std::vector<int> labels;
  std::vector<double> noise;
  std::vector<std::uint8_t> valid;
};

/// Raw features plus per-cell targets. Valid cells are those whose label is
/// not the non-water value.
TrainingExample make_example(const PatchStack& patch, const RasterGrid& label_mask, const RasterGrid* noise_mask,
                             const FeatureLayout& layout, labeling::LabelMode mode);

enum class LossMode { Focus, FocalOnly };

struct EpochMetrics {
  int epoch = 0;
  std::string split;
  double accuracy = 0.0;
  double iou = 0.0;
  double fscore = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct TrainLog {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::vector<EpochMetrics> metrics;
};

using Evaluator = std::function<std::vector<EpochMetrics>(const ModelState&, int epoch)>;

struct FinetuneResult {
  ModelState state;
  TrainLog log;
};

/// Supervised training with the focal loss, each cell weighted by its noise
/// mask value (LossMode::Focus) or by 1 (LossMode::FocalOnly). Examples are
/// expected to be normalized with state.norm. Class weights default to
/// inverse class mass over the examples' valid cells, where a cell's mass is
/// the weight the loss mode gives it.
FinetuneResult finetune(ModelState state, const std::vector<TrainingExample>& dataset, const TrainConfig& config,
                        LossMode loss_mode, const Evaluator& evaluator = {},
                        std::optional<std::vector<double>> class_weights = std::nullopt);

/// Loss and logits gradient for a batch of examples (exposed for tests).
struct BatchLoss {
  double loss = 0.0;
  std::vector<nn::Tensor> grad_logits;
};
BatchLoss batch_focus_loss(const std::vector<nn::Tensor>& logits, const std::vector<const TrainingExample*>& batch,
                           LossMode loss_mode, double gamma, const std::vector<double>& class_weights);

// ---------------------------------------------------------------------------
// Masked-autoencoder pretraining

/// Square-block cell mask: 1 where the input is hidden.
std::vector<std::uint8_t> block_mask(int height, int width, int block, double mask_ratio, Rng& rng);

/// Mean squared reconstruction error over masked cells (all channels), and
/// its gradient with respect to the reconstruction.
double masked_mse(const nn::Tensor& recon, const nn::Tensor& target, std::span<const std::uint8_t> mask,
                  nn::Tensor* grad);

struct PretrainConfig {
  double mask_ratio = 0.5;
  int block = 8;
  int steps = 200;
  double heldout_fraction = 0.2;
};

struct PretrainResult {
  ModelState state;
  std::vector<double> step_loss;
  double initial_heldout_mse = 0.0;
  double final_heldout_mse = 0.0;
};

/// Inputs must be normalized. Trains trunk + reconstruction head.
PretrainResult pretrain_mae(ModelState state, const std::vector<nn::Tensor>& inputs, const PretrainConfig& pretrain,
                            const TrainConfig& config);

}  // namespace focus::model
