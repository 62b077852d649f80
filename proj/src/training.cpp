#include "focus/training.hpp"

#include <cmath>
#include <numeric>

#include "focus/error.hpp"
#include "focus/loss.hpp"
#include "focus/rng.hpp"

namespace focus::model {

TrainingExample make_example(const PatchStack& patch, const RasterGrid& label_mask, const RasterGrid* noise_mask,
                             const FeatureLayout& layout, labeling::LabelMode mode) {
  TrainingExample ex;
  ex.input = encode_features(patch, layout);
  const std::size_t n = label_mask.size();
  ex.labels.assign(n, 0);
  ex.noise.assign(n, 1.0);
  ex.valid.assign(n, 0);
  const int non_water = labeling::non_water_label(mode);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(label_mask.values()[i]);
    if (y == non_water) continue;
    ex.valid[i] = 1;
    ex.labels[i] = y;
    if (noise_mask) {
      const double m = noise_mask->values()[i];
      if (noise_mask->is_nodata(m)) throw ValidationError("make_example: noise mask missing on a labeled cell");
      ex.noise[i] = m;
    }
  }
  return ex;
}

BatchLoss batch_focus_loss(const std::vector<nn::Tensor>& logits, const std::vector<const TrainingExample*>& batch,
                           LossMode loss_mode, double gamma, const std::vector<double>& class_weights) {
  loss::MulticlassBatch mb;
  mb.classes = logits.front().channels;
  mb.class_weights = class_weights;
  const auto k = static_cast<std::size_t>(mb.classes);
  std::vector<nn::Tensor> probs;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    probs.push_back(nn::softmax_channels(logits[b]));
    const auto& p = probs.back();
    const std::size_t plane = p.plane_size();
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t c = 0; c < k; ++c) mb.probs.push_back(p.data[c * plane + i]);
    }
    mb.labels.insert(mb.labels.end(), batch[b]->labels.begin(), batch[b]->labels.end());
    mb.valid.insert(mb.valid.end(), batch[b]->valid.begin(), batch[b]->valid.end());
    if (loss_mode == LossMode::Focus) {
      mb.noise.insert(mb.noise.end(), batch[b]->noise.begin(), batch[b]->noise.end());
    } else {
      mb.noise.insert(mb.noise.end(), batch[b]->noise.size(), 1.0);
    }
  }
  BatchLoss out;
  if (mb.valid_count() == 0) {
    for (const auto& l : logits) out.grad_logits.emplace_back(l.channels, l.height, l.width);
    return out;
  }
  out.loss = loss::focus_loss(mb, gamma);
  const auto grad = loss::focus_loss_grad(mb, gamma);
  std::size_t offset = 0;
  for (const auto& l : logits) {
    nn::Tensor g(l.channels, l.height, l.width);
    const std::size_t plane = g.plane_size();
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t c = 0; c < k; ++c) g.data[c * plane + i] = grad[(offset + i) * k + c];
    }
    offset += plane;
    out.grad_logits.push_back(std::move(g));
  }
  return out;
}

FinetuneResult finetune(ModelState state, const std::vector<TrainingExample>& dataset, const TrainConfig& config,
                        LossMode loss_mode, const Evaluator& evaluator,
                        std::optional<std::vector<double>> class_weights) {
  if (dataset.empty()) throw ValidationError("finetune: empty dataset");
  const TrainConfig cfg = config.resolved(dataset.size());
  const int k = state.config.num_classes;

  std::vector<double> weights;
  if (class_weights) {
    weights = *class_weights;
  } else {
    // Balance the mass each class feeds into the loss: under FOCUS a cell
    // counts by its confidence, otherwise every labeled cell counts once.
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    for (const auto& ex : dataset) {
      for (std::size_t i = 0; i < ex.labels.size(); ++i) {
        if (!ex.valid[i]) continue;
        mass.at(static_cast<std::size_t>(ex.labels[i])) += loss_mode == LossMode::Focus ? ex.noise[i] : 1.0;
      }
    }
    weights = loss::inverse_frequency_weights(mass);
  }
  if (weights.size() != static_cast<std::size_t>(k)) throw ValidationError("finetune: class weight count mismatch");

  FinetuneResult result{std::move(state), {}};
  ModelState& model = result.state;
  AdamWState opt = AdamWState::for_model(model);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  int step = 0;

  for (int epoch = 0; epoch < cfg.epochs && step < cfg.total_steps; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    double epoch_sum = 0.0;
    int epoch_batches = 0;
    for (std::size_t start = 0; start < order.size() && step < cfg.total_steps; start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const TrainingExample*> batch;
      std::vector<ForwardCache> caches(end - start);
      std::vector<nn::Tensor> logits;
      for (std::size_t j = start; j < end; ++j) {
        batch.push_back(&dataset[order[j]]);
        logits.push_back(forward_raw(model, batch.back()->input, Head::Segmentation, &caches[j - start]));
      }
      BatchLoss bl = batch_focus_loss(logits, batch, loss_mode, cfg.gamma, weights);
      if (!std::isfinite(bl.loss)) {
        throw NumericError("finetune: non-finite loss at step " + std::to_string(step));
      }
      Gradients grads = zero_gradients(model);
      for (std::size_t b = 0; b < batch.size(); ++b) backward(model, caches[b], bl.grad_logits[b], Head::Segmentation, grads);
      adamw_step(model, grads, opt, cfg, step);
      result.log.step_loss.push_back(bl.loss);
      epoch_sum += bl.loss;
      ++epoch_batches;
      ++step;
    }
    result.log.epoch_loss.push_back(epoch_batches ? epoch_sum / epoch_batches : 0.0);
    if (evaluator) {
      for (auto& m : evaluator(model, epoch)) result.log.metrics.push_back(m);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> block_mask(int height, int width, int block, double mask_ratio, Rng& rng) {
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) throw ValidationError("mask_ratio must lie in [0,1)");
  if (block <= 0) throw ValidationError("mask block size must be positive");
  const int by = (height + block - 1) / block;
  const int bx = (width + block - 1) / block;
  std::vector<std::size_t> blocks(static_cast<std::size_t>(by) * bx);
  std::iota(blocks.begin(), blocks.end(), 0);
  rng.shuffle(std::span(blocks));
  const auto hidden = static_cast<std::size_t>(std::llround(mask_ratio * static_cast<double>(blocks.size())));
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(height) * width, 0);
  for (std::size_t b = 0; b < hidden; ++b) {
    const int y0 = static_cast<int>(blocks[b] / bx) * block;
    const int x0 = static_cast<int>(blocks[b] % bx) * block;
    for (int y = y0; y < std::min(height, y0 + block); ++y) {
      for (int x = x0; x < std::min(width, x0 + block); ++x) mask[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  return mask;
}

double masked_mse(const nn::Tensor& recon, const nn::Tensor& target, std::span<const std::uint8_t> mask,
                  nn::Tensor* grad) {
  const std::size_t plane = target.plane_size();
  const std::size_t masked = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  if (grad) *grad = nn::Tensor(recon.channels, recon.height, recon.width);
  if (masked == 0) return 0.0;
  const double denom = static_cast<double>(masked) * target.channels;
  double sum = 0.0;
  for (int c = 0; c < target.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask[i]) continue;
      const double d = recon.data[c * plane + i] - target.data[c * plane + i];
      sum += d * d;
      if (grad) grad->data[c * plane + i] = 2.0 * d / denom;
    }
  }
  return sum / denom;
}

namespace {

nn::Tensor apply_mask(const nn::Tensor& x, std::span<const std::uint8_t> mask) {
  nn::Tensor out = x;
  const std::size_t plane = x.plane_size();
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask[i]) out.data[c * plane + i] = 0.0;
    }
  }
  return out;
}

}  // namespace

PretrainResult pretrain_mae(ModelState state, const std::vector<nn::Tensor>& inputs, const PretrainConfig& pre,
                            const TrainConfig& config) {
  if (inputs.empty()) throw ValidationError("pretrain_mae: empty dataset");
  if (!(pre.mask_ratio >= 0.0 && pre.mask_ratio < 1.0)) throw ValidationError("mask_ratio must lie in [0,1)");
  TrainConfig cfg = config;
  cfg.total_steps = std::max(2, pre.steps);
  cfg.warmup_steps = config.warmup_steps > 0 && config.warmup_steps < cfg.total_steps
                         ? config.warmup_steps
                         : std::max(1, cfg.total_steps / 10);
  cfg.validate();

  // Held-out split: the trailing fraction of the inputs, at least one when
  // more than one input is available.
  std::size_t n_held = static_cast<std::size_t>(std::floor(pre.heldout_fraction * static_cast<double>(inputs.size())));
  if (inputs.size() > 1) n_held = std::clamp<std::size_t>(n_held, 1, inputs.size() - 1);
  else n_held = 0;
  const std::size_t n_train = inputs.size() - n_held;

  Rng mask_rng(splitmix64(cfg.seed ^ 0x4D41454DULL));
  std::vector<std::vector<std::uint8_t>> held_masks;
  for (std::size_t i = n_train; i < inputs.size(); ++i) {
    held_masks.push_back(block_mask(inputs[i].height, inputs[i].width, pre.block, pre.mask_ratio, mask_rng));
  }
  auto heldout_mse = [&](const ModelState& s) {
    if (n_held == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n_held; ++i) {
      const auto& x = inputs[n_train + i];
      const auto recon = forward_raw(s, apply_mask(x, held_masks[i]), Head::Reconstruction);
      total += masked_mse(recon, x, held_masks[i], nullptr);
    }
    return total / static_cast<double>(n_held);
  };

  PretrainResult result{std::move(state), {}, 0.0, 0.0};
  result.initial_heldout_mse = heldout_mse(result.state);
  AdamWState opt = AdamWState::for_model(result.state);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n_train);
  std::size_t cursor = n_train;
  for (int step = 0; step < cfg.total_steps; ++step) {
    Gradients grads = zero_gradients(result.state);
    double loss_sum = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= n_train) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span(order));
        cursor = 0;
      }
      const auto& x = inputs[order[cursor++]];
      const auto mask = block_mask(x.height, x.width, pre.block, pre.mask_ratio, rng);
      ForwardCache cache;
      const auto recon = forward_raw(result.state, apply_mask(x, mask), Head::Reconstruction, &cache);
      nn::Tensor g;
      loss_sum += masked_mse(recon, x, mask, &g);
      for (double& v : g.data) v /= cfg.batch_size;
      backward(result.state, cache, g, Head::Reconstruction, grads);
    }
    const double loss = loss_sum / cfg.batch_size;
    if (!std::isfinite(loss)) throw NumericError("pretrain_mae: non-finite loss at step " + std::to_string(step));
    adamw_step(result.state, grads, opt, cfg, step);
    result.step_loss.push_back(loss);
  }
  result.final_heldout_mse = heldout_mse(result.state);
  return result;
}

}  // namespace focus::model
