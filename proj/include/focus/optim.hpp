#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "focus/model.hpp"

namespace focus::model {

struct TrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  /// 0 picks 10% of total_steps (at least 1).
  int warmup_steps = 0;
  /// 0 picks epochs x batches per epoch.
  int total_steps = 0;
  double poly_power = 1.0;
  double gamma = 2.0;
  int epochs = 30;
  std::uint64_t seed = 42;

  /// Fills in automatic warmup/total values and validates the schedule.
  TrainConfig resolved(std::size_t examples) const;
  void validate() const;
};

/// Linear warmup to the base rate, then polynomial decay to zero at
/// total_steps.
double lr_at(const TrainConfig& config, int step);

struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int step = 0;

  static AdamWState for_model(const ModelState& state);
};

/// One AdamW update at schedule position `step` (0-based) using lr_at().
/// Throws NumericError naming the first tensor with a non-finite gradient.
void adamw_step(ModelState& state, const Gradients& grads, AdamWState& opt, const TrainConfig& config, int step);

/// Same update for a bare tensor list; `lr` is the rate for this step and
/// `t` the 1-based step count used for bias correction.
void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                  double lr, const TrainConfig& config, int t, const std::string& name = "tensor");

}  // namespace focus::model
