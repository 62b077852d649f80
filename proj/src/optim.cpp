#include "focus/optim.hpp"

#include <cmath>

#include "focus/error.hpp"
#include "focus/simd.hpp"

namespace focus::model {

TrainConfig TrainConfig::resolved(std::size_t examples) const {
  TrainConfig c = *this;
  if (c.batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (c.total_steps <= 0) {
    const auto per_epoch = static_cast<int>((examples + c.batch_size - 1) / c.batch_size);
    c.total_steps = std::max(2, c.epochs * per_epoch);
  }
  if (c.warmup_steps <= 0) c.warmup_steps = std::max(1, c.total_steps / 10);
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ValidationError("learning_rate must be nonnegative");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (!(warmup_steps > 0 && warmup_steps < total_steps)) {
    throw ValidationError("schedule needs 0 < warmup_steps < total_steps");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("betas must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be nonnegative");
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be nonnegative");
  if (!(poly_power > 0.0)) throw ValidationError("poly_power must be positive");
}

double lr_at(const TrainConfig& c, int step) {
  if (step < c.warmup_steps) return c.learning_rate * (step + 1) / c.warmup_steps;
  const double progress = static_cast<double>(step - c.warmup_steps) / (c.total_steps - c.warmup_steps);
  if (progress >= 1.0) return 0.0;
  return c.learning_rate * std::pow(1.0 - progress, c.poly_power);
}

AdamWState AdamWState::for_model(const ModelState& state) {
  AdamWState s;
  for (const auto& p : state.params) {
    s.m.emplace_back(p.values.size(), 0.0);
    s.v.emplace_back(p.values.size(), 0.0);
  }
  return s;
}

void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                  double lr, const TrainConfig& config, int t, const std::string& name) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw ValidationError("adamw: tensor '" + name + "' has mismatched shapes");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("adamw: non-finite gradient in tensor '" + name + "'");
  }
  const simd::AdamWCoefficients coeff{lr,
                                      config.beta1,
                                      config.beta2,
                                      config.eps,
                                      config.weight_decay,
                                      1.0 - std::pow(config.beta1, t),
                                      1.0 - std::pow(config.beta2, t)};
  simd::active().adamw(params.data(), grads.data(), m.data(), v.data(), params.size(), coeff);
}

void adamw_step(ModelState& state, const Gradients& grads, AdamWState& opt, const TrainConfig& config, int step) {
  if (grads.size() != state.params.size()) throw ValidationError("adamw: gradient list does not match the model");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (double g : grads[i]) {
      if (!std::isfinite(g)) {
        throw NumericError("adamw: non-finite gradient in tensor '" + state.params[i].name + "'");
      }
    }
  }
  const double lr = lr_at(config, step);
  ++opt.step;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    adamw_update(state.params[i].values, grads[i], opt.m[i], opt.v[i], lr, config, opt.step, state.params[i].name);
  }
}

}  // namespace focus::model
