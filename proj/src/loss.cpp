#include "focus/loss.hpp"

#include <algorithm>
#include <cmath>

#include "focus/error.hpp"

namespace focus::loss {
namespace {

double pt_of(double p, int y) { return y == 1 ? p : 1.0 - p; }

/// d/dp_t of (1-p_t)^gamma (-log p_t), multiplied by p_t (1-p_t). Written
/// without (1-p_t)^(gamma-1) so gamma < 1 stays finite.
double focal_dz_factor(double pt, double gamma) {
  const double q = 1.0 - pt;
  return gamma * pt * std::pow(q, gamma) * std::log(pt) - std::pow(q, gamma + 1.0);
}

}  // namespace

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double weighted_ce(double p, int y, double w0, double w1) {
  const double pc = clamp_prob(p);
  return y == 1 ? -w1 * std::log(pc) : -w0 * std::log(1.0 - pc);
}

double focal(double p, int y, double gamma, double w0, double w1) {
  if (gamma < 0.0) throw ValidationError("focal: gamma must be nonnegative");
  const double pt = pt_of(clamp_prob(p), y);
  return std::pow(1.0 - pt, gamma) * weighted_ce(p, y, w0, w1);
}

std::size_t LossBatch::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
}

void LossBatch::check() const {
  const std::size_t n = probs.size();
  if (labels.size() != n || noise.size() != n || valid.size() != n) {
    throw ValidationError("loss batch arrays differ in length");
  }
  if (!(w0 > 0.0) || !(w1 > 0.0)) throw ValidationError("class weights must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("binary loss labels must be 0 or 1");
    if (!(noise[i] >= 0.0 && noise[i] <= 1.0)) throw ValidationError("noise weights must lie in [0,1]");
  }
}

double focus_loss(const LossBatch& batch, double gamma) {
  batch.check();
  const std::size_t n = batch.valid_count();
  if (n == 0) throw ValidationError("focus_loss: no valid cells");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.valid[i]) continue;
    sum += focal(batch.probs[i], batch.labels[i], gamma, batch.w0, batch.w1) * batch.noise[i];
  }
  return sum / static_cast<double>(n);
}

std::vector<double> focus_loss_grad(const LossBatch& batch, double gamma) {
  batch.check();
  if (gamma < 0.0) throw ValidationError("focal: gamma must be nonnegative");
  const std::size_t n = batch.valid_count();
  if (n == 0) throw ValidationError("focus_loss_grad: no valid cells");
  std::vector<double> grad(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.valid[i]) continue;
    const double p = batch.probs[i];
    // The clamp is flat outside [eps, 1-eps].
    if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
    const int y = batch.labels[i];
    const double w = y == 1 ? batch.w1 : batch.w0;
    const double sign = y == 1 ? 1.0 : -1.0;
    grad[i] = sign * batch.noise[i] * w * focal_dz_factor(pt_of(p, y), gamma) / static_cast<double>(n);
  }
  return grad;
}

// ---------------------------------------------------------------------------

std::size_t MulticlassBatch::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](auto v) { return v != 0; }));
}

void MulticlassBatch::check() const {
  const std::size_t n = labels.size();
  if (classes < 2) throw ValidationError("need at least two classes");
  if (probs.size() != n * static_cast<std::size_t>(classes) || noise.size() != n || valid.size() != n) {
    throw ValidationError("loss batch arrays differ in length");
  }
  if (class_weights.size() != static_cast<std::size_t>(classes)) {
    throw ValidationError("one class weight per class is required");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    if (labels[i] < 0 || labels[i] >= classes) throw ValidationError("label outside [0, classes)");
    if (!(noise[i] >= 0.0 && noise[i] <= 1.0)) throw ValidationError("noise weights must lie in [0,1]");
  }
}

double focal_multiclass(std::span<const double> probs, int y, double gamma, double class_weight) {
  const double py = clamp_prob(probs[static_cast<std::size_t>(y)]);
  return class_weight * std::pow(1.0 - py, gamma) * -std::log(py);
}

double focus_loss(const MulticlassBatch& batch, double gamma) {
  batch.check();
  if (gamma < 0.0) throw ValidationError("focal: gamma must be nonnegative");
  const std::size_t n = batch.valid_count();
  if (n == 0) throw ValidationError("focus_loss: no valid cells");
  const auto k = static_cast<std::size_t>(batch.classes);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.valid[i]) continue;
    const int y = batch.labels[i];
    sum += focal_multiclass(std::span(batch.probs).subspan(i * k, k), y, gamma,
                            batch.class_weights[static_cast<std::size_t>(y)]) *
           batch.noise[i];
  }
  return sum / static_cast<double>(n);
}

std::vector<double> focus_loss_grad(const MulticlassBatch& batch, double gamma) {
  batch.check();
  if (gamma < 0.0) throw ValidationError("focal: gamma must be nonnegative");
  const std::size_t n = batch.valid_count();
  if (n == 0) throw ValidationError("focus_loss_grad: no valid cells");
  const auto k = static_cast<std::size_t>(batch.classes);
  std::vector<double> grad(batch.size() * k, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.valid[i] || batch.noise[i] == 0.0) continue;
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    const double* p = batch.probs.data() + i * k;
    const double py = p[y];
    if (py < kProbClamp || py > 1.0 - kProbClamp) continue;
    // dL/dz_j = dL/dp_y * p_y (delta_yj - p_j); dL/dp_y * p_y folds into
    // focal_dz_factor / (1 - p_y).
    const double scale = batch.noise[i] * batch.class_weights[y] / static_cast<double>(n);
    const double q = 1.0 - py;
    const double dldpy_times_py = gamma * py * std::pow(q, gamma - 1.0) * std::log(py) - std::pow(q, gamma);
    for (std::size_t j = 0; j < k; ++j) {
      grad[i * k + j] = scale * dldpy_times_py * ((j == y ? 1.0 : 0.0) - p[j]);
    }
  }
  return grad;
}

std::vector<double> inverse_frequency_weights(std::span<const double> mass) {
  std::vector<double> w(mass.size(), 0.0);
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < mass.size(); ++c) {
    if (!(mass[c] > 0.0)) continue;
    w[c] = 1.0 / mass[c];
    total += w[c];
    ++present;
  }
  if (present == 0) throw ValidationError("inverse_frequency_weights: no class has support");
  for (double& v : w) v = v * static_cast<double>(mass.size()) / total;
  return w;
}

std::vector<double> inverse_frequency_weights(std::span<const std::size_t> counts) {
  std::vector<double> mass(counts.begin(), counts.end());
  return inverse_frequency_weights(mass);
}

}  // namespace focus::loss
