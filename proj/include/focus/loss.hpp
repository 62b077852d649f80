#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace focus::loss {

inline constexpr double kProbClamp = 1e-7;

double clamp_prob(double p);

/// -w_y * log(p_t) for a binary prediction p = P(class 1).
double weighted_ce(double p, int y, double w0, double w1);

/// (1 - p_t)^gamma * weighted_ce, with p_t the true-class probability.
double focal(double p, int y, double gamma, double w0, double w1);

/// Binary batch. Loss is averaged over cells with valid != 0.
struct LossBatch {
  std::vector<double> probs;
  std::vector<int> labels;
  std::vector<double> noise;
  std::vector<std::uint8_t> valid;
  double w0 = 1.0;
  double w1 = 1.0;

  std::size_t size() const { return probs.size(); }
  std::size_t valid_count() const;
  void check() const;
};

double focus_loss(const LossBatch& batch, double gamma);

/// dL/dz for each cell where p = sigmoid(z); zero on invalid cells.
std::vector<double> focus_loss_grad(const LossBatch& batch, double gamma);

// ---------------------------------------------------------------------------
// K-class variant: softmax probabilities, row-major cells x K.

struct MulticlassBatch {
  int classes = 2;
  std::vector<double> probs;
  std::vector<int> labels;
  std::vector<double> noise;
  std::vector<std::uint8_t> valid;
  std::vector<double> class_weights;

  std::size_t size() const { return labels.size(); }
  std::size_t valid_count() const;
  void check() const;
};

/// Per-cell focal term for the true class: w_y (1-p_y)^gamma (-log p_y).
double focal_multiclass(std::span<const double> probs, int y, double gamma, double class_weight);

double focus_loss(const MulticlassBatch& batch, double gamma);

/// dL/dlogits, row-major cells x K, zero rows on invalid cells.
std::vector<double> focus_loss_grad(const MulticlassBatch& batch, double gamma);

/// Inverse class frequency, normalized so the weights sum to the number of
/// classes. Classes with no support get weight 0 before normalization is
/// applied to the rest.
std::vector<double> inverse_frequency_weights(std::span<const std::size_t> counts);
/// Same normalization over per-class (possibly fractional) loss mass.
std::vector<double> inverse_frequency_weights(std::span<const double> mass);

}  // namespace focus::loss
