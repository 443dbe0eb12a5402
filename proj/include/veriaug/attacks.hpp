#pragma once

#include "veriaug/nn.hpp"

namespace veriaug {

struct AttackParams {
  /// Binary-search stopping width on epsilon; at most 0.1.
  double tolerance = 1e-3;
  int deepfool_max_iter = 50;
  double deepfool_overshoot = 0.02;

  void validate() const;
};

/// Result of the FGSM binary search for the smallest flipping epsilon.
struct MarginEstimate {
  double eps_star = 1.0;
  Vector adversarial;
  /// Whether predict(adversarial) differs from predict(x).
  bool flipped = false;
  int iterations = 0;
};

struct DeepFoolResult {
  Vector adversarial;
  /// L2 norm of adversarial - x (after clamping).
  double perturbation_norm = 0.0;
  /// L-infinity norm of the same perturbation.
  double perturbation_linf = 0.0;
  bool flipped = false;
  int iterations = 0;
};

/// clamp(x + eps * sign(d loss(x, label) / dx), 0, 1), with sign(0) = 0.
Vector fgsm(const MlpModel& model, const Vector& x, int label, double eps);

/// FGSM with binary search over eps in [0, 1]. The attack label is the
/// model's prediction at x. Runs exactly ceil(log2(1 / tolerance)) halvings.
MarginEstimate margin_by_binary_search(const MlpModel& model, const Vector& x,
                                       const AttackParams& params);

/// Multiclass DeepFool towards the nearest linearized boundary of the
/// predicted class. The iterate is clamp(x + (1 + overshoot) * r_total, 0, 1).
DeepFoolResult deepfool(const MlpModel& model, const Vector& x, const AttackParams& params);

}  // namespace veriaug
