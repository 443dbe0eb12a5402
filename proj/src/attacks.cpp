#include "veriaug/attacks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace veriaug {

void AttackParams::validate() const {
  if (!(tolerance > 0.0) || tolerance > 0.1) {
    throw std::invalid_argument("attack tolerance must lie in (0, 0.1]");
  }
  if (deepfool_max_iter <= 0) throw std::invalid_argument("deepfool_max_iter must be positive");
  if (!(deepfool_overshoot >= 0.0)) {
    throw std::invalid_argument("deepfool_overshoot must be non-negative");
  }
}

Vector fgsm(const MlpModel& model, const Vector& x, int label, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("fgsm epsilon must be non-negative");
  const Vector grad = loss_grad_input(model, x, label);
  Vector out = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double s = grad(j) > 0.0 ? 1.0 : (grad(j) < 0.0 ? -1.0 : 0.0);
    out(j) = std::clamp(x(j) + eps * s, 0.0, 1.0);
  }
  return out;
}

MarginEstimate margin_by_binary_search(const MlpModel& model, const Vector& x,
                                       const AttackParams& params) {
  params.validate();
  const int label = predict(model, x);
  // The gradient is fixed by (x, label); only the step length varies.
  const Vector grad = loss_grad_input(model, x, label);
  Vector direction(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    direction(j) = grad(j) > 0.0 ? 1.0 : (grad(j) < 0.0 ? -1.0 : 0.0);
  }
  auto step = [&](double eps) {
    return Vector((x + eps * direction).cwiseMax(0.0).cwiseMin(1.0));
  };

  MarginEstimate out;
  double start = 0.0;
  double end = 1.0;
  double eps = 0.5;
  while (end - start > params.tolerance) {
    if (predict(model, step(eps)) != label) {
      end = eps;
    } else {
      start = eps;
    }
    eps = start + (end - start) / 2.0;
    ++out.iterations;
  }
  out.eps_star = eps;
  out.adversarial = step(eps);
  out.flipped = predict(model, out.adversarial) != label;
  return out;
}

DeepFoolResult deepfool(const MlpModel& model, const Vector& x, const AttackParams& params) {
  params.validate();
  const int source = predict(model, x);
  const double scale = 1.0 + params.deepfool_overshoot;

  Vector total = Vector::Zero(x.size());
  Vector current = x;
  DeepFoolResult out;
  for (int it = 0; it < params.deepfool_max_iter; ++it) {
    const Vector pre = model.w1 * current + model.b1;
    const Vector logits = model.w2 * pre.cwiseMax(0.0) + model.b2;
    if (argmax(logits) != source) break;

    // Gradient of logit k w.r.t. x is w1^T (mask .* w2_k).
    const Vector mask = (pre.array() > 0.0).cast<double>();
    double best_dist = std::numeric_limits<double>::infinity();
    Vector best_step;
    for (int k = 0; k < model.num_classes(); ++k) {
      if (k == source) continue;
      const Vector w = model.w1.transpose() *
                       ((model.w2.row(k) - model.w2.row(source)).transpose().cwiseProduct(mask));
      const double norm_sq = w.squaredNorm();
      if (norm_sq <= 0.0) continue;
      const double gap = std::abs(logits(k) - logits(source));
      const double dist = gap / std::sqrt(norm_sq);
      if (dist < best_dist) {
        best_dist = dist;
        best_step = (gap / norm_sq) * w;
      }
    }
    // Locally constant logits: no boundary reachable by linearization.
    if (best_step.size() == 0) break;
    total += best_step;
    current = (x + scale * total).cwiseMax(0.0).cwiseMin(1.0);
    out.iterations = it + 1;
  }
  out.adversarial = current;
  const Vector applied = current - x;
  out.perturbation_norm = applied.norm();
  out.perturbation_linf = applied.size() > 0 ? applied.cwiseAbs().maxCoeff() : 0.0;
  out.flipped = predict(model, current) != source;
  return out;
}

}  // namespace veriaug
