#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace veriaug {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One labeled input. Augmented (adversarial) samples carry the id of the
/// pool sample they were derived from.
struct Sample {
  Vector features;
  int label = 0;
  std::int64_t id = 0;
};

/// Dense one-hidden-layer ReLU classifier:
///   logits = w2 * relu(w1 * x + b1) + b2
/// The same struct doubles as the container for parameter gradients and for
/// Adam moment accumulators.
struct MlpModel {
  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Matrix w2;  // classes x hidden
  Vector b2;  // classes

  static MlpModel zeros(int input_dim, int hidden_dim, int num_classes);

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per weight matrix, zero biases.
  static MlpModel glorot(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int num_classes() const { return static_cast<int>(w2.rows()); }

  /// Throws std::invalid_argument if shapes disagree or any entry is non-finite.
  void validate() const;

  bool operator==(const MlpModel& other) const;
};

struct AdamState {
  MlpModel first_moment;
  MlpModel second_moment;
  std::uint64_t step_count = 0;

  static AdamState for_model(const MlpModel& model);
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

Vector forward(const MlpModel& model, const Vector& x);
Vector penultimate(const MlpModel& model, const Vector& x);

/// Numerically safe softmax (max-subtracted).
Vector softmax(const Vector& logits);

/// Cross-entropy of softmax(logits) against `label`, via log-sum-exp.
double cross_entropy(const Vector& logits, int label);
double loss(const MlpModel& model, const Vector& x, int label);

/// d loss / d x for the cross-entropy loss against `label`.
Vector loss_grad_input(const MlpModel& model, const Vector& x, int label);

/// d loss / d parameters, averaged over `batch`.
MlpModel loss_grad_params(const MlpModel& model, std::span<const Sample> batch);

/// Index of the largest logit, lowest index on ties.
int argmax(const Vector& logits);
/// Index of the second-largest logit (same tie rule), excluding argmax.
int runner_up(const Vector& logits);

int predict(const MlpModel& model, const Vector& x);
double accuracy(const MlpModel& model, std::span<const Sample> data);

/// One bias-corrected Adam update of `model` with gradient `grad`.
void adam_step(MlpModel& model, AdamState& state, const MlpModel& grad, double learning_rate,
               const AdamConstants& constants = {});

/// Minibatch Adam training. Returns the mean training loss of every epoch.
std::vector<double> train(MlpModel& model, AdamState& state, std::span<const Sample> data,
                          const TrainConfig& cfg);

}  // namespace veriaug
