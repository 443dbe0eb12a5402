#include "veriaug/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace veriaug {
namespace {

void check_input(const MlpModel& model, const Vector& x) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(x.size()) +
                                " features, model expects " +
                                std::to_string(model.input_dim()));
  }
}

void check_label(const MlpModel& model, int label) {
  if (label < 0 || label >= model.num_classes()) {
    throw std::invalid_argument("class index " + std::to_string(label) + " outside [0, " +
                                std::to_string(model.num_classes()) + ")");
  }
}

Matrix glorot_matrix(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  // Fill row-major so the draw order does not depend on Eigen's storage order.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

MlpModel MlpModel::zeros(int input_dim, int hidden_dim, int num_classes) {
  if (input_dim <= 0 || hidden_dim <= 0 || num_classes <= 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  return MlpModel{Matrix::Zero(hidden_dim, input_dim), Vector::Zero(hidden_dim),
                  Matrix::Zero(num_classes, hidden_dim), Vector::Zero(num_classes)};
}

MlpModel MlpModel::glorot(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed) {
  MlpModel m = zeros(input_dim, hidden_dim, num_classes);
  std::mt19937_64 rng(seed);
  m.w1 = glorot_matrix(hidden_dim, input_dim, rng);
  m.w2 = glorot_matrix(num_classes, hidden_dim, rng);
  return m;
}

void MlpModel::validate() const {
  if (w1.rows() == 0 || w1.cols() == 0 || w2.rows() == 0) {
    throw std::invalid_argument("model has an empty dimension");
  }
  if (b1.size() != w1.rows() || w2.cols() != w1.rows() || b2.size() != w2.rows()) {
    throw std::invalid_argument("model parameter shapes are inconsistent");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
    throw std::invalid_argument("model has non-finite parameters");
  }
}

bool MlpModel::operator==(const MlpModel& other) const {
  return w1.rows() == other.w1.rows() && w1.cols() == other.w1.cols() &&
         w2.rows() == other.w2.rows() && w1 == other.w1 && b1 == other.b1 && w2 == other.w2 &&
         b2 == other.b2;
}

AdamState AdamState::for_model(const MlpModel& model) {
  const MlpModel z = MlpModel::zeros(model.input_dim(), model.hidden_dim(), model.num_classes());
  return AdamState{z, z, 0};
}

Vector penultimate(const MlpModel& model, const Vector& x) {
  check_input(model, x);
  return (model.w1 * x + model.b1).cwiseMax(0.0);
}

Vector forward(const MlpModel& model, const Vector& x) {
  return model.w2 * penultimate(model, x) + model.b2;
}

Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double cross_entropy(const Vector& logits, int label) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label);
}

double loss(const MlpModel& model, const Vector& x, int label) {
  check_label(model, label);
  return cross_entropy(forward(model, x), label);
}

Vector loss_grad_input(const MlpModel& model, const Vector& x, int label) {
  check_input(model, x);
  check_label(model, label);
  const Vector pre = model.w1 * x + model.b1;
  const Vector hidden = pre.cwiseMax(0.0);
  Vector dlogits = softmax(model.w2 * hidden + model.b2);
  dlogits(label) -= 1.0;
  Vector dpre = model.w2.transpose() * dlogits;
  for (Eigen::Index j = 0; j < dpre.size(); ++j) {
    if (pre(j) <= 0.0) dpre(j) = 0.0;
  }
  return model.w1.transpose() * dpre;
}

MlpModel loss_grad_params(const MlpModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix x(model.input_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    check_input(model, batch[i].features);
    check_label(model, batch[i].label);
    x.col(i) = batch[i].features;
  }
  const Matrix pre = (model.w1 * x).colwise() + model.b1;
  const Matrix hidden = pre.cwiseMax(0.0);
  Matrix logits = (model.w2 * hidden).colwise() + model.b2;

  // Column-wise softmax minus one-hot.
  Matrix dlogits(logits.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dlogits.col(i) = softmax(logits.col(i));
    dlogits(batch[i].label, i) -= 1.0;
  }
  dlogits /= static_cast<double>(n);

  Matrix dpre = model.w2.transpose() * dlogits;
  dpre = (pre.array() > 0.0).select(dpre, 0.0);

  return MlpModel{dpre * x.transpose(), dpre.rowwise().sum(), dlogits * hidden.transpose(),
                  dlogits.rowwise().sum()};
}

int argmax(const Vector& logits) {
  int best = 0;
  for (int c = 1; c < logits.size(); ++c) {
    if (logits(c) > logits(best)) best = c;
  }
  return best;
}

int runner_up(const Vector& logits) {
  if (logits.size() < 2) throw std::invalid_argument("runner-up needs at least two classes");
  const int top = argmax(logits);
  int best = top == 0 ? 1 : 0;
  for (int c = 0; c < logits.size(); ++c) {
    if (c != top && logits(c) > logits(best)) best = c;
  }
  return best;
}

int predict(const MlpModel& model, const Vector& x) { return argmax(forward(model, x)); }

double accuracy(const MlpModel& model, std::span<const Sample> data) {
  if (data.empty()) throw std::invalid_argument("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (const Sample& s : data) {
    if (predict(model, s.features) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

template <typename Param>
void adam_update(Param& p, Param& m, Param& v, const Param& g, double lr, double c1, double c2,
                 const AdamConstants& k) {
  m = k.beta1 * m + (1.0 - k.beta1) * g;
  v = k.beta2 * v + (1.0 - k.beta2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + k.epsilon);
}

}  // namespace

void adam_step(MlpModel& model, AdamState& state, const MlpModel& grad, double learning_rate,
               const AdamConstants& constants) {
  state.step_count += 1;
  const auto t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(constants.beta1, t);
  const double c2 = 1.0 - std::pow(constants.beta2, t);
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  adam_update(model.w1, m.w1, v.w1, grad.w1, learning_rate, c1, c2, constants);
  adam_update(model.b1, m.b1, v.b1, grad.b1, learning_rate, c1, c2, constants);
  adam_update(model.w2, m.w2, v.w2, grad.w2, learning_rate, c1, c2, constants);
  adam_update(model.b2, m.b2, v.b2, grad.b2, learning_rate, c1, c2, constants);
}

std::vector<double> train(MlpModel& model, AdamState& state, std::span<const Sample> data,
                          const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size <= 0 || !(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("invalid training configuration");
  }
  for (const Sample& s : data) {
    check_input(model, s.features);
    check_label(model, s.label);
  }

  std::mt19937_64 shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));

  std::vector<double> epoch_losses;
  epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch.capacity()) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + batch.capacity());
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      for (const Sample& s : batch) total += loss(model, s.features, s.label);
      adam_step(model, state, loss_grad_params(model, batch), cfg.learning_rate);
    }
    epoch_losses.push_back(total / static_cast<double>(data.size()));
  }
  return epoch_losses;
}

}  // namespace veriaug
