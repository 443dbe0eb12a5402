#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "veriaug/attacks.hpp"
#include "veriaug/nn.hpp"

namespace veriaug {

enum class Strategy { Random, Fvaal, Dfal, Badge };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

/// What a strategy learned about a chosen sample while scoring it.
struct Byproduct {
  /// Adversarial input found by the strategy's own attack (only when it flipped
  /// the prediction).
  std::optional<Vector> adversarial;
  /// L-infinity size of that perturbation, used to seed verifier epsilons.
  std::optional<double> margin;
};

struct SelectionResult {
  std::vector<std::int64_t> chosen_ids;
  std::map<std::int64_t, Byproduct> byproducts;
};

/// Uniform sample of n ids without replacement.
SelectionResult select_random(std::span<const std::int64_t> pool_ids, std::size_t n,
                              std::mt19937_64& rng);

/// The n candidates with the smallest binary-search FGSM margin. Candidates
/// whose prediction never flipped rank after all flipped ones; ties go to the
/// lower id.
SelectionResult select_fvaal(const MlpModel& model, std::span<const Sample> candidates,
                             std::size_t n, const AttackParams& params, int workers = 1);

/// The n candidates with the smallest DeepFool L2 perturbation, same ordering
/// rules as select_fvaal.
SelectionResult select_dfal(const MlpModel& model, std::span<const Sample> candidates,
                            std::size_t n, const AttackParams& params, int workers = 1);

/// Output-layer cross-entropy gradient at the argmax pseudo-label: block c is
/// (softmax_c - [c == yhat]) * penultimate(x), blocks concatenated by class.
Vector badge_embedding(const MlpModel& model, const Vector& x);
std::vector<Vector> badge_embeddings(const MlpModel& model, std::span<const Sample> candidates,
                                     int workers = 1);

/// k-means++ seeding used as a batch selector: uniform first pick, then
/// D^2-weighted picks. Falls back to uniform over the remaining indices when
/// every remaining distance is zero.
std::vector<std::size_t> kmeanspp_select(std::span<const Vector> embeddings, std::size_t n,
                                         std::mt19937_64& rng);

SelectionResult select_badge(const MlpModel& model, std::span<const Sample> candidates,
                             std::size_t n, std::mt19937_64& rng, int workers = 1);

}  // namespace veriaug
