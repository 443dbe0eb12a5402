#include "veriaug/strategies.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "veriaug/parallel.hpp"

namespace veriaug {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Fvaal: return "fvaal";
    case Strategy::Dfal: return "dfal";
    case Strategy::Badge: return "badge";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "random") return Strategy::Random;
  if (name == "fvaal") return Strategy::Fvaal;
  if (name == "dfal") return Strategy::Dfal;
  if (name == "badge") return Strategy::Badge;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

namespace {

void check_count(std::size_t n, std::size_t available) {
  if (n > available) {
    throw std::invalid_argument("cannot select " + std::to_string(n) + " of " +
                                std::to_string(available) + " candidates");
  }
}

struct Scored {
  bool flipped;
  double score;
  std::int64_t id;
  std::size_t index;
};

SelectionResult take_smallest(std::vector<Scored> scored, std::size_t n,
                              const std::vector<Byproduct>& byproducts) {
  auto key = [](const Scored& s) { return std::make_tuple(!s.flipped, s.score, s.id); };
  std::sort(scored.begin(), scored.end(),
            [&](const Scored& a, const Scored& b) { return key(a) < key(b); });
  SelectionResult out;
  for (std::size_t i = 0; i < n; ++i) {
    out.chosen_ids.push_back(scored[i].id);
    const Byproduct& bp = byproducts[scored[i].index];
    if (bp.adversarial) out.byproducts.emplace(scored[i].id, bp);
  }
  return out;
}

}  // namespace

SelectionResult select_random(std::span<const std::int64_t> pool_ids, std::size_t n,
                              std::mt19937_64& rng) {
  check_count(n, pool_ids.size());
  std::vector<std::int64_t> ids(pool_ids.begin(), pool_ids.end());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(n);
  return SelectionResult{std::move(ids), {}};
}

SelectionResult select_fvaal(const MlpModel& model, std::span<const Sample> candidates,
                             std::size_t n, const AttackParams& params, int workers) {
  check_count(n, candidates.size());
  params.validate();
  std::vector<Scored> scored(candidates.size());
  std::vector<Byproduct> byproducts(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    const MarginEstimate m = margin_by_binary_search(model, candidates[i].features, params);
    scored[i] = Scored{m.flipped, m.flipped ? m.eps_star : 1.0, candidates[i].id, i};
    if (m.flipped) byproducts[i] = Byproduct{m.adversarial, m.eps_star};
  });
  return take_smallest(std::move(scored), n, byproducts);
}

SelectionResult select_dfal(const MlpModel& model, std::span<const Sample> candidates,
                            std::size_t n, const AttackParams& params, int workers) {
  check_count(n, candidates.size());
  params.validate();
  std::vector<Scored> scored(candidates.size());
  std::vector<Byproduct> byproducts(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    const DeepFoolResult d = deepfool(model, candidates[i].features, params);
    scored[i] = Scored{d.flipped, d.perturbation_norm, candidates[i].id, i};
    if (d.flipped) byproducts[i] = Byproduct{d.adversarial, d.perturbation_linf};
  });
  return take_smallest(std::move(scored), n, byproducts);
}

Vector badge_embedding(const MlpModel& model, const Vector& x) {
  const Vector hidden = penultimate(model, x);
  const Vector logits = model.w2 * hidden + model.b2;
  Vector coef = softmax(logits);
  coef(argmax(logits)) -= 1.0;
  const Eigen::Index h = hidden.size();
  Vector emb(coef.size() * h);
  for (Eigen::Index c = 0; c < coef.size(); ++c) emb.segment(c * h, h) = coef(c) * hidden;
  return emb;
}

std::vector<Vector> badge_embeddings(const MlpModel& model, std::span<const Sample> candidates,
                                     int workers) {
  std::vector<Vector> out(candidates.size());
  parallel_for(candidates.size(), workers,
               [&](std::size_t i) { out[i] = badge_embedding(model, candidates[i].features); });
  return out;
}

std::vector<std::size_t> kmeanspp_select(std::span<const Vector> embeddings, std::size_t n,
                                         std::mt19937_64& rng) {
  check_count(n, embeddings.size());
  std::vector<std::size_t> chosen;
  if (n == 0) return chosen;
  std::vector<char> taken(embeddings.size(), 0);
  std::vector<double> nearest(embeddings.size(), std::numeric_limits<double>::infinity());

  auto uniform_remaining = [&] {
    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (!taken[i]) remaining.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    return remaining[pick(rng)];
  };

  std::size_t next = uniform_remaining();
  for (;;) {
    chosen.push_back(next);
    taken[next] = 1;
    if (chosen.size() == n) break;
    double total = 0.0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], (embeddings[i] - embeddings[next]).squaredNorm());
      total += nearest[i];
    }
    if (!(total > 0.0)) {
      next = uniform_remaining();
      continue;
    }
    std::uniform_real_distribution<double> draw(0.0, total);
    const double target = draw(rng);
    double acc = 0.0;
    std::size_t last_positive = embeddings.size();
    next = embeddings.size();
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (taken[i] || nearest[i] <= 0.0) continue;
      last_positive = i;
      acc += nearest[i];
      if (acc > target) {
        next = i;
        break;
      }
    }
    // Rounding can leave target just above the accumulated sum.
    if (next == embeddings.size()) next = last_positive;
  }
  return chosen;
}

SelectionResult select_badge(const MlpModel& model, std::span<const Sample> candidates,
                             std::size_t n, std::mt19937_64& rng, int workers) {
  check_count(n, candidates.size());
  const std::vector<Vector> emb = badge_embeddings(model, candidates, workers);
  SelectionResult out;
  for (std::size_t i : kmeanspp_select(emb, n, rng)) out.chosen_ids.push_back(candidates[i].id);
  return out;
}

}  // namespace veriaug
