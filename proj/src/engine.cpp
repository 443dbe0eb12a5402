#include "veriaug/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

#include "veriaug/parallel.hpp"

namespace veriaug {

const char* to_string(Augmentation a) {
  switch (a) {
    case Augmentation::None: return "none";
    case Augmentation::FgsmAdv: return "fgsm_adv";
    case Augmentation::FvAdv: return "fv_adv";
    case Augmentation::NativeSingle: return "native_single";
  }
  return "?";
}

Augmentation parse_augmentation(const std::string& name) {
  if (name == "none") return Augmentation::None;
  if (name == "fgsm_adv") return Augmentation::FgsmAdv;
  if (name == "fv_adv") return Augmentation::FvAdv;
  if (name == "native_single") return Augmentation::NativeSingle;
  throw std::invalid_argument("unknown augmentation '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer applied to a running combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

std::pair<Dataset, Dataset> load_datasets(const DatasetSpec& spec,
                                          const std::filesystem::path& root) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : root / path;
  };
  auto resolve_all = [&](const std::vector<std::string>& ps) {
    std::vector<std::filesystem::path> out;
    for (const auto& p : ps) out.push_back(resolve(p));
    return out;
  };

  if (spec.kind == "blobs") {
    const Dataset all =
        synthetic_blobs(spec.split_seed, static_cast<int>(spec.train_count + spec.test_count),
                        spec.blobs_dim, spec.blobs_classes, spec.blobs_spread);
    return split(all, spec.train_count, spec.test_count, spec.split_seed);
  }

  Dataset train_file;
  Dataset test_file;
  bool separate_test = false;
  if (spec.kind == "idx") {
    train_file = load_idx(resolve(spec.images), resolve(spec.labels));
    if (!spec.test_images.empty()) {
      test_file = load_idx(resolve(spec.test_images), resolve(spec.test_labels));
      separate_test = true;
    }
  } else if (spec.kind == "cifar10") {
    train_file = load_cifar10(resolve_all(spec.batches));
    if (!spec.test_batches.empty()) {
      test_file = load_cifar10(resolve_all(spec.test_batches));
      separate_test = true;
    }
  } else {
    throw std::invalid_argument("unknown dataset kind '" + spec.kind + "'");
  }

  if (!separate_test) {
    if (spec.train_count + spec.test_count > train_file.size()) {
      throw std::invalid_argument("dataset has " + std::to_string(train_file.size()) +
                                  " samples, fewer than train_count + test_count");
    }
    return split(train_file, spec.train_count, spec.test_count, spec.split_seed);
  }
  Dataset pool = subsample(train_file, spec.train_count, spec.split_seed);
  Dataset test = subsample(test_file, spec.test_count, derive_seed(spec.split_seed, 1, 0));
  test.num_classes = pool.num_classes = std::max(pool.num_classes, test.num_classes);
  return {std::move(pool), std::move(test)};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (n_query == 0) fail("n_query must be positive");
  if (rounds < 0) fail("rounds must be non-negative");
  if (n_sub == 0) fail("n_sub must be positive");
  if (n_adv <= 0) fail("n_adv must be positive");
  if (hidden_dim <= 0) fail("hidden_dim must be positive");
  if (runs <= 0) fail("runs must be positive");
  if (workers < 0) fail("workers must be non-negative");
  if (!(fgsm_eps_low >= 0.0 && fgsm_eps_low <= fgsm_eps_high && fgsm_eps_high <= 1.0)) {
    fail("fgsm_eps_range must satisfy 0 <= low <= high <= 1");
  }
  if (!(fixed_query_eps > 0.0 && fixed_query_eps <= 1.0)) fail("fixed_query_eps must be in (0, 1]");
  if (!(margin_slack >= 0.0)) fail("margin_slack must be non-negative");
  if (train.epochs <= 0 || train.batch_size <= 0 || !(train.learning_rate > 0.0)) {
    fail("train settings must be positive");
  }
  if (augmentation == Augmentation::NativeSingle && strategy != Strategy::Fvaal &&
      strategy != Strategy::Dfal) {
    fail("native_single augmentation needs the fvaal or dfal strategy");
  }
  attack.validate();
  harvest.validate();
}

int Oracle::label(std::int64_t id) {
  if (id < 0 || static_cast<std::size_t>(id) >= pool_->size()) {
    throw std::out_of_range("oracle asked for unknown id " + std::to_string(id));
  }
  ++calls_;
  return pool_->samples[static_cast<std::size_t>(id)].label;
}

std::vector<double> fgsm_grid(double low, double high, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {low};
  for (int i = 0; i < count; ++i) {
    out.push_back(low + (high - low) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

namespace {

// Misclassified with the margin verifier witnesses must meet, so a point on
// an exact logit tie never counts as adversarial.
bool clearly_misclassified(const MlpModel& model, int source, const Vector& p) {
  const Vector z = forward(model, p);
  const int top = argmax(z);
  return top != source && z(top) - z(source) >= kStrictness / 2.0;
}

}  // namespace

AugmentResult augment(const MlpModel& model, const std::vector<Sample>& batch,
                      const std::map<std::int64_t, Byproduct>& byproducts,
                      Augmentation mode, const ExperimentConfig& config) {
  AugmentResult out;
  out.per_source.resize(batch.size());
  if (mode == Augmentation::None) return out;

  struct PerSample {
    std::vector<Vector> points;
    std::int64_t sat = 0, unsat = 0, timeout = 0;
  };
  std::vector<PerSample> results(batch.size());

  parallel_for(batch.size(), config.workers, [&](std::size_t i) {
    const Sample& s = batch[i];
    PerSample& r = results[i];
    const int source = predict(model, s.features);
    const auto bp = byproducts.find(s.id);
    const bool native = bp != byproducts.end() && bp->second.adversarial.has_value() &&
                        clearly_misclassified(model, source, *bp->second.adversarial);
    if (native) r.points.push_back(*bp->second.adversarial);
    const int remaining = config.n_adv - (native ? 1 : 0);
    if (mode == Augmentation::NativeSingle || remaining <= 0) return;

    if (mode == Augmentation::FgsmAdv) {
      for (double eps : fgsm_grid(config.fgsm_eps_low, config.fgsm_eps_high, remaining)) {
        Vector adv = fgsm(model, s.features, source, eps);
        if (!clearly_misclassified(model, source, adv)) continue;
        const bool dup = std::any_of(r.points.begin(), r.points.end(),
                                     [&](const Vector& p) { return p == adv; });
        if (!dup) r.points.push_back(std::move(adv));
      }
      return;
    }

    HarvestParams hp = config.harvest;
    hp.k = remaining;
    double eps0 = config.fixed_query_eps;
    if (bp != byproducts.end() && bp->second.margin) eps0 = *bp->second.margin + config.margin_slack;
    const HarvestResult h = harvest(model, s.features, hp, eps0);
    for (const Vector& p : h.points) r.points.push_back(p);
    for (const HarvestStep& step : h.trace) {
      switch (step.verdict) {
        case VerdictKind::Sat: ++r.sat; break;
        case VerdictKind::Unsat: ++r.unsat; break;
        case VerdictKind::Timeout: ++r.timeout; break;
      }
    }
  });

  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (const Vector& p : results[i].points) {
      out.samples.push_back(Sample{p, batch[i].label, batch[i].id});
    }
    out.per_source[i] = std::move(results[i].points);
    out.sat += results[i].sat;
    out.unsat += results[i].unsat;
    out.timeout += results[i].timeout;
  }
  return out;
}

namespace {

enum SeedPurpose : std::uint64_t { kInitSet = 1, kSubsample, kSelect, kWeights, kShuffle };

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

MlpModel train_from_scratch(const ExperimentConfig& config, const Dataset& pool,
                            const std::vector<Sample>& data, std::uint64_t run_seed, int round) {
  MlpModel model = MlpModel::glorot(pool.input_dim, config.hidden_dim, pool.num_classes,
                                    derive_seed(run_seed, static_cast<std::uint64_t>(round), kWeights));
  AdamState state = AdamState::for_model(model);
  TrainConfig tc = config.train;
  tc.seed = derive_seed(run_seed, static_cast<std::uint64_t>(round), kShuffle);
  train(model, state, data, tc);
  return model;
}

std::uint64_t count_violations(const MlpModel& model, const std::vector<Sample>& batch,
                               const AugmentResult& aug) {
  std::uint64_t bad = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int source = predict(model, batch[i].features);
    for (const Vector& p : aug.per_source[i]) {
      if (predict(model, p) == source || p.minCoeff() < 0.0 || p.maxCoeff() > 1.0) ++bad;
    }
  }
  return bad;
}

RunResult run_once(const ExperimentConfig& config, const Dataset& pool, const Dataset& test,
                   int run, const ProgressSink& progress) {
  const std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(run);
  Oracle oracle(pool);
  RunResult result;
  result.run = run;

  std::vector<std::int64_t> unlabeled;
  for (const Sample& s : pool.samples) unlabeled.push_back(s.id);
  std::vector<Sample> labeled;
  std::vector<Sample> augmented;

  auto take = [&](const std::vector<std::int64_t>& ids) {
    std::vector<Sample> batch;
    for (std::int64_t id : ids) {
      const Sample& s = pool.samples[static_cast<std::size_t>(id)];
      batch.push_back(Sample{s.features, oracle.label(id), id});
    }
    const std::unordered_set<std::int64_t> gone(ids.begin(), ids.end());
    std::erase_if(unlabeled, [&](std::int64_t id) { return gone.contains(id); });
    return batch;
  };
  auto training_set = [&] {
    std::vector<Sample> all = labeled;
    all.insert(all.end(), augmented.begin(), augmented.end());
    return all;
  };
  auto report = [&](const RoundRecord& rec) {
    if (!progress) return;
    char line[256];
    std::snprintf(line, sizeof line,
                  "[%s/%s] run %d round %d labeled %lld acc %.4f adv %lld sat %lld unsat %lld "
                  "timeout %lld",
                  to_string(config.strategy), to_string(config.augmentation), run, rec.round,
                  static_cast<long long>(rec.labeled), rec.accuracy,
                  static_cast<long long>(rec.adv_added), static_cast<long long>(rec.sat),
                  static_cast<long long>(rec.unsat), static_cast<long long>(rec.timeout));
    progress(line);
  };

  const std::size_t n_init = std::min(config.initial_size(), unlabeled.size());
  {
    std::mt19937_64 rng(derive_seed(run_seed, 0, kInitSet));
    auto chosen = select_random(unlabeled, n_init, rng).chosen_ids;
    labeled = take(chosen);
  }
  auto t0 = Clock::now();
  MlpModel model = train_from_scratch(config, pool, training_set(), run_seed, 0);
  RoundRecord rec0;
  rec0.run = run;
  rec0.round = 0;
  rec0.labeled = static_cast<std::int64_t>(labeled.size());
  rec0.accuracy = accuracy(model, test.samples);
  rec0.train_ms = config.record_timings ? millis_since(t0) : 0.0;
  result.rounds.push_back(rec0);
  report(rec0);

  int completed = 0;
  for (int t = 1; t <= config.rounds; ++t) {
    if (unlabeled.size() < config.n_query) break;
    const auto round = static_cast<std::uint64_t>(t);
    RoundRecord rec;
    rec.run = run;
    rec.round = t;

    t0 = Clock::now();
    std::mt19937_64 sub_rng(derive_seed(run_seed, round, kSubsample));
    const std::size_t n_sub = std::min(config.n_sub, unlabeled.size());
    std::vector<std::int64_t> sub_ids = select_random(unlabeled, n_sub, sub_rng).chosen_ids;
    std::sort(sub_ids.begin(), sub_ids.end());
    std::vector<Sample> candidates;
    candidates.reserve(sub_ids.size());
    for (std::int64_t id : sub_ids) {
      // Labels stay hidden from strategies until the oracle is asked.
      candidates.push_back(Sample{pool.samples[static_cast<std::size_t>(id)].features, -1, id});
    }
    std::mt19937_64 sel_rng(derive_seed(run_seed, round, kSelect));
    SelectionResult sel;
    switch (config.strategy) {
      case Strategy::Random: sel = select_random(sub_ids, config.n_query, sel_rng); break;
      case Strategy::Fvaal:
        sel = select_fvaal(model, candidates, config.n_query, config.attack, config.workers);
        break;
      case Strategy::Dfal:
        sel = select_dfal(model, candidates, config.n_query, config.attack, config.workers);
        break;
      case Strategy::Badge:
        sel = select_badge(model, candidates, config.n_query, sel_rng, config.workers);
        break;
    }
    rec.select_ms = config.record_timings ? millis_since(t0) : 0.0;

    const std::vector<Sample> batch = take(sel.chosen_ids);

    t0 = Clock::now();
    AugmentResult aug = augment(model, batch, sel.byproducts, config.augmentation, config);
    rec.verify_ms = config.record_timings ? millis_since(t0) : 0.0;
    result.augment_violations += count_violations(model, batch, aug);
    rec.adv_added = static_cast<std::int64_t>(aug.samples.size());
    rec.sat = aug.sat;
    rec.unsat = aug.unsat;
    rec.timeout = aug.timeout;

    labeled.insert(labeled.end(), batch.begin(), batch.end());
    augmented.insert(augmented.end(), aug.samples.begin(), aug.samples.end());
    result.final_selector = model;
    result.final_adv_sets = std::move(aug.per_source);
    result.final_sources.clear();
    for (const Sample& s : batch) result.final_sources.push_back(s.features);

    t0 = Clock::now();
    model = train_from_scratch(config, pool, training_set(), run_seed, t);
    rec.train_ms = config.record_timings ? millis_since(t0) : 0.0;
    rec.labeled = static_cast<std::int64_t>(labeled.size());
    rec.accuracy = accuracy(model, test.samples);
    result.rounds.push_back(rec);
    report(rec);
    ++completed;
  }

  result.final_model = model;
  if (completed == 0) result.final_selector = model;
  result.oracle_calls = oracle.calls();
  const std::uint64_t expected = n_init + static_cast<std::uint64_t>(completed) * config.n_query;
  if (result.oracle_calls != expected) {
    throw std::logic_error("oracle budget violated: " + std::to_string(result.oracle_calls) +
                           " calls, expected " + std::to_string(expected));
  }
  return result;
}

}  // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& config, const Dataset& pool,
                                      const Dataset& test, const ProgressSink& progress) {
  config.validate();
  if (pool.empty()) throw std::invalid_argument("empty pool");
  if (test.empty()) throw std::invalid_argument("empty test split");
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.samples[i].id != static_cast<std::int64_t>(i)) {
      throw std::invalid_argument("pool ids must be 0..n-1 in order");
    }
  }
  std::vector<RunResult> out;
  for (int r = 0; r < config.runs; ++r) out.push_back(run_once(config, pool, test, r, progress));
  return out;
}

}  // namespace veriaug
