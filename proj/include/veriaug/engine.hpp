#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "veriaug/attacks.hpp"
#include "veriaug/data.hpp"
#include "veriaug/metrics.hpp"
#include "veriaug/nn.hpp"
#include "veriaug/strategies.hpp"
#include "veriaug/verifier.hpp"

namespace veriaug {

enum class Augmentation { None, FgsmAdv, FvAdv, NativeSingle };

const char* to_string(Augmentation a);
Augmentation parse_augmentation(const std::string& name);

/// Where the pool and test splits come from. Relative paths resolve against
/// the data root handed to load_datasets.
struct DatasetSpec {
  std::string kind = "blobs";  // idx | cifar10 | blobs
  std::string images;
  std::string labels;
  /// Separate test files; when empty the test split is carved from the same file.
  std::string test_images;
  std::string test_labels;
  std::vector<std::string> batches;
  std::vector<std::string> test_batches;
  std::size_t train_count = 300;
  std::size_t test_count = 100;
  std::uint64_t split_seed = 0;
  int blobs_dim = 4;
  int blobs_classes = 3;
  double blobs_spread = 0.08;
};

/// Pool (unlabeled, oracle-backed) and held-out test split.
std::pair<Dataset, Dataset> load_datasets(const DatasetSpec& spec,
                                          const std::filesystem::path& root);

struct ExperimentConfig {
  DatasetSpec dataset;
  Strategy strategy = Strategy::Random;
  Augmentation augmentation = Augmentation::None;
  /// 0 means "same as n_query".
  std::size_t n_init = 0;
  int rounds = 10;
  std::size_t n_sub = 1000;
  std::size_t n_query = 20;
  int n_adv = 10;
  int hidden_dim = 32;
  TrainConfig train;
  AttackParams attack;
  HarvestParams harvest;
  double fgsm_eps_low = 0.05;
  double fgsm_eps_high = 0.1;
  double fixed_query_eps = 0.01;
  /// Slack added to a strategy's margin when seeding the verifier epsilon.
  double margin_slack = 0.05;
  std::uint64_t seed = 0;
  int runs = 5;
  /// 0 uses the available hardware parallelism; results do not depend on it.
  int workers = 0;
  /// When false the *_ms record fields are written as 0 so CSVs are
  /// byte-reproducible.
  bool record_timings = true;

  std::size_t initial_size() const { return n_init == 0 ? n_query : n_init; }
  void validate() const;
};

/// Ground-truth label source that counts every query.
class Oracle {
 public:
  explicit Oracle(const Dataset& pool) : pool_(&pool) {}
  int label(std::int64_t id);
  std::uint64_t calls() const { return calls_; }

 private:
  const Dataset* pool_;
  std::uint64_t calls_ = 0;
};

struct AugmentResult {
  std::vector<Sample> samples;
  /// Extra points per source sample, in batch order.
  std::vector<std::vector<Vector>> per_source;
  std::int64_t sat = 0;
  std::int64_t unsat = 0;
  std::int64_t timeout = 0;
};

/// Extra labeled points for a freshly labeled batch. `byproducts` is the
/// selection's per-id byproduct map; every output carries its source's label.
AugmentResult augment(const MlpModel& model, const std::vector<Sample>& batch,
                      const std::map<std::int64_t, Byproduct>& byproducts,
                      Augmentation mode, const ExperimentConfig& config);

/// FGSM epsilon grid: `count` values evenly spaced over [low, high]
/// inclusive; a single value sits at `low`.
std::vector<double> fgsm_grid(double low, double high, int count);

struct RunResult {
  int run = 0;
  std::vector<RoundRecord> rounds;
  MlpModel final_model;
  /// Model that selected and augmented the last batch.
  MlpModel final_selector;
  std::vector<std::vector<Vector>> final_adv_sets;
  /// Queried inputs of the last batch, aligned with final_adv_sets.
  std::vector<Vector> final_sources;
  std::uint64_t oracle_calls = 0;
  /// Augmented points that the selecting model did not misclassify, or that
  /// left [0, 1]^d. Always expected to be zero.
  std::uint64_t augment_violations = 0;
};

using ProgressSink = std::function<void(const std::string&)>;

/// Runs config.runs independent active-learning runs (run r uses seed + r).
/// Throws std::logic_error if the oracle budget is not exactly
/// n_init + completed_rounds * n_query.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, const Dataset& pool,
                                      const Dataset& test, const ProgressSink& progress = {});

/// Mixes values into a well-spread 64-bit seed.
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace veriaug
