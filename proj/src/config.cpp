#include "veriaug/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace veriaug {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& problem) {
  throw ConfigError("config field '" + field + "': " + problem);
}

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const std::string field = where.empty() ? key : where + "." + key;
  const json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(field, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(field, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(field, "expected an integer");
      if (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0) fail(field, "must be non-negative");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(field, "expected a number");
    } else {
      if (!v.is_array()) fail(field, "expected an array");
    }
    out = v.get<T>();
  } catch (const json::exception& e) {
    fail(field, e.what());
  }
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

std::vector<ExperimentConfig> ExperimentPlan::cells() const {
  std::vector<ExperimentConfig> out;
  for (Strategy s : strategies) {
    for (Augmentation a : augmentations) {
      ExperimentConfig c = base;
      c.strategy = s;
      c.augmentation = a;
      out.push_back(c);
    }
  }
  return out;
}

std::string cell_name(const ExperimentConfig& config) {
  return std::string(to_string(config.strategy)) + "_" + to_string(config.augmentation);
}

ExperimentPlan parse_plan(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(line_of(json_text, e.byte)) +
                      ": malformed JSON");
  }
  reject_unknown(root, "",
                 {"dataset", "strategies", "augmentations", "n_init", "rounds", "n_sub",
                  "n_query", "n_adv", "hidden_dim", "train", "attack", "harvest",
                  "fgsm_eps_range", "fixed_query_eps", "margin_slack", "seed", "runs", "workers",
                  "record_timings", "diversity_cap"});

  ExperimentPlan plan;
  ExperimentConfig& c = plan.base;

  if (root.contains("dataset")) {
    const json& d = root["dataset"];
    reject_unknown(d, "dataset",
                   {"kind", "images", "labels", "test_images", "test_labels", "batches",
                    "test_batches", "train_count", "test_count", "split_seed", "blobs_dim",
                    "blobs_classes", "blobs_spread"});
    DatasetSpec& s = c.dataset;
    read(d, "dataset", "kind", s.kind);
    read(d, "dataset", "images", s.images);
    read(d, "dataset", "labels", s.labels);
    read(d, "dataset", "test_images", s.test_images);
    read(d, "dataset", "test_labels", s.test_labels);
    read(d, "dataset", "batches", s.batches);
    read(d, "dataset", "test_batches", s.test_batches);
    read(d, "dataset", "train_count", s.train_count);
    read(d, "dataset", "test_count", s.test_count);
    read(d, "dataset", "split_seed", s.split_seed);
    read(d, "dataset", "blobs_dim", s.blobs_dim);
    read(d, "dataset", "blobs_classes", s.blobs_classes);
    read(d, "dataset", "blobs_spread", s.blobs_spread);
    if (s.kind != "idx" && s.kind != "cifar10" && s.kind != "blobs") {
      fail("dataset.kind", "expected idx, cifar10 or blobs");
    }
    if (s.kind == "idx" && (s.images.empty() || s.labels.empty())) {
      fail("dataset.images", "idx datasets need images and labels");
    }
    if (s.kind == "cifar10" && s.batches.empty()) fail("dataset.batches", "cifar10 needs batches");
    if (s.train_count == 0) fail("dataset.train_count", "must be positive");
    if (s.test_count == 0) fail("dataset.test_count", "must be positive");
  }

  std::vector<std::string> names{"random"};
  read(root, "", "strategies", names);
  for (const auto& n : names) {
    try {
      plan.strategies.push_back(parse_strategy(n));
    } catch (const std::invalid_argument& e) {
      fail("strategies", e.what());
    }
  }
  names = {"none"};
  read(root, "", "augmentations", names);
  for (const auto& n : names) {
    try {
      plan.augmentations.push_back(parse_augmentation(n));
    } catch (const std::invalid_argument& e) {
      fail("augmentations", e.what());
    }
  }
  if (plan.strategies.empty()) fail("strategies", "must not be empty");
  if (plan.augmentations.empty()) fail("augmentations", "must not be empty");

  read(root, "", "n_init", c.n_init);
  read(root, "", "rounds", c.rounds);
  read(root, "", "n_sub", c.n_sub);
  read(root, "", "n_query", c.n_query);
  read(root, "", "n_adv", c.n_adv);
  read(root, "", "hidden_dim", c.hidden_dim);
  read(root, "", "fixed_query_eps", c.fixed_query_eps);
  read(root, "", "margin_slack", c.margin_slack);
  read(root, "", "seed", c.seed);
  read(root, "", "runs", c.runs);
  read(root, "", "workers", c.workers);
  read(root, "", "record_timings", c.record_timings);
  read(root, "", "diversity_cap", plan.diversity_cap);

  if (root.contains("fgsm_eps_range")) {
    std::vector<double> range;
    read(root, "", "fgsm_eps_range", range);
    if (range.size() != 2) fail("fgsm_eps_range", "expected [low, high]");
    c.fgsm_eps_low = range[0];
    c.fgsm_eps_high = range[1];
  }
  if (root.contains("train")) {
    const json& t = root["train"];
    reject_unknown(t, "train", {"epochs", "batch_size", "learning_rate"});
    read(t, "train", "epochs", c.train.epochs);
    read(t, "train", "batch_size", c.train.batch_size);
    read(t, "train", "learning_rate", c.train.learning_rate);
  }
  if (root.contains("attack")) {
    const json& a = root["attack"];
    reject_unknown(a, "attack", {"tolerance", "deepfool_max_iter", "deepfool_overshoot"});
    read(a, "attack", "tolerance", c.attack.tolerance);
    read(a, "attack", "deepfool_max_iter", c.attack.deepfool_max_iter);
    read(a, "attack", "deepfool_overshoot", c.attack.deepfool_overshoot);
  }
  if (root.contains("harvest")) {
    const json& h = root["harvest"];
    reject_unknown(h, "harvest",
                   {"time_limit_secs", "eps_increment", "eps_max", "exclusion_radius",
                    "node_limit"});
    double secs = c.harvest.time_limit.count();
    read(h, "harvest", "time_limit_secs", secs);
    c.harvest.time_limit = std::chrono::duration<double>(secs);
    read(h, "harvest", "eps_increment", c.harvest.eps_increment);
    read(h, "harvest", "eps_max", c.harvest.eps_max);
    read(h, "harvest", "exclusion_radius", c.harvest.exclusion_radius);
    read(h, "harvest", "node_limit", c.harvest.node_limit);
  }
  if (plan.diversity_cap < 1) fail("diversity_cap", "must be positive");

  for (const ExperimentConfig& cell : plan.cells()) {
    try {
      cell.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid config for cell ") + cell_name(cell) + ": " +
                        e.what());
    }
  }
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

}  // namespace veriaug
