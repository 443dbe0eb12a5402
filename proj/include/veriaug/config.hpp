#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "veriaug/engine.hpp"

namespace veriaug {

/// Invalid experiment configuration. The message names the line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A grid of experiment cells sharing every setting except strategy and
/// augmentation.
struct ExperimentPlan {
  ExperimentConfig base;
  std::vector<Strategy> strategies;
  std::vector<Augmentation> augmentations;
  std::size_t diversity_cap = 50;

  std::vector<ExperimentConfig> cells() const;
};

/// JSON object; every key is optional and unknown keys are rejected.
ExperimentPlan parse_plan(const std::string& json_text);
ExperimentPlan load_plan(const std::filesystem::path& path);

/// "<strategy>_<augmentation>", used for file names and labels.
std::string cell_name(const ExperimentConfig& config);

}  // namespace veriaug
