#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "veriaug/config.hpp"
#include "veriaug/engine.hpp"
#include "veriaug/metrics.hpp"

namespace veriaug {

struct CellOutcome {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  /// One entry per run with at least two rounds.
  std::vector<double> aubc_per_run;
  /// Per-run diversity of the final-round adversarial sets; empty optional
  /// when a run produced fewer than two adversarial points.
  std::vector<std::optional<DiversityStat>> diversity_per_run;
  std::optional<DiversityStat> diversity;
};

/// Runs every cell of the plan on one pool/test split and computes its
/// AUBC and diversity statistics.
std::vector<CellOutcome> run_plan(const ExperimentPlan& plan, const Dataset& pool,
                                  const Dataset& test, const ProgressSink& progress = {});

/// Writes <cell>.csv per cell, summary.txt, curves.svg and models/ into out_dir.
void write_outputs(const std::vector<CellOutcome>& cells, const std::filesystem::path& out_dir);

std::vector<SummaryRow> summary_rows(const std::vector<CellOutcome>& cells);

/// Data root: VERIAUG_DATA_ROOT when set, else the config file's directory.
std::filesystem::path data_root(const std::filesystem::path& config_path);

/// Entry point for the veriaug executable. Returns the process exit code:
/// 0 success, 1 runtime failure, 2 configuration or usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace veriaug
