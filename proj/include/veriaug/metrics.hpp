#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "veriaug/nn.hpp"

namespace veriaug {

/// One active-learning round of one run.
struct RoundRecord {
  int run = 0;
  int round = 0;
  std::int64_t labeled = 0;
  double accuracy = 0.0;
  std::int64_t adv_added = 0;
  std::int64_t sat = 0;
  std::int64_t unsat = 0;
  std::int64_t timeout = 0;
  double select_ms = 0.0;
  double verify_ms = 0.0;
  double train_ms = 0.0;

  bool operator==(const RoundRecord&) const = default;
};

struct CurvePoint {
  double budget = 0.0;
  double accuracy = 0.0;
};

/// Trapezoidal area under accuracy-vs-budget, divided by the budget span.
/// Needs at least two points with strictly increasing budgets.
double aubc(std::span<const CurvePoint> curve);

/// Accuracy-vs-labeled curve of a single run.
std::vector<CurvePoint> run_curve(std::span<const RoundRecord> records, int run);

/// Per-round mean accuracy across runs, for rounds present in every run.
std::vector<CurvePoint> mean_curve(std::span<const RoundRecord> records);

struct DiversityStat {
  double mean = 0.0;
  double std = 0.0;
  std::uint64_t pair_count = 0;
};

/// Mean and population standard deviation of all pairwise Euclidean distances.
DiversityStat pairwise_distance_stat(std::span<const Vector> points);

/// Pairwise penultimate-embedding distances over the adversarial sets of up to
/// `sample_cap` sources (uniformly subsampled when there are more).
DiversityStat diversity(const MlpModel& model, const std::vector<std::vector<Vector>>& adv_sets,
                        std::size_t sample_cap, std::mt19937_64& rng);

/// Law of total variance across runs (population convention).
DiversityStat aggregate_runs(std::span<const DiversityStat> stats);

inline constexpr const char* kCsvHeader =
    "run,round,labeled,accuracy,adv_added,sat,unsat,timeout,select_ms,verify_ms,train_ms";

std::string to_csv(std::span<const RoundRecord> records);
std::vector<RoundRecord> parse_csv(const std::string& text);
void write_csv(std::span<const RoundRecord> records, const std::filesystem::path& path);
std::vector<RoundRecord> read_csv(const std::filesystem::path& path);

struct LabeledCurve {
  std::string label;
  std::vector<CurvePoint> points;
};

/// SVG 1.1 line chart: one polyline per curve, axis ticks and a legend.
std::string curves_svg(std::span<const LabeledCurve> curves);
void render_curves_svg(std::span<const LabeledCurve> curves, const std::filesystem::path& path);

struct SummaryRow {
  std::string method;
  double aubc_mean = 0.0;
  double aubc_std = 0.0;
  double final_accuracy = 0.0;
  std::optional<DiversityStat> diversity;
};

/// Plain-text table. Best AUBC is wrapped in **, second best in __.
std::string summary_report(std::span<const SummaryRow> rows);

/// Writes text to a file, throwing IoError when it cannot.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace veriaug
