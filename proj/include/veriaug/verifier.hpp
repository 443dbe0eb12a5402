#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "veriaug/nn.hpp"

namespace veriaug {

/// Axis-aligned input region inside [0, 1]^d.
struct Box {
  Vector lower;
  Vector upper;

  /// [x - eps, x + eps] intersected with [0, 1]^d.
  static Box around(const Vector& center, double eps);

  bool contains(const Vector& point, double tol = 0.0) const;
  bool empty() const;
};

/// Removes a slab around an earlier counterexample on one coordinate:
///   x[j] <= point[j] - radius  or  x[j] >= point[j] + radius
/// where j is the coordinate on which `point` lies farthest from the query
/// center (lowest index on ties).
struct Exclusion {
  Vector point;
  double radius = 1e-4;
};

/// "Is there an input in the eps-box around `center` (within [0,1]^d) with
/// logit[target] > logit[source], outside every exclusion?"
struct RobustnessQuery {
  Vector center;
  double epsilon = 0.0;
  int source_class = 0;
  int target_class = 1;
  std::vector<Exclusion> exclusions;

  /// Query with source = predict(center) and target = runner-up class.
  static RobustnessQuery runner_up(const MlpModel& model, const Vector& center, double epsilon,
                                   std::vector<Exclusion> exclusions = {});

  Box box() const { return Box::around(center, epsilon); }
  void validate(const MlpModel& model) const;
};

enum class VerdictKind { Sat, Unsat, Timeout };

const char* to_string(VerdictKind kind);

struct Verdict {
  VerdictKind kind = VerdictKind::Timeout;
  std::optional<Vector> witness;
  std::uint64_t nodes_explored = 0;
  std::uint64_t lp_solves = 0;
  double wall_ms = 0.0;
  /// True when a numerical failure in the LP kernel left part of the search
  /// undecided; such a search never reports Unsat.
  bool incomplete = false;
};

/// Interval bounds over a box. Pre-activation intervals are exact for the
/// single affine layer; the objective interval for logit[target] -
/// logit[source] uses hidden outputs in [relu(l), relu(u)].
struct SymbolicBounds {
  Vector pre_lower;
  Vector pre_upper;
  double objective_lower = 0.0;
  double objective_upper = 0.0;
};

SymbolicBounds symbolic_bounds(const MlpModel& model, const Box& box, int source_class,
                               int target_class);

struct SolveLimits {
  std::chrono::duration<double> time_limit = std::chrono::seconds(5);
  /// Deterministic budget on branch-and-bound nodes; 0 disables it.
  std::uint64_t node_limit = 0;
};

/// Objective margin an LP leaf must reach for logit[target] - logit[source] > 0.
inline constexpr double kStrictness = 1e-6;

/// Complete branch-and-bound over hidden-neuron phases with LP leaves.
/// Depth-first; the "pre-activation <= 0" child and the "x[j] <= p - r"
/// exclusion child are explored first.
Verdict solve(const MlpModel& model, const RobustnessQuery& query, const SolveLimits& limits = {});

/// Forward-pass check of a counterexample: inside the query box, outside all
/// exclusions, logit[target] - logit[source] >= kStrictness / 2 and argmax
/// differs from the source class.
bool validate_witness(const MlpModel& model, const RobustnessQuery& query, const Vector& witness);

/// Coordinate an exclusion constrains for a query centered at `center`.
Eigen::Index exclusion_coordinate(const Exclusion& exclusion, const Vector& center);

struct HarvestParams {
  int k = 10;
  std::chrono::duration<double> time_limit = std::chrono::seconds(5);
  double eps_increment = 0.05;
  double eps_max = 0.5;
  double exclusion_radius = 1e-4;
  /// Deterministic node budget over the whole harvest; 0 disables it.
  std::uint64_t node_limit = 0;

  void validate() const;
};

struct HarvestStep {
  double epsilon = 0.0;
  VerdictKind verdict = VerdictKind::Timeout;
  std::uint64_t nodes = 0;
  double millis = 0.0;
};

struct HarvestResult {
  std::vector<Vector> points;
  std::vector<HarvestStep> trace;
  double final_epsilon = 0.0;
  int source_class = 0;
  int target_class = 0;
};

/// One line per solve call: "eps=<e> verdict=<v> nodes=<n> ms=<t>".
using TraceSink = std::function<void(const std::string&)>;

/// Repeated solve calls collecting up to k distinct counterexamples around x.
/// Starts at min(eps0, eps_max); Unsat raises eps by eps_increment, Timeout
/// or an exhausted budget stops.
HarvestResult harvest(const MlpModel& model, const Vector& x, const HarvestParams& params,
                      double eps0, const TraceSink& trace = {});

std::string format_trace_line(const HarvestStep& step);

}  // namespace veriaug
