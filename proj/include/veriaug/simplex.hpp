#pragma once

#include <cstdint>
#include <limits>

#include "veriaug/nn.hpp"

namespace veriaug::lp {

/// minimize cost . v  subject to  rows * v <= rhs,  lower <= v <= upper.
/// Every structural variable must have finite bounds; that keeps the all-slack
/// starting basis dual feasible, so no phase 1 is needed.
struct Problem {
  Matrix rows;  // m x n
  Vector rhs;   // m
  Vector cost;  // n
  Vector lower; // n
  Vector upper; // n
};

enum class Status {
  Optimal,
  Infeasible,
  /// The dual bound reached `Options::cutoff`: the optimum is at least the cutoff.
  Cutoff,
  IterationLimit,
};

struct Options {
  double feasibility_tol = 1e-7;
  double pivot_tol = 1e-9;
  /// Stop as soon as the objective lower bound is >= cutoff.
  double cutoff = std::numeric_limits<double>::infinity();
  std::int64_t max_iterations = 0;  // 0: 50 * (m + n)
};

struct Result {
  Status status = Status::IterationLimit;
  /// Objective of the final basis. For Optimal this is the optimum; for
  /// Cutoff it is a valid lower bound.
  double objective = 0.0;
  Vector values;  // structural variables, n
  std::int64_t iterations = 0;
};

Result solve(const Problem& problem, const Options& options = {});

const char* to_string(Status status);

}  // namespace veriaug::lp
