#include "veriaug/simplex.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace veriaug::lp {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check(const Problem& p) {
  const auto n = p.cost.size();
  if (p.rows.cols() != n || p.lower.size() != n || p.upper.size() != n ||
      p.rhs.size() != p.rows.rows()) {
    throw std::invalid_argument("lp: inconsistent problem dimensions");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(p.lower(j)) || !std::isfinite(p.upper(j))) {
      throw std::invalid_argument("lp: structural bounds must be finite");
    }
  }
}

}  // namespace

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Cutoff: return "cutoff";
    case Status::IterationLimit: return "iteration-limit";
  }
  return "?";
}

// Bounded-variable dual simplex on a dense tableau. Slack columns n..n+m-1
// have bounds [0, +inf) and form the starting basis.
Result solve(const Problem& p, const Options& opt) {
  check(p);
  const Eigen::Index n = p.cost.size();
  const Eigen::Index m = p.rows.rows();
  const Eigen::Index total = n + m;

  Result result;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (p.lower(j) > p.upper(j)) {
      result.status = Status::Infeasible;
      result.values = p.lower;
      return result;
    }
  }

  RowMajor tab(m, total);
  tab.leftCols(n) = p.rows;
  tab.rightCols(m).setIdentity();

  Vector lo(total), hi(total), cost(total);
  lo.head(n) = p.lower;
  hi.head(n) = p.upper;
  cost.head(n) = p.cost;
  lo.tail(m).setZero();
  hi.tail(m).setConstant(kInf);
  cost.tail(m).setZero();

  // Nonbasic placement that makes every reduced cost dual feasible.
  std::vector<char> at_upper(static_cast<std::size_t>(total), 0);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::vector<Eigen::Index> row_of(static_cast<std::size_t>(total), -1);
  Vector value(total);
  for (Eigen::Index j = 0; j < n; ++j) {
    at_upper[j] = p.cost(j) < 0.0;
    value(j) = at_upper[j] ? hi(j) : lo(j);
  }
  Vector beta = p.rhs - p.rows * value.head(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    basis[r] = n + r;
    row_of[n + r] = r;
    value(n + r) = beta(r);
  }
  Vector reduced = cost;

  auto objective = [&] {
    double obj = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) obj += cost(j) * value(j);
    return obj;
  };

  const std::int64_t max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * (m + n) + 100;
  for (std::int64_t iter = 0;; ++iter) {
    // Leaving row: largest bound violation, lowest row on ties.
    Eigen::Index leave = -1;
    double worst = opt.feasibility_tol;
    bool below = false;
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index b = basis[r];
      const double under = lo(b) - beta(r);
      const double over = beta(r) - hi(b);
      if (under > worst) {
        worst = under;
        leave = r;
        below = true;
      } else if (over > worst) {
        worst = over;
        leave = r;
        below = false;
      }
    }
    result.iterations = iter;
    if (leave < 0) {
      result.status = Status::Optimal;
      break;
    }
    if (objective() >= opt.cutoff) {
      result.status = Status::Cutoff;
      break;
    }
    if (iter >= max_iter) {
      result.status = Status::IterationLimit;
      break;
    }

    // Dual ratio test over nonbasic columns that can move the leaving
    // variable towards its violated bound.
    Eigen::Index enter = -1;
    double best_ratio = kInf;
    double best_alpha = 0.0;
    for (Eigen::Index j = 0; j < total; ++j) {
      if (row_of[j] >= 0 || lo(j) == hi(j)) continue;
      const double alpha = tab(leave, j);
      if (std::abs(alpha) <= opt.pivot_tol) continue;
      const bool increases_leaving = at_upper[j] ? alpha > 0.0 : alpha < 0.0;
      if (increases_leaving != below) continue;
      const double ratio = std::abs(reduced(j)) / std::abs(alpha);
      if (ratio < best_ratio - 1e-12 ||
          (ratio <= best_ratio + 1e-12 && std::abs(alpha) > std::abs(best_alpha))) {
        best_ratio = ratio;
        best_alpha = alpha;
        enter = j;
      }
    }
    if (enter < 0) {
      result.status = Status::Infeasible;
      break;
    }

    const Eigen::Index leaving_var = basis[leave];
    const double target = below ? lo(leaving_var) : hi(leaving_var);
    const double alpha = tab(leave, enter);
    const double delta = (beta(leave) - target) / alpha;

    beta -= delta * tab.col(enter);
    beta(leave) = value(enter) + delta;

    tab.row(leave) /= alpha;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r == leave) continue;
      const double f = tab(r, enter);
      if (f != 0.0) tab.row(r) -= f * tab.row(leave);
    }
    reduced -= reduced(enter) * tab.row(leave).transpose();
    reduced(enter) = 0.0;

    row_of[enter] = leave;
    row_of[leaving_var] = -1;
    basis[leave] = enter;
    at_upper[leaving_var] = below ? 0 : 1;
    value(leaving_var) = target;
    for (Eigen::Index r = 0; r < m; ++r) value(basis[r]) = beta(r);
  }

  result.values = value.head(n);
  result.objective = objective();
  return result;
}

}  // namespace veriaug::lp
