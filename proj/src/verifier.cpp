#include "veriaug/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "veriaug/simplex.hpp"

namespace veriaug {

Box Box::around(const Vector& center, double eps) {
  return Box{(center.array() - eps).cwiseMax(0.0).cwiseMin(1.0).matrix(),
             (center.array() + eps).cwiseMax(0.0).cwiseMin(1.0).matrix()};
}

bool Box::contains(const Vector& point, double tol) const {
  if (point.size() != lower.size()) return false;
  for (Eigen::Index j = 0; j < point.size(); ++j) {
    if (point(j) < lower(j) - tol || point(j) > upper(j) + tol) return false;
  }
  return true;
}

bool Box::empty() const {
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (lower(j) > upper(j)) return true;
  }
  return false;
}

const char* to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Sat: return "sat";
    case VerdictKind::Unsat: return "unsat";
    case VerdictKind::Timeout: return "timeout";
  }
  return "?";
}

RobustnessQuery RobustnessQuery::runner_up(const MlpModel& model, const Vector& center,
                                           double epsilon, std::vector<Exclusion> exclusions) {
  const Vector logits = forward(model, center);
  return RobustnessQuery{center, epsilon, argmax(logits), veriaug::runner_up(logits),
                         std::move(exclusions)};
}

void RobustnessQuery::validate(const MlpModel& model) const {
  if (center.size() != model.input_dim()) {
    throw std::invalid_argument("query center has the wrong dimension");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("query epsilon must be positive");
  }
  const int classes = model.num_classes();
  if (source_class < 0 || source_class >= classes || target_class < 0 ||
      target_class >= classes) {
    throw std::invalid_argument("query class index out of range");
  }
  if (source_class == target_class) {
    throw std::invalid_argument("query target class must differ from the source class");
  }
  for (const Exclusion& e : exclusions) {
    if (e.point.size() != center.size()) {
      throw std::invalid_argument("exclusion point has the wrong dimension");
    }
    if (!(e.radius > 0.0)) throw std::invalid_argument("exclusion radius must be positive");
  }
}

Eigen::Index exclusion_coordinate(const Exclusion& exclusion, const Vector& center) {
  Eigen::Index best = 0;
  double best_dist = -1.0;
  for (Eigen::Index j = 0; j < center.size(); ++j) {
    const double d = std::abs(exclusion.point(j) - center(j));
    if (d > best_dist) {
      best_dist = d;
      best = j;
    }
  }
  return best;
}

SymbolicBounds symbolic_bounds(const MlpModel& model, const Box& box, int source_class,
                               int target_class) {
  const Vector mid = (box.lower + box.upper) / 2.0;
  const Vector rad = (box.upper - box.lower) / 2.0;
  const Vector pre_mid = model.w1 * mid + model.b1;
  const Vector pre_rad = model.w1.cwiseAbs() * rad;
  SymbolicBounds b{pre_mid - pre_rad, pre_mid + pre_rad, 0.0, 0.0};

  const Vector gain = (model.w2.row(target_class) - model.w2.row(source_class)).transpose();
  double lo = model.b2(target_class) - model.b2(source_class);
  double hi = lo;
  for (Eigen::Index j = 0; j < gain.size(); ++j) {
    const double hl = std::max(b.pre_lower(j), 0.0);
    const double hu = std::max(b.pre_upper(j), 0.0);
    lo += std::min(gain(j) * hl, gain(j) * hu);
    hi += std::max(gain(j) * hl, gain(j) * hu);
  }
  b.objective_lower = lo;
  b.objective_upper = hi;
  return b;
}

bool validate_witness(const MlpModel& model, const RobustnessQuery& query, const Vector& witness) {
  if (witness.size() != query.center.size() || !witness.allFinite()) return false;
  if (!query.box().contains(witness, 1e-12)) return false;
  for (const Exclusion& e : query.exclusions) {
    const Eigen::Index j = exclusion_coordinate(e, query.center);
    if (std::abs(witness(j) - e.point(j)) < e.radius - 1e-12) return false;
  }
  const Vector logits = forward(model, witness);
  return logits(query.target_class) - logits(query.source_class) >= kStrictness / 2 &&
         argmax(logits) != query.source_class;
}

namespace {

enum Phase : std::int8_t { kInactive = -1, kFree = 0, kActive = 1 };

struct Node {
  Vector lower;
  Vector upper;
  std::vector<std::int8_t> phase;
  std::vector<char> resolved;
};

enum class NodeOutcome { Pruned, Sat, Branched, Undecided };

class BranchAndBound {
 public:
  BranchAndBound(const MlpModel& model, const RobustnessQuery& query, const SolveLimits& limits)
      : model_(model),
        query_(query),
        limits_(limits),
        abs_w1_(model.w1.cwiseAbs()),
        gain_((model.w2.row(query.target_class) - model.w2.row(query.source_class)).transpose()),
        offset_(model.b2(query.target_class) - model.b2(query.source_class)) {
    for (const Exclusion& e : query.exclusions) {
      excl_coord_.push_back(exclusion_coordinate(e, query.center));
    }
  }

  Verdict run() {
    const auto start = std::chrono::steady_clock::now();
    Verdict verdict;
    const Box root_box = query_.box();
    stack_.push_back(Node{root_box.lower, root_box.upper,
                          std::vector<std::int8_t>(static_cast<std::size_t>(model_.hidden_dim()),
                                                   kFree),
                          std::vector<char>(query_.exclusions.size(), 0)});
    bool incomplete = false;
    while (!stack_.empty()) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      if (elapsed > limits_.time_limit ||
          (limits_.node_limit > 0 && nodes_ >= limits_.node_limit)) {
        verdict.kind = VerdictKind::Timeout;
        finish(verdict, start);
        return verdict;
      }
      Node node = std::move(stack_.back());
      stack_.pop_back();
      ++nodes_;
      const NodeOutcome outcome = process(node);
      if (outcome == NodeOutcome::Sat) {
        verdict.kind = VerdictKind::Sat;
        verdict.witness = witness_;
        finish(verdict, start);
        return verdict;
      }
      if (outcome == NodeOutcome::Undecided) incomplete = true;
    }
    verdict.kind = incomplete ? VerdictKind::Timeout : VerdictKind::Unsat;
    verdict.incomplete = incomplete;
    finish(verdict, start);
    return verdict;
  }

 private:
  void finish(Verdict& v, std::chrono::steady_clock::time_point start) const {
    v.nodes_explored = nodes_;
    v.lp_solves = lp_solves_;
    v.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }

  NodeOutcome process(const Node& node) {
    const Eigen::Index dim = node.lower.size();
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (node.lower(j) > node.upper(j)) return NodeOutcome::Pruned;
    }
    const Vector mid = (node.lower + node.upper) / 2.0;
    const Vector rad = (node.upper - node.lower) / 2.0;
    const Vector pre_mid = model_.w1 * mid + model_.b1;
    const Vector pre_rad = abs_w1_ * rad;
    const Vector pre_lo = pre_mid - pre_rad;
    const Vector pre_hi = pre_mid + pre_rad;

    const int hidden = model_.hidden_dim();
    std::vector<std::int8_t> status(static_cast<std::size_t>(hidden), kFree);
    double obj_hi = offset_;
    for (int j = 0; j < hidden; ++j) {
      const std::int8_t ph = node.phase[j];
      if ((ph == kActive && pre_hi(j) < 0.0) || (ph == kInactive && pre_lo(j) > 0.0)) {
        return NodeOutcome::Pruned;
      }
      double h_lo = 0.0;
      double h_hi = std::max(pre_hi(j), 0.0);
      if (ph == kActive || (ph == kFree && pre_lo(j) >= 0.0)) {
        status[j] = kActive;
        h_lo = std::max(pre_lo(j), 0.0);
      } else if (ph == kInactive || (ph == kFree && pre_hi(j) <= 0.0)) {
        status[j] = kInactive;
        h_hi = 0.0;
      }
      obj_hi += std::max(gain_(j) * h_lo, gain_(j) * h_hi);
    }
    if (obj_hi <= 0.0) return NodeOutcome::Pruned;

    // LP over x and one relaxed output variable per free neuron (triangle
    // relaxation); with no free neurons it is exact for the network.
    std::vector<int> free_neurons;
    int rows = 0;
    for (int j = 0; j < hidden; ++j) {
      if (status[j] == kFree) {
        free_neurons.push_back(j);
        rows += 2;
      } else if (status[j] == kActive && pre_lo(j) < 0.0) {
        ++rows;
      } else if (status[j] == kInactive && pre_hi(j) > 0.0) {
        ++rows;
      }
    }
    const auto nf = static_cast<Eigen::Index>(free_neurons.size());
    lp::Problem lp;
    lp.rows = Matrix::Zero(rows, dim + nf);
    lp.rhs = Vector::Zero(rows);
    lp.cost = Vector::Zero(dim + nf);
    lp.lower.resize(dim + nf);
    lp.upper.resize(dim + nf);
    lp.lower.head(dim) = node.lower;
    lp.upper.head(dim) = node.upper;

    double constant = offset_;
    Eigen::Index r = 0;
    Eigen::Index f = 0;
    for (int j = 0; j < hidden; ++j) {
      const auto w = model_.w1.row(j);
      const double b = model_.b1(j);
      if (status[j] == kActive) {
        lp.cost.head(dim) -= gain_(j) * w.transpose();
        constant += gain_(j) * b;
        if (pre_lo(j) < 0.0) {
          lp.rows.row(r).head(dim) = -w;
          lp.rhs(r++) = b;
        }
      } else if (status[j] == kInactive) {
        if (pre_hi(j) > 0.0) {
          lp.rows.row(r).head(dim) = w;
          lp.rhs(r++) = -b;
        }
      } else {
        const Eigen::Index col = dim + f++;
        const double l = pre_lo(j);
        const double u = pre_hi(j);
        const double slope = u / (u - l);
        lp.lower(col) = 0.0;
        lp.upper(col) = u;
        lp.cost(col) = -gain_(j);
        // h >= w.x + b
        lp.rows.row(r).head(dim) = w;
        lp.rows(r, col) = -1.0;
        lp.rhs(r++) = -b;
        // h <= slope * (w.x + b - l)
        lp.rows.row(r).head(dim) = -slope * w;
        lp.rows(r, col) = 1.0;
        lp.rhs(r++) = slope * (b - l);
      }
    }

    lp::Options opt;
    opt.cutoff = constant - kStrictness;
    const lp::Result res = lp::solve(lp, opt);
    ++lp_solves_;
    if (res.status == lp::Status::Infeasible || res.status == lp::Status::Cutoff) {
      return NodeOutcome::Pruned;
    }
    if (res.status == lp::Status::Optimal && constant - res.objective < kStrictness) {
      return NodeOutcome::Pruned;
    }

    const int split = widest_free(free_neurons, pre_lo, pre_hi);
    if (res.status == lp::Status::Optimal) {
      Vector candidate = res.values.head(dim).cwiseMax(node.lower).cwiseMin(node.upper);
      if (forward_valid(candidate)) {
        const int violated = first_violated_exclusion(node, candidate);
        if (violated < 0) {
          witness_ = std::move(candidate);
          return NodeOutcome::Sat;
        }
        branch_exclusion(node, violated);
        return NodeOutcome::Branched;
      }
    }
    if (split >= 0) {
      branch_neuron(node, split);
      return NodeOutcome::Branched;
    }
    // Exact leaf whose LP optimum fails the forward check: numerical trouble.
    const int open = first_unresolved_exclusion(node);
    if (open >= 0) {
      branch_exclusion(node, open);
      return NodeOutcome::Branched;
    }
    return NodeOutcome::Undecided;
  }

  bool forward_valid(const Vector& x) const {
    const Vector logits = forward(model_, x);
    return logits(query_.target_class) - logits(query_.source_class) >= kStrictness / 2 &&
           argmax(logits) != query_.source_class;
  }

  static int widest_free(const std::vector<int>& free_neurons, const Vector& lo, const Vector& hi) {
    int best = -1;
    double width = -1.0;
    for (int j : free_neurons) {
      if (hi(j) - lo(j) > width) {
        width = hi(j) - lo(j);
        best = j;
      }
    }
    return best;
  }

  int first_violated_exclusion(const Node& node, const Vector& x) const {
    for (std::size_t e = 0; e < query_.exclusions.size(); ++e) {
      if (node.resolved[e]) continue;
      const Eigen::Index j = excl_coord_[e];
      const Exclusion& ex = query_.exclusions[e];
      if (std::abs(x(j) - ex.point(j)) < ex.radius) return static_cast<int>(e);
    }
    return -1;
  }

  int first_unresolved_exclusion(const Node& node) const {
    for (std::size_t e = 0; e < node.resolved.size(); ++e) {
      if (!node.resolved[e]) return static_cast<int>(e);
    }
    return -1;
  }

  // Children are pushed in reverse so the first-listed child is popped next.
  void branch_neuron(const Node& node, int j) {
    Node active = node;
    active.phase[j] = kActive;
    Node inactive = node;
    inactive.phase[j] = kInactive;
    stack_.push_back(std::move(active));
    stack_.push_back(std::move(inactive));
  }

  void branch_exclusion(const Node& node, int e) {
    const Eigen::Index j = excl_coord_[e];
    const Exclusion& ex = query_.exclusions[e];
    Node above = node;
    above.resolved[e] = 1;
    above.lower(j) = std::max(above.lower(j), ex.point(j) + ex.radius);
    Node below = node;
    below.resolved[e] = 1;
    below.upper(j) = std::min(below.upper(j), ex.point(j) - ex.radius);
    if (above.lower(j) <= above.upper(j)) stack_.push_back(std::move(above));
    if (below.lower(j) <= below.upper(j)) stack_.push_back(std::move(below));
  }

  const MlpModel& model_;
  const RobustnessQuery& query_;
  SolveLimits limits_;
  Matrix abs_w1_;
  Vector gain_;
  double offset_;
  std::vector<Eigen::Index> excl_coord_;
  std::vector<Node> stack_;
  Vector witness_;
  std::uint64_t nodes_ = 0;
  std::uint64_t lp_solves_ = 0;
};

}  // namespace

Verdict solve(const MlpModel& model, const RobustnessQuery& query, const SolveLimits& limits) {
  query.validate(model);
  BranchAndBound search(model, query, limits);
  return search.run();
}

void HarvestParams::validate() const {
  if (k <= 0) throw std::invalid_argument("harvest k must be positive");
  if (!(eps_increment > 0.0)) throw std::invalid_argument("eps_increment must be positive");
  if (!(eps_max > 0.0) || eps_max > 1.0) throw std::invalid_argument("eps_max must lie in (0, 1]");
  if (!(exclusion_radius > 0.0) || exclusion_radius >= eps_increment) {
    throw std::invalid_argument("exclusion_radius must be positive and below eps_increment");
  }
  if (time_limit.count() < 0.0) throw std::invalid_argument("time limit must be non-negative");
}

std::string format_trace_line(const HarvestStep& step) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "eps=%.6g verdict=%s nodes=%llu ms=%.3f", step.epsilon,
                to_string(step.verdict), static_cast<unsigned long long>(step.nodes), step.millis);
  return buf;
}

HarvestResult harvest(const MlpModel& model, const Vector& x, const HarvestParams& params,
                      double eps0, const TraceSink& trace) {
  params.validate();
  if (!(eps0 > 0.0)) throw std::invalid_argument("harvest eps0 must be positive");
  const Vector logits = forward(model, x);
  HarvestResult out;
  out.source_class = argmax(logits);
  out.target_class = runner_up(logits);

  const auto start = std::chrono::steady_clock::now();
  std::uint64_t nodes_used = 0;
  double eps = std::min(eps0, params.eps_max);
  while (static_cast<int>(out.points.size()) < params.k) {
    const std::chrono::duration<double> remaining =
        params.time_limit - (std::chrono::steady_clock::now() - start);
    if (remaining.count() <= 0.0) break;
    if (params.node_limit > 0 && nodes_used >= params.node_limit) break;

    RobustnessQuery query{x, eps, out.source_class, out.target_class, {}};
    for (const Vector& p : out.points) query.exclusions.push_back({p, params.exclusion_radius});
    SolveLimits limits{remaining, params.node_limit > 0 ? params.node_limit - nodes_used : 0};
    const Verdict v = solve(model, query, limits);
    nodes_used += v.nodes_explored;

    const HarvestStep step{eps, v.kind, v.nodes_explored, v.wall_ms};
    out.trace.push_back(step);
    if (trace) trace(format_trace_line(step));

    if (v.kind == VerdictKind::Sat) {
      out.points.push_back(*v.witness);
    } else if (v.kind == VerdictKind::Unsat) {
      eps += params.eps_increment;
      if (eps > params.eps_max + 1e-12) break;
    } else {
      break;
    }
  }
  out.final_epsilon = eps;
  return out;
}

}  // namespace veriaug
