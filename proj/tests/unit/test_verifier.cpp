#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "veriaug/verifier.hpp"

using namespace veriaug;

namespace {

// Margin around zero inside which the exact oracle's verdict is not compared:
// the solver needs logit[target] - logit[source] >= 1e-6 to certify Sat.
constexpr double kAmbiguous = 1e-5;

RobustnessQuery random_query(const MlpModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> eps(0.02, 0.4);
  return RobustnessQuery::runner_up(m, oracle::random_point(m.input_dim(), rng), eps(rng));
}

}  // namespace

TEST(Bounds, DegenerateBoxGivesPointIntervals) {
  const MlpModel m = oracle::random_model(4, 4, 3, 1);
  const Vector x = Vector::Constant(4, 0.3);
  const SymbolicBounds b = symbolic_bounds(m, Box{x, x}, 0, 2);
  const Vector pre = m.w1 * x + m.b1;
  const Vector z = forward(m, x);
  EXPECT_LT((b.pre_lower - pre).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b.pre_upper - pre).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(b.objective_lower, z(2) - z(0), 1e-12);
  EXPECT_NEAR(b.objective_upper, z(2) - z(0), 1e-12);
}

TEST(Bounds, ZeroWeightsGiveBiasIntervals) {
  MlpModel m = MlpModel::zeros(3, 2, 2);
  m.b1 << 0.5, -1.0;
  m.b2 << 2.0, 3.0;
  const SymbolicBounds b = symbolic_bounds(m, Box::around(Vector::Constant(3, 0.5), 0.2), 0, 1);
  EXPECT_EQ(b.pre_lower, m.b1);
  EXPECT_EQ(b.pre_upper, m.b1);
  EXPECT_DOUBLE_EQ(b.objective_lower, 1.0);
  EXPECT_DOUBLE_EQ(b.objective_upper, 1.0);
}

TEST(Bounds, MonteCarloContainment) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const MlpModel m = oracle::random_model(4, 4, 3, s);
    const Vector c = oracle::random_point(4, rng);
    const Box box = Box::around(c, 0.1);
    const SymbolicBounds b = symbolic_bounds(m, box, 0, 1);
    for (int t = 0; t < 1000; ++t) {
      Vector x(4);
      for (int i = 0; i < 4; ++i) {
        x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * (u(rng) + 1.0) / 2.0;
      }
      const Vector z = forward(m, x);
      const Vector pre = m.w1 * x + m.b1;
      ASSERT_GE(z(1) - z(0), b.objective_lower - 1e-12);
      ASSERT_LE(z(1) - z(0), b.objective_upper + 1e-12);
      ASSERT_TRUE(((pre - b.pre_lower).array() >= -1e-12).all());
      ASSERT_TRUE(((b.pre_upper - pre).array() >= -1e-12).all());
    }
  }
}

TEST(Box, AroundClampsToUnitCube) {
  Vector c(2);
  c << 0.05, 0.98;
  const Box b = Box::around(c, 0.1);
  EXPECT_DOUBLE_EQ(b.lower(0), 0.0);
  EXPECT_DOUBLE_EQ(b.upper(1), 1.0);
  EXPECT_FALSE(b.empty());
}

TEST(Solve, ConstantNetworkUnsatAtRoot) {
  MlpModel m = MlpModel::zeros(3, 2, 3);
  m.b2 << 1.0, 0.5, 0.2;
  RobustnessQuery q{Vector::Constant(3, 0.5), 0.3, 0, 1, {}};
  const Verdict v = solve(m, q);
  EXPECT_EQ(v.kind, VerdictKind::Unsat);
  EXPECT_EQ(v.nodes_explored, 1u);
}

TEST(Solve, BoundaryNetSatAboveHalf) {
  const MlpModel m = oracle::boundary_net();
  const auto q = RobustnessQuery::runner_up(m, Vector::Constant(1, 0.4), 0.2);
  EXPECT_EQ(q.source_class, 0);
  EXPECT_EQ(q.target_class, 1);
  const Verdict v = solve(m, q);
  ASSERT_EQ(v.kind, VerdictKind::Sat);
  EXPECT_GT((*v.witness)(0), 0.5);
  EXPECT_LE((*v.witness)(0), 0.4 + 0.2);
  EXPECT_TRUE(validate_witness(m, q, *v.witness));
  // Dense grid agrees that a flip exists in the box.
  bool grid_flip = false;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 0.2 + 0.4 * i / 4000.0;
    grid_flip |= predict(m, Vector::Constant(1, x)) == 1;
  }
  EXPECT_TRUE(grid_flip);
}

TEST(Solve, BoundaryNetUnsatBelowBoundary) {
  const MlpModel m = oracle::boundary_net();
  const auto q = RobustnessQuery::runner_up(m, Vector::Constant(1, 0.3), 0.15);
  EXPECT_EQ(solve(m, q).kind, VerdictKind::Unsat);
}

TEST(Solve, InvalidQueryThrows) {
  const MlpModel m = oracle::boundary_net();
  EXPECT_THROW(solve(m, RobustnessQuery{Vector::Constant(1, 0.3), 0.1, 0, 0, {}}),
               std::invalid_argument);
  EXPECT_THROW(solve(m, RobustnessQuery{Vector::Constant(1, 0.3), -0.1, 0, 1, {}}),
               std::invalid_argument);
  EXPECT_THROW(solve(m, RobustnessQuery{Vector::Constant(2, 0.3), 0.1, 0, 1, {}}),
               std::invalid_argument);
}

TEST(Solve, MatchesActivationPatternOracle) {
  std::mt19937_64 rng(2024);
  int compared = 0, sat = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const MlpModel m = oracle::random_model(2, 4, 3, 5000 + s);
    RobustnessQuery q = random_query(m, rng);
    const auto exact = oracle::exact_2d(m, q);
    const Verdict v = solve(m, q);
    if (v.witness) ASSERT_TRUE(validate_witness(m, q, *v.witness));
    if (std::abs(exact.best) < kAmbiguous || v.kind == VerdictKind::Timeout) continue;
    ++compared;
    const bool exact_sat = exact.best > 0.0;
    sat += exact_sat;
    EXPECT_EQ(v.kind, exact_sat ? VerdictKind::Sat : VerdictKind::Unsat) << "seed " << s;
  }
  EXPECT_GT(compared, 180);
  EXPECT_GT(sat, 20);
}

TEST(Solve, MatchesOracleWithExclusions) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int compared = 0;
  for (std::uint64_t s = 0; s < 150; ++s) {
    const MlpModel m = oracle::random_model(2, 4, 3, 9000 + s);
    RobustnessQuery q = random_query(m, rng);
    for (int e = 0; e < 2; ++e) {
      Vector p = q.center;
      p(0) += q.epsilon * u(rng);
      p(1) += q.epsilon * u(rng);
      q.exclusions.push_back(Exclusion{p, 0.05 * q.epsilon});
    }
    const auto exact = oracle::exact_2d(m, q);
    const Verdict v = solve(m, q);
    if (v.witness) ASSERT_TRUE(validate_witness(m, q, *v.witness));
    if (std::abs(exact.best) < kAmbiguous || v.kind == VerdictKind::Timeout) continue;
    ++compared;
    EXPECT_EQ(v.kind, exact.best > 0.0 ? VerdictKind::Sat : VerdictKind::Unsat) << "seed " << s;
  }
  EXPECT_GT(compared, 130);
}

TEST(Solve, SoundOnLargerRandomNets) {
  std::mt19937_64 rng(5);
  for (std::uint64_t s = 0; s < 150; ++s) {
    const int hidden = 2 + static_cast<int>(s % 7);
    const MlpModel m = oracle::random_model(6, hidden, 4, 300 + s, 0.7);
    const RobustnessQuery q = random_query(m, rng);
    const Verdict v = solve(m, q);
    if (v.kind == VerdictKind::Sat) {
      ASSERT_TRUE(v.witness.has_value());
      EXPECT_TRUE(validate_witness(m, q, *v.witness)) << "seed " << s;
    } else {
      EXPECT_FALSE(v.witness.has_value());
    }
  }
}

TEST(Solve, SatIsMonotoneInEpsilon) {
  std::mt19937_64 rng(19);
  int sat_pairs = 0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const MlpModel m = oracle::random_model(3, 5, 3, 700 + s);
    const Vector c = oracle::random_point(3, rng);
    const auto small = RobustnessQuery::runner_up(m, c, 0.05);
    if (solve(m, small).kind != VerdictKind::Sat) continue;
    ++sat_pairs;
    for (double eps : {0.1, 0.2, 0.5}) {
      EXPECT_EQ(solve(m, RobustnessQuery::runner_up(m, c, eps)).kind, VerdictKind::Sat);
    }
  }
  EXPECT_GT(sat_pairs, 5);
}

TEST(Solve, NodeLimitYieldsTimeout) {
  std::mt19937_64 rng(1);
  // A wide box on a many-neuron net cannot be decided in one node.
  for (std::uint64_t s = 0; s < 50; ++s) {
    const MlpModel m = oracle::random_model(4, 8, 3, 40 + s);
    const auto q = RobustnessQuery::runner_up(m, oracle::random_point(4, rng), 0.5);
    const Verdict full = solve(m, q);
    if (full.nodes_explored < 3 || full.kind == VerdictKind::Sat) continue;
    SolveLimits lim;
    lim.node_limit = 1;
    const Verdict v = solve(m, q, lim);
    EXPECT_EQ(v.kind, VerdictKind::Timeout);
    EXPECT_EQ(v.nodes_explored, 1u);
    return;
  }
  GTEST_SKIP() << "no multi-node Unsat query found";
}

TEST(Solve, DeterministicWitness) {
  std::mt19937_64 rng(4);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const MlpModel m = oracle::random_model(5, 6, 3, s);
    const auto q = RobustnessQuery::runner_up(m, oracle::random_point(5, rng), 0.3);
    const Verdict a = solve(m, q);
    const Verdict b = solve(m, q);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.nodes_explored, b.nodes_explored);
    if (a.witness) EXPECT_EQ(*a.witness, *b.witness);
  }
}

TEST(Harvest, ConstantClassifierEscalatesToEmpty) {
  MlpModel m = MlpModel::zeros(2, 2, 3);
  m.b2 << 1.0, 0.5, 0.2;
  HarvestParams p;
  p.k = 3;
  const HarvestResult h = harvest(m, Vector::Constant(2, 0.5), p, 0.01);
  EXPECT_TRUE(h.points.empty());
  ASSERT_FALSE(h.trace.empty());
  for (const auto& step : h.trace) EXPECT_EQ(step.verdict, VerdictKind::Unsat);
  EXPECT_LE(h.trace.back().epsilon, p.eps_max);
  EXPECT_GT(h.trace.back().epsilon + p.eps_increment, p.eps_max);
}

TEST(Harvest, KOneEqualsSingleSolve) {
  const MlpModel m = oracle::boundary_net();
  HarvestParams p;
  p.k = 1;
  const Vector x = Vector::Constant(1, 0.4);
  const HarvestResult h = harvest(m, x, p, 0.15);
  ASSERT_EQ(h.points.size(), 1u);
  const Verdict v = solve(m, RobustnessQuery::runner_up(m, x, 0.15));
  EXPECT_EQ(h.points[0], *v.witness);
}

TEST(Harvest, BoundaryNetThreeDistinctWitnesses) {
  const MlpModel m = oracle::boundary_net();
  HarvestParams p;
  p.k = 3;
  p.exclusion_radius = 1e-4;
  const HarvestResult h = harvest(m, Vector::Constant(1, 0.4), p, 0.15);
  ASSERT_EQ(h.points.size(), 3u);
  for (const Vector& w : h.points) {
    EXPECT_GT(w(0), 0.5);
    EXPECT_LE(w(0), 0.4 + h.final_epsilon + 1e-12);
    EXPECT_EQ(predict(m, w), 1);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      EXPECT_GE((h.points[i] - h.points[j]).cwiseAbs().maxCoeff(), 1e-4 - 1e-12);
    }
  }
}

TEST(Harvest, RandomNetsDistinctAndMisclassified) {
  std::mt19937_64 rng(12);
  int harvested = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const MlpModel m = oracle::random_model(3, 6, 3, 1200 + s);
    const Vector x = oracle::random_point(3, rng);
    HarvestParams p;
    p.k = 4;
    const HarvestResult h = harvest(m, x, p, 0.05);
    const int src = predict(m, x);
    for (std::size_t i = 0; i < h.points.size(); ++i) {
      ++harvested;
      EXPECT_NE(predict(m, h.points[i]), src);
      EXPECT_LE((h.points[i] - x).lpNorm<Eigen::Infinity>(), h.final_epsilon + 1e-12);
      EXPECT_GE(h.points[i].minCoeff(), 0.0);
      EXPECT_LE(h.points[i].maxCoeff(), 1.0);
      for (std::size_t j = 0; j < i; ++j) {
        EXPECT_GE((h.points[i] - h.points[j]).cwiseAbs().maxCoeff(), p.exclusion_radius - 1e-12);
      }
    }
  }
  EXPECT_GT(harvested, 20);
}

TEST(Harvest, TraceLineFormat) {
  const MlpModel m = oracle::boundary_net();
  HarvestParams p;
  p.k = 1;
  std::vector<std::string> lines;
  harvest(m, Vector::Constant(1, 0.4), p, 0.05, [&](const std::string& l) { lines.push_back(l); });
  // Unsat at 0.05 and at 0.1 (logits tie at x = 0.5), Sat at 0.15.
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("eps=0.05 verdict=unsat nodes=", 0), 0u) << lines[0];
  EXPECT_NE(lines.back().find("verdict=sat"), std::string::npos);
}

TEST(Harvest, ParamsValidation) {
  HarvestParams p;
  p.k = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.k = 1;
  p.exclusion_radius = 0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.exclusion_radius = 1e-4;
  p.eps_max = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
