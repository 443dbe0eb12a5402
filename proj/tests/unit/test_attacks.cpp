#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "veriaug/attacks.hpp"

using namespace veriaug;

namespace {

// Two classes, one hidden unit per input coordinate with large positive bias so
// the hidden layer is strictly active on [0,1]^d and the network is affine.
MlpModel affine_two_class(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  MlpModel m = MlpModel::zeros(3, 3, 2);
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = n(rng);
  m.b1.setConstant(10.0);
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = n(rng);
  // Cancel the bias contribution so the boundary passes near the box centre.
  m.b2(0) = n(rng);
  m.b2(1) = m.b2(0) - 10.0 * (m.w2.row(1) - m.w2.row(0)).sum() + 0.5 * n(rng);
  return m;
}

}  // namespace

TEST(Fgsm, ZeroEpsReturnsInput) {
  const MlpModel m = oracle::random_model(4, 4, 3, 1);
  const Vector x = Vector::Constant(4, 0.3);
  EXPECT_EQ(fgsm(m, x, 1, 0.0), x);
}

TEST(Fgsm, PositiveGradientFromZeroInput) {
  // Single class-1 path: d loss(label 0)/dx = positive on every coordinate.
  MlpModel m = MlpModel::zeros(3, 1, 2);
  m.w1.setConstant(1.0);
  m.b1(0) = 0.5;
  m.w2(1, 0) = 1.0;
  const Vector x = Vector::Zero(3);
  ASSERT_GT(loss_grad_input(m, x, 0).minCoeff(), 0.0);
  const Vector adv = fgsm(m, x, 0, 0.1);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(adv(i), 0.1);
}

TEST(Fgsm, MatchesIndependentComposition) {
  std::mt19937_64 rng(3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MlpModel m = oracle::random_model(4, 4, 3, s);
    const Vector x = oracle::random_point(4, rng);
    const int y = oracle::predict(m, oracle::to_vec(x));
    const auto g = oracle::fd_grad_input(m, oracle::to_vec(x), y);
    const Vector adv = fgsm(m, x, y, 0.05);
    for (int i = 0; i < 4; ++i) {
      if (std::abs(g[i]) < 1e-6) continue;  // sign undecidable by finite differences
      const double expect = std::clamp(x(i) + 0.05 * (g[i] > 0 ? 1.0 : -1.0), 0.0, 1.0);
      EXPECT_NEAR(adv(i), expect, 1e-12);
    }
  }
}

TEST(Fgsm, StaysInUnitBoxAndEpsBall) {
  std::mt19937_64 rng(8);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const MlpModel m = oracle::random_model(5, 6, 3, s);
    const Vector x = oracle::random_point(5, rng);
    const double eps = 0.3 * static_cast<double>(s % 4);
    const Vector adv = fgsm(m, x, static_cast<int>(s % 3), eps);
    EXPECT_GE(adv.minCoeff(), 0.0);
    EXPECT_LE(adv.maxCoeff(), 1.0);
    EXPECT_LE((adv - x).lpNorm<Eigen::Infinity>(), eps + 1e-15);
  }
}

TEST(BinarySearch, IterationCountIsCeilLog2) {
  const MlpModel m = oracle::random_model(4, 4, 3, 2);
  const Vector x = Vector::Constant(4, 0.5);
  for (double tau : {0.1, 0.05, 1e-2, 1e-3, 3e-4, 1e-6}) {
    AttackParams p;
    p.tolerance = tau;
    EXPECT_EQ(margin_by_binary_search(m, x, p).iterations,
              static_cast<int>(std::ceil(std::log2(1.0 / tau))))
        << tau;
  }
  AttackParams bad;
  bad.tolerance = 0.2;
  EXPECT_THROW(margin_by_binary_search(m, x, bad), std::invalid_argument);
}

TEST(BinarySearch, BoundarySampleHasTinyMargin) {
  // Logits [x0, 1 - x0] at x0 = 0.5 tie; predict 0; any push flips.
  MlpModel m = MlpModel::zeros(1, 2, 2);
  m.w1(0, 0) = 1.0;
  m.w1(1, 0) = -1.0;
  m.b1(1) = 1.0;
  m.w2(0, 0) = 1.0;
  m.w2(1, 1) = 1.0;
  AttackParams p;
  const MarginEstimate e = margin_by_binary_search(m, Vector::Constant(1, 0.5), p);
  EXPECT_TRUE(e.flipped);
  EXPECT_LE(e.eps_star, p.tolerance);
}

TEST(BinarySearch, ConstantClassifierNeverFlips) {
  MlpModel m = oracle::random_model(3, 4, 3, 5);
  m.w2.setZero();
  AttackParams p;
  const MarginEstimate e = margin_by_binary_search(m, Vector::Constant(3, 0.2), p);
  EXPECT_FALSE(e.flipped);
  EXPECT_GT(e.eps_star, 1.0 - p.tolerance);
  EXPECT_LT(e.eps_star, 1.0);
}

TEST(BinarySearch, AgreesWithLinearScanOnMonotoneInputs) {
  std::mt19937_64 rng(17);
  AttackParams p;
  int checked = 0, agree = 0;
  for (std::uint64_t s = 0; checked < 60 && s < 1000; ++s) {
    const MlpModel m = oracle::random_model(4, 4, 3, 100 + s);
    const Vector x = oracle::random_point(4, rng);
    const auto scan = oracle::linear_scan_margin(m, x, p.tolerance / 10.0);
    if (!scan.monotone || scan.first_flip < 0) continue;
    ++checked;
    // eps_star is the final midpoint, which may sit just below the flip.
    const MarginEstimate e = margin_by_binary_search(m, x, p);
    EXPECT_LE((e.adversarial - x).lpNorm<Eigen::Infinity>(), e.eps_star + p.tolerance);
    agree += std::abs(e.eps_star - scan.first_flip) <= p.tolerance;
  }
  EXPECT_EQ(checked, 60);
  EXPECT_GE(agree, 59);
}

TEST(DeepFool, ConstantClassifierDoesNotFlip) {
  MlpModel m = oracle::random_model(3, 4, 3, 5);
  m.w2.setZero();
  const DeepFoolResult r = deepfool(m, Vector::Constant(3, 0.4), AttackParams{});
  EXPECT_FALSE(r.flipped);
  EXPECT_TRUE(std::isfinite(r.perturbation_norm));
}

TEST(DeepFool, AffineCaseMatchesClosedForm) {
  AttackParams p;
  p.deepfool_overshoot = 0.0;
  int tested = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const MlpModel m = affine_two_class(s);
    const Vector x = Vector::Constant(3, 0.5);
    const Vector w = (m.w2.row(1) - m.w2.row(0)) * m.w1;
    const Vector z = forward(m, x);
    const double dist = std::abs(z(1) - z(0)) / w.norm();
    // Keep cases whose exact boundary point stays inside the unit box.
    const Vector step = -(z(1) - z(0)) / w.squaredNorm() * w;
    if ((x + step).minCoeff() < 0.0 || (x + step).maxCoeff() > 1.0) continue;
    ++tested;
    // One linearized step lands on the boundary; with zero overshoot the
    // landing point is a logit tie, so later iterations only add rounding.
    AttackParams one = p;
    one.deepfool_max_iter = 1;
    const DeepFoolResult first = deepfool(m, x, one);
    EXPECT_EQ(first.iterations, 1) << s;
    EXPECT_NEAR(first.perturbation_norm, dist, 1e-9) << s;
    EXPECT_NEAR(deepfool(m, x, p).perturbation_norm, dist, 1e-9) << s;
  }
  EXPECT_GE(tested, 10);
}

TEST(DeepFool, FlippedResultIsMisclassified) {
  std::mt19937_64 rng(23);
  AttackParams p;
  p.deepfool_overshoot = 0.0;
  int flipped = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const MlpModel m = oracle::random_model(4, 6, 3, s);
    const Vector x = oracle::random_point(4, rng);
    const DeepFoolResult r = deepfool(m, x, p);
    if (!r.flipped) continue;
    ++flipped;
    EXPECT_NE(predict(m, r.adversarial), predict(m, x));
    EXPECT_GE(r.adversarial.minCoeff(), 0.0);
    EXPECT_LE(r.adversarial.maxCoeff(), 1.0);
    EXPECT_NEAR(r.perturbation_norm, (r.adversarial - x).norm(), 1e-12);
    EXPECT_NEAR(r.perturbation_linf, (r.adversarial - x).lpNorm<Eigen::Infinity>(), 1e-12);
  }
  EXPECT_GT(flipped, 20);
}

TEST(DeepFool, MoreIterationsNeverIncreaseAffineNorm) {
  const MlpModel m = affine_two_class(3);
  const Vector x = Vector::Constant(3, 0.5);
  double prev = std::numeric_limits<double>::infinity();
  for (int it : {1, 2, 5, 50}) {
    AttackParams p;
    p.deepfool_max_iter = it;
    const DeepFoolResult r = deepfool(m, x, p);
    EXPECT_LE(r.perturbation_norm, prev + 1e-9);
    prev = r.perturbation_norm;
  }
}
