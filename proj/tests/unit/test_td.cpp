#include "robrl/env.hpp"
#include "robrl/oracle.hpp"
#include "robrl/sampler.hpp"
#include "robrl/td.hpp"

#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

using namespace robrl;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

TdConfig base_config(std::uint64_t horizon, double rho) {
  TdConfig c;
  c.horizon = horizon;
  c.projection_radius = rho;
  c.clip = ClipSchedule::linear();
  c.step = StepSchedule::constant(0.05);
  return c;
}

}  // namespace

TEST(SemiGradient, UnitFeatureGivesReward) {
  RowMatrix phi = RowMatrix::Identity(2, 2);
  const Vector g = semi_gradient(Vector::Zero(2), {0, 1.0, 1, 1}, phi, 0.9);
  EXPECT_EQ(g, Vector::Unit(2, 0));
}

TEST(SemiGradient, SelfLoopWithUnitDiscountVanishes) {
  RowMatrix phi(1, 2);
  phi << 0.6, 0.8;
  Vector theta(2);
  theta << 3.0, -7.0;
  EXPECT_EQ(semi_gradient(theta, {0, 0.0, 0, 1}, phi, 1.0), Vector::Zero(2));
}

TEST(SemiGradient, ExpectedGradientVanishesAtTrueParameter) {
  const auto env = make_random_mrp(32, 6, 0.9, 1.4, 30.0, 3);
  const Vector mu = stationary_distribution(env.mrp.transition).mu;
  const Vector& theta = *env.features.theta_star;
  const RowMatrix& phi = env.features.phi;
  // Exact expectation over the successor, assembled by hand.
  Vector total = Vector::Zero(6);
  for (Eigen::Index x = 0; x < 32; ++x) {
    double next_value = 0.0;
    for (Eigen::Index y = 0; y < 32; ++y) next_value += env.mrp.transition(x, y) * phi.row(y).dot(theta);
    const double err = env.mrp.mean_reward(x) + 0.9 * next_value - phi.row(x).dot(theta);
    total += mu(x) * err * phi.row(x).transpose();
  }
  EXPECT_LE(total.norm(), 1e-10);
  // And per state, averaging the library's semi-gradient over successors.
  for (Eigen::Index x = 0; x < 32; x += 7) {
    Vector g = Vector::Zero(6);
    for (Eigen::Index y = 0; y < 32; ++y) {
      const Transition tr{static_cast<std::size_t>(x), env.mrp.mean_reward(x),
                          static_cast<std::size_t>(y), 1};
      g += env.mrp.transition(x, y) * semi_gradient(theta, tr, phi, 0.9);
    }
    EXPECT_LE(g.norm(), 1e-10);
  }
}

TEST(ClipGate, BoundaryIncludedAndDropAboveIt) {
  Vector g(2);
  g << 3.0, 4.0;
  EXPECT_EQ(clip_gate(g, 5.0), g);
  EXPECT_EQ(clip_gate(g, 2.5), Vector::Zero(2));
  EXPECT_EQ(clip_gate(g, std::numeric_limits<double>::infinity()), g);
}

TEST(Projection, Examples) {
  Vector v(2);
  v << 3.0, 4.0;
  const Vector p = project_ball(v, 1.0);
  EXPECT_NEAR(p(0), 0.6, 1e-15);
  EXPECT_NEAR(p(1), 0.8, 1e-15);
  EXPECT_EQ(project_ball(v, 5.0), v);
}

TEST(Projection, IdempotentAndNonExpansive) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    Vector x(5), y(5);
    for (int k = 0; k < 5; ++k) {
      x(k) = 3 * rng.normal();
      y(k) = 3 * rng.normal();
    }
    const double rho = 0.5 + 4 * rng.uniform();
    const Vector px = project_ball(x, rho), py = project_ball(y, rho);
    EXPECT_LE((project_ball(px, rho) - px).norm(), 1e-12);
    EXPECT_LE((px - py).norm(), (x - y).norm() + 1e-12);
    EXPECT_LE(px.norm(), rho * (1 + 1e-15));
  }
}

TEST(RecordGrid, GeometricHoldsPowersOfTwoAndTen) {
  const auto pts = RecordGrid::geometric().points(100000);
  for (std::uint64_t t : {1u, 2u, 64u, 100u, 1000u, 65536u, 100000u}) {
    EXPECT_NE(std::find(pts.begin(), pts.end(), t), pts.end()) << t;
  }
  EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));
  const auto stride = RecordGrid::every(10).points(35);
  EXPECT_EQ(stride, (std::vector<std::uint64_t>{1, 10, 20, 30, 35}));
}

TEST(RunTd, InfiniteClipIsBitIdenticalToPlainTd) {
  const auto env = make_random_mrp(64, 8, 0.9, 1.4, 30.0, 11);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  const double lambda_min = feature_gram(target.mu, target.phi).lambda_min;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TdConfig config = base_config(20000, 30.0);
    config.clip = ClipSchedule::none();
    config.step = StepSchedule::full_rank(0.9, lambda_min);
    const TdRunResult robust = run_robust_td(env.mrp, target, config, seed);

    IidSampler sampler(env.mrp, target.mu, seed);
    const auto plain = reference::plain_projected_td(
        target.phi, 0.9, 30.0, 20000,
        [&](std::uint64_t t) {
          return 1.0 / ((1.0 - 0.9) * static_cast<double>(t) * lambda_min);
        },
        sampler);
    for (int i = 0; i < 8; ++i) {
      ASSERT_TRUE(same_bits(robust.theta_final(i), plain.theta_final[i])) << "seed " << seed;
      ASSERT_TRUE(same_bits(robust.theta_avg(i), plain.theta_avg[i])) << "seed " << seed;
    }
    EXPECT_EQ(robust.clip_count, 0u);
  }
}

TEST(RunTd, IteratesStayInBallAndStepsAreBounded) {
  const auto env = make_random_mrp(32, 4, 0.9, 1.2, 30.0, 5);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  TdConfig config = base_config(3000, 2.0);
  config.clip = ClipSchedule::expected_rate(50.0, 0.15);
  config.step = StepSchedule::constant(0.3);
  config.store_iterates = true;
  const auto result = run_robust_td(env.mrp, target, config, 9);
  ASSERT_EQ(result.iterates.size(), 3001u);
  for (std::size_t t = 1; t < result.iterates.size(); ++t) {
    ASSERT_LE(result.iterates[t].norm(), 2.0 * (1 + 1e-15));
    const double bound = config.step.size(t) * config.clip.radius(t);
    ASSERT_LE((result.iterates[t] - result.iterates[t - 1]).norm(), bound * (1 + 1e-12));
  }
  EXPECT_LE(result.theta_avg.norm(), 2.0 * (1 + 1e-12));
}

TEST(RunTd, AveragedIterateIsTheMeanOfStoredIterates) {
  const auto env = make_random_mrp(16, 4, 0.9, 1.4, 30.0, 6);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  TdConfig config = base_config(2000, 30.0);
  config.store_iterates = true;
  const auto result = run_robust_td(env.mrp, target, config, 1);
  Vector mean = Vector::Zero(4);
  for (std::size_t t = 0; t < 2000; ++t) mean += result.iterates[t];
  mean /= 2000.0;
  EXPECT_LE((mean - result.theta_avg).norm(), 1e-12);
  EXPECT_EQ(result.iterates.back(), result.theta_final);
}

TEST(RunTd, ClipCountMatchesGradientLog) {
  const auto env = make_random_mrp(32, 4, 0.9, 1.2, 30.0, 8);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  TdConfig config = base_config(20000, 30.0);
  config.clip = ClipSchedule::expected_rate(1.0, 0.15);
  config.grad_log_every = 1;
  const auto result = run_robust_td(env.mrp, target, config, 4);
  ASSERT_EQ(result.gradient_log.size(), 20000u);
  std::uint64_t recount = 0;
  for (const auto& g : result.gradient_log) {
    const bool drop = g.norm > g.radius;
    ASSERT_EQ(drop, g.dropped);
    recount += drop;
  }
  EXPECT_EQ(recount, result.clip_count);
  EXPECT_GT(result.clip_count, 0u);
  EXPECT_EQ(result.error_curve.back().clip_count_cum, result.clip_count);
}

TEST(RunTd, NoiselessStartAtTruthStaysPut) {
  // Constant reward 0.5 with discount 0.5 makes V = 1 everywhere, so every sampled TD error
  // at the truth is exactly zero, not just zero in expectation.
  MarkovRewardProcess ring;
  ring.discount = 0.5;
  ring.transition = RowMatrix::Zero(32, 32);
  for (int x = 0; x < 32; ++x) {
    ring.transition(x, x) = 0.5;
    ring.transition(x, (x + 1) % 32) = 0.5;
  }
  ring.mean_reward = Vector::Constant(32, 0.5);
  const FeatureMap features{RowMatrix::Identity(32, 32), Vector::Ones(32)};
  const auto target = EvaluationTarget::from(ring, features);
  TdConfig config = base_config(5000, 30.0);
  config.theta_init = Vector::Ones(32);
  config.store_iterates = true;
  const auto result = run_robust_td(ring, target, config, 3);
  for (const auto& theta : result.iterates) ASSERT_EQ(theta, Vector::Ones(32));
  EXPECT_LE(result.error_curve.back().mse_avg, 1e-20);
}

TEST(RunTd, NoiselessTabularConverges) {
  auto env = make_random_mrp(16, 4, 0.9, 1.4, 30.0, 12);
  env.mrp.noise = NoiseSpec::none();
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  TdConfig config = base_config(100000, 30.0);
  config.step = StepSchedule::full_rank(0.9, feature_gram(target.mu, target.phi).lambda_min);
  const auto result = run_robust_td(env.mrp, target, config, 2);
  EXPECT_LE(result.error_curve.back().mse_last, 1e-4);
  EXPECT_FALSE(result.diverged);
}

TEST(RunTd, NonFiniteRewardIsReportedNotMasked) {
  const auto env = make_random_mrp(8, 2, 0.9, 1.4, 30.0, 1);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  std::vector<Transition> stream(100, Transition{0, 0.5, 1, 1});
  stream[40].reward = std::numeric_limits<double>::infinity();
  ReplaySource source(stream);
  TdConfig config = base_config(100, 30.0);
  config.clip = ClipSchedule::none();
  const auto result = run_td(target, config, source);
  EXPECT_TRUE(result.diverged);
  EXPECT_NE(result.failure.find("t=41"), std::string::npos) << result.failure;
  EXPECT_TRUE(std::isnan(result.error_curve.back().mse_last));
}

TEST(RunTd, FiniteClipAbsorbsNonFiniteReward) {
  const auto env = make_random_mrp(8, 2, 0.9, 1.4, 30.0, 1);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  std::vector<Transition> stream(100, Transition{0, 0.5, 1, 1});
  stream[40].reward = std::numeric_limits<double>::infinity();
  ReplaySource source(stream);
  const auto result = run_td(target, base_config(100, 30.0), source);
  EXPECT_FALSE(result.diverged);
  EXPECT_EQ(result.clip_count, 1u);
}

TEST(TdConfig, ReportsEveryProblem) {
  TdConfig c;
  c.horizon = 0;
  c.projection_radius = -1;
  c.step = StepSchedule::full_rank(0.9, 0.0);
  EXPECT_GE(c.problems().size(), 3u);
  EXPECT_THROW(c.validate(), ConfigError);
}
