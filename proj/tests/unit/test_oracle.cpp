#include "robrl/env.hpp"
#include "robrl/oracle.hpp"

#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace robrl;

TEST(Stationary, TwoStateClosedForm) {
  RowMatrix p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  for (auto method : {StationaryMethod::direct, StationaryMethod::power}) {
    const auto st = stationary_distribution(p, method);
    EXPECT_NEAR(st.mu(0), 4.0 / 7.0, 1e-12);
    EXPECT_NEAR(st.mu(1), 3.0 / 7.0, 1e-12);
    EXPECT_LE(st.residual, 1e-10);
  }
}

TEST(Stationary, MethodsAgreeOnRandomChains) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto env = make_random_mrp(100, 4, 0.9, 1.4, 30, seed);
    const Vector a = stationary_distribution(env.mrp.transition, StationaryMethod::direct).mu;
    const Vector b = stationary_distribution(env.mrp.transition, StationaryMethod::power).mu;
    EXPECT_LE((a - b).cwiseAbs().sum(), 1e-9);
    EXPECT_NEAR(a.sum(), 1.0, 1e-12);
    EXPECT_GE(a.minCoeff(), 0.0);
    const Vector moved = (a.transpose() * env.mrp.transition).transpose();
    EXPECT_LE((moved - a).cwiseAbs().sum(), 1e-10);
  }
}

TEST(Value, AbsorbingStateGeometricSeries) {
  RowMatrix p(1, 1);
  p << 1.0;
  Vector r(1);
  r << 1.0;
  EXPECT_NEAR(exact_value(p, r, 0.9).v(0), 10.0, 1e-12);
}

TEST(Value, MatchesMonteCarloRollouts) {
  const auto env = make_random_mrp(10, 3, 0.9, 1.4, 30, 8);
  const Vector v = exact_value(env.mrp.transition, env.mrp.mean_reward, 0.9).v;
  for (std::size_t x : {0u, 4u, 9u}) {
    // Truncation at 300 steps leaves 0.9^300 / 0.1 < 1e-12.
    const double mc = reference::rollout_value(env.mrp.transition, env.mrp.mean_reward, 0.9, x,
                                               300, 100000, 1000 + x);
    EXPECT_NEAR(mc, v(static_cast<Eigen::Index>(x)), 0.01) << "state " << x;
  }
}

TEST(Value, BellmanFixedPointAndContraction) {
  const auto env = make_random_mrp(30, 4, 0.8, 1.4, 30, 2);
  const RowMatrix& p = env.mrp.transition;
  const Vector& r = env.mrp.mean_reward;
  const Vector v = exact_value(p, r, 0.8).v;
  EXPECT_LE((bellman_apply(p, r, 0.8, v) - v).lpNorm<Eigen::Infinity>(), 1e-12);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Vector a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a(i) = 10 * rng.normal();
      b(i) = 10 * rng.normal();
    }
    const double before = (a - b).lpNorm<Eigen::Infinity>();
    const double after =
        (bellman_apply(p, r, 0.8, a) - bellman_apply(p, r, 0.8, b)).lpNorm<Eigen::Infinity>();
    EXPECT_LE(after, 0.8 * before * (1 + 1e-12));
  }
}

TEST(Gram, OneHotFeaturesUnderUniformWeights) {
  const int n = 7;
  const RowMatrix phi = RowMatrix::Identity(n, n);
  const Vector mu = Vector::Constant(n, 1.0 / n);
  const auto g = feature_gram(mu, phi);
  EXPECT_LE((g.lambda - Matrix::Identity(n, n) / n).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(g.lambda_min, 1.0 / n, 1e-14);
}

TEST(Gram, RankDeficientFeaturesGiveZero) {
  RowMatrix phi(4, 3);
  phi << 1, 0, 0, 0, 1, 0, 0.6, 0.8, 0, 0, 0, 0;
  const auto g = feature_gram(Vector::Constant(4, 0.25), phi);
  EXPECT_NEAR(g.lambda_min, 0.0, 1e-14);
}

TEST(Gram, MinEigenvalueMatchesIndependentOracles) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto env = make_random_mrp(40, 6, 0.9, 1.4, 30, seed);
    const Vector mu = stationary_distribution(env.mrp.transition).mu;
    const auto g = feature_gram(mu, env.features.phi);
    EXPECT_NEAR(g.lambda_min, reference::min_eigenvalue_bisection(g.lambda), 1e-8);
    EXPECT_NEAR(g.lambda_min, reference::min_eigenvalue_charpoly(g.lambda), 1e-8);
  }
}

TEST(Gram, JacobiSpectrumMatchesBisectionOnLargerMatrices) {
  const auto env = make_random_mrp(64, 32, 0.9, 1.2, 30, 3);
  const Vector mu = stationary_distribution(env.mrp.transition).mu;
  const auto g = feature_gram(mu, env.features.phi);
  const Vector eig = symmetric_eigenvalues(g.lambda);
  for (Eigen::Index i = 1; i < eig.size(); ++i) EXPECT_LE(eig(i - 1), eig(i));
  EXPECT_NEAR(eig(0), reference::min_eigenvalue_bisection(g.lambda), 1e-10);
  EXPECT_NEAR(eig.sum(), g.lambda.trace(), 1e-12);
}

TEST(Error, MuMseBruteForce) {
  const auto env = make_random_mrp(12, 3, 0.9, 1.4, 30, 5);
  const Vector mu = stationary_distribution(env.mrp.transition).mu;
  const Vector v = exact_value(env.mrp.transition, env.mrp.mean_reward, 0.9).v;
  Vector theta(3);
  theta << 0.3, -1.0, 2.0;
  long double brute = 0.0L, worst = 0.0L;
  for (int x = 0; x < 12; ++x) {
    long double pred = 0.0L;
    for (int i = 0; i < 3; ++i) pred += theta(i) * env.features.phi(x, i);
    const long double e = (pred - v(x)) * (pred - v(x));
    brute += mu(x) * e;
    worst = std::max(worst, e);
  }
  EXPECT_NEAR(mu_mse(theta, env.features.phi, v, mu), static_cast<double>(brute), 1e-12);
  EXPECT_NEAR(sup_sq_error(theta, env.features.phi, v), static_cast<double>(worst), 1e-12);
  EXPECT_NEAR(mu_mse(*env.features.theta_star, env.features.phi, v, mu), 0.0, 1e-18);
  EXPECT_NEAR(mu_norm(v, mu) * mu_norm(v, mu), mu_mse(Vector::Zero(3), env.features.phi, v, mu),
              1e-12);
}

TEST(Visitation, MatchesTruncatedSeries) {
  const auto env = make_random_mrp(20, 3, 0.9, 1.4, 30, 4);
  Vector lambda0 = Vector::Zero(20);
  lambda0(0) = 0.5;
  lambda0(7) = 0.5;
  for (double gamma : {0.5, 0.9}) {
    const Vector d = discounted_visitation(env.mrp.transition, lambda0, gamma);
    const Vector series = reference::visitation_series(env.mrp.transition, lambda0, gamma, 600);
    EXPECT_LE((d - series).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(d.sum(), 1.0, 1e-12);
  }
}

TEST(Concentrability, Cases) {
  Vector a(3), b(3);
  a << 0.5, 0.5, 0.0;
  b << 0.25, 0.5, 0.25;
  EXPECT_DOUBLE_EQ(concentrability(a, b), 2.0);
  EXPECT_DOUBLE_EQ(concentrability(b, b), 1.0);
  Vector c(3);
  c << 0.5, 0.5, 0.0;
  EXPECT_EQ(concentrability(b, c), std::numeric_limits<double>::infinity());
  // Zero numerator over zero denominator is ignored.
  EXPECT_DOUBLE_EQ(concentrability(a, c), 1.0);
}

TEST(MixingTime, MinimalIntegerByScan) {
  const double rho = 5, u = 100, horizon = 1e4, p = 0.4;
  const double threshold = std::sqrt(2.0) * rho * std::pow(u * horizon, -1.0 / (1.0 + p));
  for (double m : {0.5, 2.0, 50.0}) {
    for (double zeta : {0.3, 0.9, 0.99}) {
      std::int64_t t = 0;
      while (m * std::pow(zeta, static_cast<double>(t)) > threshold) ++t;
      EXPECT_EQ(mixing_time(m, zeta, rho, u, horizon, p), t) << m << " " << zeta;
    }
  }
  EXPECT_THROW(mixing_time(1, 1.0, 1, 1, 1, 1), ConfigError);
}

TEST(ActionValues, BellmanResidualAndStateValues) {
  const auto mdp = make_random_mdp(6, 3, 0.9, NoiseSpec::none(), FeatureKind::tabular, 0, 3);
  RowMatrix policy(6, 3);
  for (int s = 0; s < 6; ++s) policy.row(s) << 0.2, 0.3, 0.5;
  const Vector q = exact_q(mdp, policy);
  const Vector v = state_values(mdp, policy, q);
  for (std::size_t s = 0; s < 6; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      double next = 0.0;
      for (std::size_t s2 = 0; s2 < 6; ++s2) next += mdp.kernels[a](s, s2) * v(s2);
      EXPECT_NEAR(q(mdp.pair_index(s, a)), mdp.mean_reward(s, a) + 0.9 * next, 1e-12);
    }
  }
  // V^pi also solves the state-level Bellman equation.
  const RowMatrix p_pi = state_transition_under(mdp, policy);
  Vector r_pi(6);
  for (int s = 0; s < 6; ++s) r_pi(s) = policy.row(s).dot(mdp.mean_reward.row(s));
  EXPECT_LE((exact_value(p_pi, r_pi, 0.9).v - v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ActionValues, MatchTruncatedSeriesOnDeskInstances) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto mdp = make_random_mdp(8, 3, 0.9, NoiseSpec::none(), FeatureKind::tabular, 0, seed);
    Rng rng(seed + 100);
    RowMatrix policy(8, 3);
    for (int s = 0; s < 8; ++s) {
      double total = 0.0;
      for (int a = 0; a < 3; ++a) total += policy(s, a) = 0.05 + rng.uniform();
      policy.row(s) /= total;
    }
    const Vector q = exact_q(mdp, policy);
    // Q = sum_k gamma^k M^k r over state-action pairs, M((s,a),(s',a')) = P_a(s,s') pi(a'|s').
    std::vector<long double> term(24), acc(24, 0.0L);
    for (std::size_t s = 0; s < 8; ++s) {
      for (std::size_t a = 0; a < 3; ++a) term[s * 3 + a] = mdp.mean_reward(s, a);
    }
    long double discount = 1.0L;
    for (int k = 0; k < 400; ++k) {
      for (std::size_t i = 0; i < 24; ++i) acc[i] += discount * term[i];
      std::vector<long double> next(24, 0.0L);
      for (std::size_t s = 0; s < 8; ++s) {
        for (std::size_t a = 0; a < 3; ++a) {
          long double sum = 0.0L;
          for (std::size_t s2 = 0; s2 < 8; ++s2) {
            for (std::size_t a2 = 0; a2 < 3; ++a2) {
              sum += mdp.kernels[a](s, s2) * policy(s2, a2) * term[s2 * 3 + a2];
            }
          }
          next[s * 3 + a] = sum;
        }
      }
      term = next;
      discount *= 0.9L;
    }
    for (std::size_t s = 0; s < 8; ++s) {
      for (std::size_t a = 0; a < 3; ++a) {
        EXPECT_NEAR(q(mdp.pair_index(s, a)), static_cast<double>(acc[s * 3 + a]), 1e-8)
            << "seed " << seed;
      }
    }
  }
}
