#pragma once

#include "robrl/rng.hpp"
#include "robrl/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace robrl {

enum class NoiseKind { none, pareto_centered };

/// Additive, state-independent reward noise N - E[N] with N ~ Pareto(scale, tail_index).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double tail_index = 2.0;
  double scale = 1.0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec pareto(double tail_index, double scale = 1.0) {
    return {NoiseKind::pareto_centered, tail_index, scale};
  }

  /// E[N] of the raw (uncentered) Pareto draw.
  double raw_mean() const;
  /// Whether E|N|^q is finite.
  bool has_finite_moment(double q) const;
  void validate() const;
};

/// Centered Pareto value for a given uniform draw u in (0, 1] (inverse CDF, then centering).
double centered_pareto_from_uniform(const NoiseSpec& spec, double u);

double sample_noise(const NoiseSpec& spec, Rng& rng);

/// Moment order p in (0, 1] used by the schedules: min(1, tail - 1 - 0.05) for Pareto noise.
double default_moment_order(const NoiseSpec& spec);

/// Upper bound u0 on E|r(x) + N - E N|^{1+p} for |r(x)| <= max_abs_reward.
///
/// Uses Minkowski in L^{1+p}: ||r + N - EN|| <= |r| + ||N|| + EN, with the closed-form
/// Pareto moment E N^q = tail * scale^q / (tail - q).
double reward_moment_bound(const NoiseSpec& spec, double p, double max_abs_reward = 1.0);

struct MarkovRewardProcess {
  RowMatrix transition;
  Vector mean_reward;
  double discount = 0.9;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  std::string recipe = "custom";

  std::size_t n_states() const { return static_cast<std::size_t>(mean_reward.size()); }
  /// Throws ConfigError on any broken invariant (stochasticity, reward range, ergodicity).
  void validate() const;
};

struct FeatureMap {
  RowMatrix phi;  // one row per state: Phi(x)^T
  std::optional<Vector> theta_star;

  std::size_t dim() const { return static_cast<std::size_t>(phi.cols()); }
  std::size_t n_rows() const { return static_cast<std::size_t>(phi.rows()); }
  /// Checks ||Phi(x)||_2 <= 1 and, when a radius is given, ||theta_star||_2 <= radius.
  void validate(std::optional<double> projection_radius = std::nullopt) const;
};

struct Transition {
  std::size_t x = 0;
  double reward = 0.0;
  std::size_t x_next = 0;
  std::uint64_t t = 1;
};

struct MarkovDecisionProcess {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<RowMatrix> kernels;  // kernels[a](s, s')
  RowMatrix mean_reward;           // |S| x |A|
  double discount = 0.9;
  NoiseSpec noise;
  FeatureMap features;  // rows indexed by pair_index(s, a)
  std::uint64_t seed = 0;
  std::string recipe = "custom";

  std::size_t n_pairs() const { return n_states * n_actions; }
  std::size_t pair_index(std::size_t s, std::size_t a) const { return s * n_actions + a; }
  void validate() const;
};

struct RealizableEnvironment {
  MarkovRewardProcess mrp;
  FeatureMap features;
};

// Row-stochastic within 1e-12 and non-negative. Throws ConfigError naming `what`.
void check_stochastic(const RowMatrix& p, const std::string& what);

bool is_irreducible(const RowMatrix& p);
/// Period of an irreducible chain (1 means aperiodic).
std::size_t chain_period(const RowMatrix& p);

/// Draws |X| x d unit-norm Gaussian features and theta_star = 3U/sqrt(d).
FeatureMap make_gaussian_features(std::size_t n_states, std::size_t dim, Rng& rng);

/// Sets r = (I - gamma P) Psi theta_star so the value function is exactly linear,
/// rescaling r and theta_star jointly until max|r| <= 1 and ||theta_star|| <= rho.
Vector make_realizable_rewards(const RowMatrix& transition, FeatureMap& features,
                               double discount, double rho);

RealizableEnvironment make_random_mrp(std::size_t n_states, std::size_t dim, double discount,
                                      double tail_index, double rho, std::uint64_t seed);

/// Circular random walk: stay with 1/3, move to each of the 16 nearest neighbours with 1/24.
RealizableEnvironment make_circular_walk(std::size_t n_states, std::size_t dim, double discount,
                                         double tail_index, double rho, std::uint64_t seed);

enum class FeatureKind { tabular, gaussian };

/// Random MDP: uniform kernels row-normalized, mean rewards uniform in [-1, 1].
MarkovDecisionProcess make_random_mdp(std::size_t n_states, std::size_t n_actions,
                                      double discount, const NoiseSpec& noise,
                                      FeatureKind features, std::size_t dim, std::uint64_t seed);

/// Transition matrix over state-action pairs, without ergodicity checks.
RowMatrix induced_transition(const MarkovDecisionProcess& mdp, const RowMatrix& policy);

/// Chain over state-action pairs under `policy` (|S| x |A| table):
/// P((s,a),(s',a')) = P_a(s,s') pi(a'|s').
MarkovRewardProcess induced_mrp(const MarkovDecisionProcess& mdp, const RowMatrix& policy);

/// P_pi(s, s') = sum_a pi(a|s) P_a(s, s').
RowMatrix state_transition_under(const MarkovDecisionProcess& mdp, const RowMatrix& policy);

void check_policy_table(const RowMatrix& policy, std::size_t n_states, std::size_t n_actions);

}  // namespace robrl
