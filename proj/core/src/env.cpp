#include "robrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace robrl {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kPolicyTol = 1e-10;
constexpr double kNormTol = 1e-12;

std::vector<std::size_t> bfs_levels(const RowMatrix& p, bool transpose) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::size_t> level(n, n);  // n marks "unreached"
  std::deque<std::size_t> queue{0};
  level[0] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < n; ++v) {
      const double w = transpose ? p(v, u) : p(u, v);
      if (w > 0.0 && level[v] == n) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return level;
}

void check_ergodic(const RowMatrix& p, const std::string& what) {
  if (!is_irreducible(p)) throw ConfigError(what + ": chain is not irreducible");
  if (const auto period = chain_period(p); period != 1) {
    throw ConfigError(what + ": chain is periodic with period " + std::to_string(period));
  }
}

RowMatrix random_stochastic_matrix(std::size_t n, Rng& rng) {
  RowMatrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    do {
      sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        p(i, j) = rng.uniform();
        sum += p(i, j);
      }
    } while (sum <= 0.0);
    p.row(i) /= sum;
  }
  return p;
}

}  // namespace

double NoiseSpec::raw_mean() const {
  if (kind == NoiseKind::none) return 0.0;
  return scale * tail_index / (tail_index - 1.0);
}

bool NoiseSpec::has_finite_moment(double q) const {
  return kind == NoiseKind::none || q < tail_index;
}

void NoiseSpec::validate() const {
  if (kind == NoiseKind::none) return;
  if (!(tail_index > 1.0)) throw ConfigError("noise: tail_index must exceed 1");
  if (!(scale > 0.0)) throw ConfigError("noise: scale must be positive");
}

double centered_pareto_from_uniform(const NoiseSpec& spec, double u) {
  if (spec.kind == NoiseKind::none) return 0.0;
  return spec.scale * std::pow(u, -1.0 / spec.tail_index) - spec.raw_mean();
}

double sample_noise(const NoiseSpec& spec, Rng& rng) {
  if (spec.kind == NoiseKind::none) return 0.0;
  return centered_pareto_from_uniform(spec, rng.uniform_open_closed());
}

double default_moment_order(const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::none) return 1.0;
  return std::min(1.0, spec.tail_index - 1.0 - 0.05);
}

double reward_moment_bound(const NoiseSpec& spec, double p, double max_abs_reward) {
  const double q = 1.0 + p;
  if (spec.kind == NoiseKind::none) return std::pow(max_abs_reward, q);
  if (!spec.has_finite_moment(q)) {
    throw ConfigError("reward_moment_bound: moment of order 1+p is infinite for this tail index");
  }
  const double raw_moment = spec.tail_index * std::pow(spec.scale, q) / (spec.tail_index - q);
  const double norm = max_abs_reward + std::pow(raw_moment, 1.0 / q) + spec.raw_mean();
  return std::pow(norm, q);
}

void check_stochastic(const RowMatrix& p, const std::string& what) {
  if (p.rows() != p.cols() || p.rows() == 0) throw ConfigError(what + ": matrix must be square");
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if ((p.row(i).array() < 0.0).any() || !p.row(i).allFinite()) {
      throw ConfigError(what + ": negative or non-finite entry in row " + std::to_string(i));
    }
    const double sum = p.row(i).sum();
    if (std::abs(sum - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << what << ": row " << i << " sums to " << sum;
      throw ConfigError(os.str());
    }
  }
}

bool is_irreducible(const RowMatrix& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  const auto fwd = bfs_levels(p, false);
  const auto bwd = bfs_levels(p, true);
  return std::none_of(fwd.begin(), fwd.end(), [n](std::size_t l) { return l == n; }) &&
         std::none_of(bwd.begin(), bwd.end(), [n](std::size_t l) { return l == n; });
}

std::size_t chain_period(const RowMatrix& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  const auto level = bfs_levels(p, false);
  std::size_t g = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (level[u] == n) continue;
    for (std::size_t v = 0; v < n; ++v) {
      if (p(u, v) > 0.0 && level[v] != n) {
        const auto diff = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[v]);
        g = std::gcd(g, static_cast<std::size_t>(std::llabs(diff)));
      }
    }
  }
  return g;
}

void MarkovRewardProcess::validate() const {
  const auto n = n_states();
  if (n == 0) throw ConfigError("mrp: no states");
  if (static_cast<std::size_t>(transition.rows()) != n) {
    throw ConfigError("mrp: transition shape does not match reward vector");
  }
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("mrp: discount must lie in [0, 1)");
  check_stochastic(transition, "mrp transition");
  if (!mean_reward.allFinite() || mean_reward.cwiseAbs().maxCoeff() > 1.0 + kNormTol) {
    throw ConfigError("mrp: mean rewards must lie in [-1, 1]");
  }
  noise.validate();
  check_ergodic(transition, "mrp transition");
}

void FeatureMap::validate(std::optional<double> projection_radius) const {
  if (phi.rows() == 0 || phi.cols() == 0) throw ConfigError("features: empty feature matrix");
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    if (!phi.row(i).allFinite() || phi.row(i).norm() > 1.0 + kNormTol) {
      throw ConfigError("features: row " + std::to_string(i) + " has norm above 1");
    }
  }
  if (theta_star) {
    if (theta_star->size() != phi.cols()) throw ConfigError("features: theta_star has wrong size");
    if (projection_radius && theta_star->norm() > *projection_radius * (1.0 + kNormTol)) {
      throw ConfigError("features: ||theta_star|| exceeds the projection radius");
    }
  }
}

void MarkovDecisionProcess::validate() const {
  if (n_states == 0 || n_actions == 0) throw ConfigError("mdp: empty state or action space");
  if (kernels.size() != n_actions) throw ConfigError("mdp: need one kernel per action");
  for (std::size_t a = 0; a < n_actions; ++a) {
    if (static_cast<std::size_t>(kernels[a].rows()) != n_states) {
      throw ConfigError("mdp: kernel shape mismatch");
    }
    check_stochastic(kernels[a], "mdp kernel " + std::to_string(a));
  }
  if (static_cast<std::size_t>(mean_reward.rows()) != n_states ||
      static_cast<std::size_t>(mean_reward.cols()) != n_actions) {
    throw ConfigError("mdp: mean_reward must be |S| x |A|");
  }
  if (!mean_reward.allFinite() || mean_reward.cwiseAbs().maxCoeff() > 1.0 + kNormTol) {
    throw ConfigError("mdp: mean rewards must lie in [-1, 1]");
  }
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("mdp: discount must lie in [0, 1)");
  noise.validate();
  if (features.n_rows() != n_pairs()) throw ConfigError("mdp: features need one row per (s, a)");
  features.validate();
  // Any softmax policy has full support, so the uniform policy settles ergodicity for all of them.
  const RowMatrix uniform = RowMatrix::Constant(n_states, n_actions, 1.0 / n_actions);
  check_ergodic(state_transition_under(*this, uniform), "mdp under full-support policies");
}

FeatureMap make_gaussian_features(std::size_t n_states, std::size_t dim, Rng& rng) {
  FeatureMap features;
  features.phi.resize(n_states, dim);
  for (std::size_t x = 0; x < n_states; ++x) {
    double norm = 0.0;
    do {
      for (std::size_t j = 0; j < dim; ++j) features.phi(x, j) = rng.normal();
      norm = features.phi.row(x).norm();
    } while (norm == 0.0);
    features.phi.row(x) /= norm;
  }
  Vector theta(dim);
  const double scale = 3.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t j = 0; j < dim; ++j) theta(j) = scale * rng.uniform();
  features.theta_star = theta;
  return features;
}

Vector make_realizable_rewards(const RowMatrix& transition, FeatureMap& features,
                               double discount, double rho) {
  if (!features.theta_star) throw ConfigError("realizable rewards need theta_star");
  Vector& theta = *features.theta_star;
  const Vector v = features.phi * theta;
  Vector r = v - discount * (transition * v);
  const double shrink =
      std::max({1.0, r.cwiseAbs().maxCoeff(), theta.norm() / rho});
  if (shrink > 1.0) {
    r /= shrink;
    theta /= shrink;
  }
  return r;
}

namespace {

RealizableEnvironment finish_environment(RowMatrix transition, std::size_t dim, double discount,
                                         double tail_index, double rho, std::uint64_t seed,
                                         Rng& rng, std::string recipe) {
  if (!(rho > 0.0)) throw ConfigError("projection radius must be positive");
  RealizableEnvironment env;
  env.features = make_gaussian_features(static_cast<std::size_t>(transition.rows()), dim, rng);
  env.mrp.mean_reward = make_realizable_rewards(transition, env.features, discount, rho);
  env.mrp.transition = std::move(transition);
  env.mrp.discount = discount;
  env.mrp.noise = NoiseSpec::pareto(tail_index);
  env.mrp.seed = seed;
  env.mrp.recipe = std::move(recipe);
  env.mrp.validate();
  env.features.validate(rho);
  return env;
}

void check_common(std::size_t dim, double discount, double tail_index) {
  if (dim == 0) throw ConfigError("feature dimension must be >= 1");
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount must lie in [0, 1)");
  if (!(tail_index > 1.0)) throw ConfigError("tail_index must exceed 1");
}

}  // namespace

RealizableEnvironment make_random_mrp(std::size_t n_states, std::size_t dim, double discount,
                                      double tail_index, double rho, std::uint64_t seed) {
  if (n_states < 2) throw ConfigError("random mrp needs at least 2 states");
  check_common(dim, discount, tail_index);
  Rng rng(seed);
  RowMatrix p = random_stochastic_matrix(n_states, rng);
  return finish_environment(std::move(p), dim, discount, tail_index, rho, seed, rng,
                            "random_mrp");
}

RealizableEnvironment make_circular_walk(std::size_t n_states, std::size_t dim, double discount,
                                         double tail_index, double rho, std::uint64_t seed) {
  if (n_states <= 17) throw ConfigError("circular walk needs more than 17 states");
  check_common(dim, discount, tail_index);
  const auto n = static_cast<long long>(n_states);
  RowMatrix p = RowMatrix::Zero(n, n);
  for (long long x = 0; x < n; ++x) {
    p(x, x) = 1.0 / 3.0;
    for (long long k = 1; k <= 8; ++k) {
      p(x, (x + k) % n) = 1.0 / 24.0;
      p(x, (x - k + n) % n) = 1.0 / 24.0;
    }
  }
  Rng rng(seed);
  return finish_environment(std::move(p), dim, discount, tail_index, rho, seed, rng,
                            "circular_walk");
}

MarkovDecisionProcess make_random_mdp(std::size_t n_states, std::size_t n_actions,
                                      double discount, const NoiseSpec& noise,
                                      FeatureKind features, std::size_t dim, std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1) throw ConfigError("random mdp needs states and actions");
  Rng rng(seed);
  MarkovDecisionProcess mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = discount;
  mdp.noise = noise;
  mdp.seed = seed;
  mdp.recipe = "random_mdp";
  for (std::size_t a = 0; a < n_actions; ++a) {
    mdp.kernels.push_back(random_stochastic_matrix(n_states, rng));
  }
  mdp.mean_reward.resize(n_states, n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) mdp.mean_reward(s, a) = 2.0 * rng.uniform() - 1.0;
  }
  if (features == FeatureKind::tabular) {
    mdp.features.phi = RowMatrix::Identity(mdp.n_pairs(), mdp.n_pairs());
  } else {
    mdp.features = make_gaussian_features(mdp.n_pairs(), dim, rng);
    mdp.features.theta_star.reset();
  }
  mdp.validate();
  return mdp;
}

void check_policy_table(const RowMatrix& policy, std::size_t n_states, std::size_t n_actions) {
  if (static_cast<std::size_t>(policy.rows()) != n_states ||
      static_cast<std::size_t>(policy.cols()) != n_actions) {
    throw ConfigError("policy table must be |S| x |A|");
  }
  for (Eigen::Index s = 0; s < policy.rows(); ++s) {
    if ((policy.row(s).array() < 0.0).any() ||
        std::abs(policy.row(s).sum() - 1.0) > kPolicyTol) {
      throw ConfigError("policy row " + std::to_string(s) + " is not a distribution");
    }
  }
}

RowMatrix state_transition_under(const MarkovDecisionProcess& mdp, const RowMatrix& policy) {
  check_policy_table(policy, mdp.n_states, mdp.n_actions);
  RowMatrix p = RowMatrix::Zero(mdp.n_states, mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) p.row(s) += policy(s, a) * mdp.kernels[a].row(s);
  }
  return p;
}

RowMatrix induced_transition(const MarkovDecisionProcess& mdp, const RowMatrix& policy) {
  check_policy_table(policy, mdp.n_states, mdp.n_actions);
  const auto n = mdp.n_pairs();
  RowMatrix p = RowMatrix::Zero(n, n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const auto x = mdp.pair_index(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
        const double move = mdp.kernels[a](s, s2);
        for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2) {
          p(x, mdp.pair_index(s2, a2)) = move * policy(s2, a2);
        }
      }
    }
  }
  return p;
}

MarkovRewardProcess induced_mrp(const MarkovDecisionProcess& mdp, const RowMatrix& policy) {
  MarkovRewardProcess mrp;
  mrp.transition = induced_transition(mdp, policy);
  mrp.mean_reward = Eigen::Map<const Vector>(mdp.mean_reward.data(), mdp.mean_reward.size());
  mrp.discount = mdp.discount;
  mrp.noise = mdp.noise;
  mrp.seed = mdp.seed;
  mrp.recipe = "induced";
  mrp.validate();
  return mrp;
}

}  // namespace robrl
