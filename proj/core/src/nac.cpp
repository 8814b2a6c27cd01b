#include "robrl/nac.hpp"

#include "robrl/oracle.hpp"
#include "robrl/rng.hpp"
#include "robrl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace robrl {

LogLinearPolicy::LogLinearPolicy(RowMatrix features, std::size_t n_states, std::size_t n_actions,
                                 Vector weights)
    : features_(std::move(features)), n_states_(n_states), n_actions_(n_actions) {
  if (static_cast<std::size_t>(features_.rows()) != n_states * n_actions) {
    throw ConfigError("policy features need one row per state-action pair");
  }
  set_weights(std::move(weights));
}

LogLinearPolicy::LogLinearPolicy(const MarkovDecisionProcess& mdp, Vector weights)
    : LogLinearPolicy(mdp.features.phi, mdp.n_states, mdp.n_actions, std::move(weights)) {}

void LogLinearPolicy::set_weights(Vector weights) {
  if (weights.size() != features_.cols()) throw ConfigError("policy weights have wrong dimension");
  weights_ = std::move(weights);
}

Vector LogLinearPolicy::logits(std::size_t s) const {
  if (s >= n_states_) throw ConfigError("state index out of range");
  const auto first = static_cast<Eigen::Index>(s * n_actions_);
  return features_.middleRows(first, static_cast<Eigen::Index>(n_actions_)) * weights_;
}

Vector LogLinearPolicy::probs(std::size_t s) const {
  Vector z = logits(s);
  z.array() -= z.maxCoeff();
  Vector p = z.array().exp();
  p /= p.sum();
  // Extreme logit gaps underflow to zero; keep the support full.
  p = p.cwiseMax(std::numeric_limits<double>::min());
  return p / p.sum();
}

double LogLinearPolicy::log_prob(std::size_t s, std::size_t a) const {
  const Vector z = logits(s);
  const double top = z.maxCoeff();
  return z(static_cast<Eigen::Index>(a)) - top - std::log((z.array() - top).exp().sum());
}

Vector LogLinearPolicy::log_gradient(std::size_t s, std::size_t a) const {
  if (a >= n_actions_) throw ConfigError("action index out of range");
  const Vector pi = probs(s);
  const auto first = static_cast<Eigen::Index>(s * n_actions_);
  const auto block = features_.middleRows(first, static_cast<Eigen::Index>(n_actions_));
  return block.row(static_cast<Eigen::Index>(a)).transpose() - block.transpose() * pi;
}

RowMatrix LogLinearPolicy::table() const {
  RowMatrix out(n_states_, n_actions_);
  for (std::size_t s = 0; s < n_states_; ++s) out.row(s) = probs(s).transpose();
  return out;
}

Vector actor_update(const Vector& w, const Vector& theta_bar, double alpha) {
  return w + alpha * theta_bar;
}

OptimalPolicy exact_optimal_policy(const MarkovDecisionProcess& mdp) {
  const auto n_s = mdp.n_states;
  const auto n_a = mdp.n_actions;
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n_s));
  RowMatrix q(n_s, n_a);
  constexpr std::size_t kMaxSweeps = 1'000'000;
  std::size_t sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    for (std::size_t a = 0; a < n_a; ++a) {
      q.col(a) = mdp.mean_reward.col(a) + mdp.discount * (mdp.kernels[a] * v);
    }
    const Vector next = q.rowwise().maxCoeff();
    const double residual = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (residual <= 1e-12) break;
  }
  if (sweep == kMaxSweeps) throw NumericalError("value iteration did not converge");

  OptimalPolicy out;
  out.table = RowMatrix::Zero(n_s, n_a);
  for (std::size_t s = 0; s < n_s; ++s) {
    Eigen::Index best = 0;
    q.row(s).maxCoeff(&best);
    out.table(s, best) = 1.0;
  }
  out.q = exact_q(mdp, out.table);
  out.v = state_values(mdp, out.table, out.q);
  return out;
}

std::vector<std::string> NacConfig::problems(const MarkovDecisionProcess& mdp) const {
  std::vector<std::string> out;
  if (outer_iterations < 1) out.emplace_back("outer_iterations must be >= 1");
  if (critic_horizon < 1) out.emplace_back("critic_horizon must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) out.emplace_back("delta must lie in (0, 1)");
  if (projection_radius && !(*projection_radius > 0.0)) {
    out.emplace_back("projection_radius must be positive");
  }
  if (p && !(*p > 0.0 && *p <= 1.0)) out.emplace_back("p must lie in (0, 1]");
  if (u && !(*u > 0.0)) out.emplace_back("u must be positive");
  if (critic_step == StepKind::fixed && !(critic_eta && *critic_eta > 0.0)) {
    out.emplace_back("critic_eta must be positive for a fixed critic step");
  }
  if (actor_lr && !(*actor_lr > 0.0)) out.emplace_back("actor_lr must be positive");
  if (initial_dist) {
    try {
      check_distribution(*initial_dist, mdp.n_states, "initial_dist");
    } catch (const ConfigError& e) {
      out.emplace_back(e.what());
    }
  }
  if (w_init && static_cast<std::size_t>(w_init->size()) != mdp.features.dim()) {
    out.emplace_back("w_init has the wrong dimension");
  }
  return out;
}

NacSchedule resolve_schedule(const MarkovDecisionProcess& mdp, const NacConfig& config) {
  if (const auto issues = config.problems(mdp); !issues.empty()) {
    std::ostringstream os;
    os << "invalid NAC configuration:";
    for (const auto& issue : issues) os << "\n  - " << issue;
    throw ConfigError(os.str());
  }
  NacSchedule s;
  const double max_reward = mdp.mean_reward.cwiseAbs().maxCoeff();
  const double gamma = mdp.discount;
  const auto horizon = static_cast<double>(config.critic_horizon);
  s.rho = config.projection_radius.value_or((1.0 + max_reward) / (1.0 - gamma));
  s.p = config.p.value_or(default_moment_order(mdp.noise));
  s.u = config.u ? *config.u : u_bound(reward_moment_bound(mdp.noise, s.p, max_reward), s.rho, s.p);
  s.log_delta = nac_log_delta(config.outer_iterations, config.delta);
  s.actor_lr = config.actor_lr.value_or(
      std::sqrt(std::log(static_cast<double>(mdp.n_actions))) /
      (s.rho * std::sqrt(static_cast<double>(config.outer_iterations))));
  s.initial_dist = config.initial_dist.value_or(
      Vector::Constant(static_cast<Eigen::Index>(mdp.n_states), 1.0 / mdp.n_states));

  TdConfig& c = s.critic;
  c.horizon = config.critic_horizon;
  c.projection_radius = s.rho;
  c.sampling = config.critic_sampling;
  switch (config.critic_clip) {
    case ClipKind::horizon_constant:
      c.clip = ClipSchedule::horizon_constant_radius(s.u, horizon, s.p, config.delta);
      break;
    case ClipKind::confidence:
      c.clip = ClipSchedule::high_probability(s.u, s.p, config.delta);
      break;
    case ClipKind::power_law:
      c.clip = ClipSchedule::expected_rate(s.u, s.p);
      break;
    case ClipKind::linear:
      c.clip = ClipSchedule::linear();
      break;
    case ClipKind::infinite:
      c.clip = ClipSchedule::none();
      break;
  }
  switch (config.critic_step) {
    case StepKind::confidence_rate:
      c.step = StepSchedule::high_probability(s.rho, gamma, s.u, horizon, s.p, s.log_delta);
      break;
    case StepKind::constant_rate:
      c.step = StepSchedule::expected_rate(s.rho, gamma, s.u, horizon, s.p);
      break;
    case StepKind::markov_rate:
      c.step = StepSchedule::markovian(s.rho, s.u, horizon, s.p);
      break;
    case StepKind::inverse_time:
      // lambda_min depends on mu^{pi_k}; filled in per iteration.
      c.step = StepSchedule::full_rank(gamma, 1.0);
      break;
    case StepKind::fixed:
      c.step = StepSchedule::constant(*config.critic_eta);
      break;
  }
  return s;
}

namespace {

double best_fit_norm(const RowMatrix& phi, const Vector& q, const Vector& mu) {
  const Vector w = mu.cwiseSqrt();
  const Matrix a = w.asDiagonal() * Matrix(phi);
  const Vector b = w.cwiseProduct(q);
  return a.completeOrthogonalDecomposition().solve(b).norm();
}

}  // namespace

NacRunResult run_robust_nac(const MarkovDecisionProcess& mdp, const NacConfig& config,
                            std::uint64_t seed) {
  mdp.validate();
  NacRunResult result;
  result.seed = seed;
  result.schedule = resolve_schedule(mdp, config);
  const NacSchedule& sched = result.schedule;
  const Vector& lambda = sched.initial_dist;

  const OptimalPolicy optimal = exact_optimal_policy(mdp);
  result.optimal_value = lambda.dot(optimal.v);

  // d_lambda^{pi*}(s) pi*(a|s) over state-action pairs, fixed across iterations.
  const Vector d_star = discounted_visitation(state_transition_under(mdp, optimal.table), lambda,
                                              mdp.discount);
  Vector occupancy_star(static_cast<Eigen::Index>(mdp.n_pairs()));
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      occupancy_star(mdp.pair_index(s, a)) = d_star(s) * optimal.table(s, a);
    }
  }

  LogLinearPolicy policy(mdp, config.w_init.value_or(Vector::Zero(mdp.features.phi.cols())));
  result.best_gap = std::numeric_limits<double>::infinity();

  for (std::uint64_t k = 1; k <= config.outer_iterations; ++k) {
    if (config.snapshot_every != 0 && (k == 1 || k % config.snapshot_every == 0)) {
      result.snapshots.push_back({k, policy.weights()});
    }
    const RowMatrix table = policy.table();
    const MarkovRewardProcess chain = induced_mrp(mdp, table);

    EvaluationTarget target;
    target.phi = mdp.features.phi;
    target.mu = stationary_distribution(chain.transition).mu;
    target.value = exact_value(chain.transition, chain.mean_reward, mdp.discount).v;
    target.gamma = mdp.discount;

    NacIterationRecord rec;
    rec.k = k;
    rec.value_exact = lambda.dot(state_values(mdp, table, target.value));
    rec.gap = result.optimal_value - rec.value_exact;
    if (rec.gap < -1e-9) {
      throw NumericalError("policy value exceeds the optimal value; oracle inconsistency");
    }
    rec.c_conc = concentrability(occupancy_star, target.mu);
    rec.theta_star_norm = best_fit_norm(target.phi, target.value, target.mu);

    TdConfig critic = sched.critic;
    if (critic.step.kind == StepKind::inverse_time) {
      critic.step.lambda_min = feature_gram(target.mu, target.phi).lambda_min;
    }
    auto sampler = make_sampler(chain, target.mu, critic.sampling, derive_seed(seed, k));
    const TdRunResult critic_run = run_td(target, critic, *sampler);
    rec.critic_mse = mu_mse(critic_run.theta_avg, target.phi, target.value, target.mu);
    rec.clip_fraction =
        static_cast<double>(critic_run.clip_count) / static_cast<double>(critic.horizon);
    result.records.push_back(rec);

    if (rec.gap < result.best_gap) {
      result.best_gap = rec.gap;
      result.best_iteration = k;
    }
    if (critic_run.diverged) {
      result.diverged = true;
      result.failure = "critic at iteration " + std::to_string(k) + ": " + critic_run.failure;
      break;
    }
    policy.set_weights(actor_update(policy.weights(), critic_run.theta_avg, sched.actor_lr));
  }
  result.final_weights = policy.weights();
  return result;
}

}  // namespace robrl
