#pragma once

#include "robrl/env.hpp"
#include "robrl/schedule.hpp"
#include "robrl/td.hpp"
#include "robrl/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace robrl {

/// Softmax policy pi_W(a|s) proportional to exp(W^T Phi(s, a)).
class LogLinearPolicy {
 public:
  LogLinearPolicy(RowMatrix features, std::size_t n_states, std::size_t n_actions, Vector weights);
  LogLinearPolicy(const MarkovDecisionProcess& mdp, Vector weights);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  const Vector& weights() const { return weights_; }
  void set_weights(Vector weights);

  /// pi_W(. | s); every entry is strictly positive and the row sums to 1.
  Vector probs(std::size_t s) const;
  double log_prob(std::size_t s, std::size_t a) const;
  /// grad_W log pi_W(a|s) = Phi(s, a) - sum_a' pi_W(a'|s) Phi(s, a').
  Vector log_gradient(std::size_t s, std::size_t a) const;
  /// |S| x |A| probability table.
  RowMatrix table() const;

 private:
  Vector logits(std::size_t s) const;

  RowMatrix features_;
  std::size_t n_states_;
  std::size_t n_actions_;
  Vector weights_;
};

inline Vector policy_probs(const LogLinearPolicy& policy, std::size_t s) { return policy.probs(s); }
inline Vector log_policy_gradient(const LogLinearPolicy& policy, std::size_t s, std::size_t a) {
  return policy.log_gradient(s, a);
}

/// W + alpha * theta_bar.
Vector actor_update(const Vector& w, const Vector& theta_bar, double alpha);

struct OptimalPolicy {
  RowMatrix table;  // deterministic greedy policy
  Vector v;         // V* per state
  Vector q;         // Q* per state-action pair
};

/// Value iteration on the noiseless mean-reward MDP to sup-norm residual 1e-12.
OptimalPolicy exact_optimal_policy(const MarkovDecisionProcess& mdp);

struct NacConfig {
  std::uint64_t outer_iterations = 50;  // K
  std::uint64_t critic_horizon = 2000;  // T
  double delta = 0.1;
  std::optional<double> projection_radius;  // default (1 + max|r|) / (1 - gamma)
  std::optional<double> p;                  // default from the noise tail
  std::optional<double> u;                  // default u_bound(u0, rho, p)
  ClipKind critic_clip = ClipKind::horizon_constant;
  StepKind critic_step = StepKind::confidence_rate;
  std::optional<double> critic_eta;  // required when critic_step is fixed
  std::optional<double> actor_lr;    // default sqrt(log|A|) / (rho sqrt(K))
  SamplingMode critic_sampling = SamplingMode::iid;
  std::optional<Vector> initial_dist;  // lambda over states; default uniform
  std::optional<Vector> w_init;        // default 0 (max-entropy policy)
  std::uint64_t snapshot_every = 0;    // 0 keeps only the final weights

  std::vector<std::string> problems(const MarkovDecisionProcess& mdp) const;
};

/// Concrete values of every schedule parameter for one MDP.
struct NacSchedule {
  double rho = 0.0;
  double p = 1.0;
  double u = 1.0;
  double log_delta = 1.0;
  double actor_lr = 0.0;
  TdConfig critic;
  Vector initial_dist;
};

NacSchedule resolve_schedule(const MarkovDecisionProcess& mdp, const NacConfig& config);

struct NacIterationRecord {
  std::uint64_t k = 0;
  double value_exact = 0.0;  // V^{pi_k}(lambda)
  double gap = 0.0;          // V*(lambda) - V^{pi_k}(lambda)
  double critic_mse = 0.0;   // mu^{pi_k}-MSE of the averaged critic against Q^{pi_k}
  double c_conc = 0.0;
  double clip_fraction = 0.0;
  double theta_star_norm = 0.0;  // ||argmin_theta mu-MSE|| for Q^{pi_k}
};

struct WeightSnapshot {
  std::uint64_t k = 0;
  Vector w;
};

struct NacRunResult {
  std::vector<NacIterationRecord> records;
  double optimal_value = 0.0;  // V*(lambda)
  double best_gap = 0.0;
  std::uint64_t best_iteration = 0;
  std::vector<WeightSnapshot> snapshots;
  Vector final_weights;
  NacSchedule schedule;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string failure;
};

NacRunResult run_robust_nac(const MarkovDecisionProcess& mdp, const NacConfig& config,
                            std::uint64_t seed);

}  // namespace robrl
