#pragma once

#include "robrl/env.hpp"
#include "robrl/nac.hpp"
#include "robrl/schedule.hpp"
#include "robrl/td.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace robrl {

enum class EnvRecipe { random_mrp, circular_walk, random_mdp, file };

std::string to_string(EnvRecipe recipe);
EnvRecipe parse_env_recipe(const std::string& s);
std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& s);

struct EnvSpec {
  EnvRecipe recipe = EnvRecipe::random_mrp;
  std::size_t n_states = 64;
  std::size_t dim = 8;
  std::size_t n_actions = 3;  // random_mdp only
  double discount = 0.9;
  std::optional<double> tail_index = 1.4;  // unset means noiseless rewards
  double noise_scale = 1.0;
  double rho = 30.0;  // radius the generated theta_star is scaled into
  FeatureKind features = FeatureKind::tabular;  // random_mdp only
  std::string path;                             // file only
};

/// A policy-evaluation problem or a control problem, as produced by gen-env.
using Environment = std::variant<RealizableEnvironment, MarkovDecisionProcess>;

/// Builds the environment for `spec` from `seed` (or loads it for the file recipe).
Environment make_environment(const EnvSpec& spec, std::uint64_t seed);

enum class Algorithm { robust_td, plain_td, robust_nac };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& s);

/// TD settings before they are resolved against a concrete environment.
struct TdSpec {
  std::uint64_t horizon = 100000;
  std::optional<double> projection_radius;  // default: the environment's rho
  bool tight_radius = false;                // use ||theta_star|| as the radius
  ClipKind clip = ClipKind::linear;
  StepKind step = StepKind::inverse_time;
  std::optional<double> p;    // default from the noise tail
  std::optional<double> u;    // default u_bound(u0, rho, p)
  double delta = 0.1;         // high-probability schedules
  std::optional<double> eta;  // fixed step only
  SamplingMode sampling = SamplingMode::iid;
  RecordGrid grid;
  std::uint64_t grad_log_every = 0;
};

/// Every number a TD schedule was built from, for metadata and bound checks.
struct ResolvedTd {
  TdConfig config;
  double rho = 0.0;
  double p = 1.0;
  double u = 1.0;
  double u0 = 1.0;
  double lambda_min = 0.0;
  double log_delta = 1.0;
};

/// `fallback_rho` is the radius used when the spec sets neither a radius nor tight_radius.
ResolvedTd resolve_td(const TdSpec& spec, const RealizableEnvironment& env,
                      const EvaluationTarget& target, double fallback_rho);

struct ExperimentSpec {
  EnvSpec env;
  std::vector<Algorithm> algorithms{Algorithm::robust_td, Algorithm::plain_td};
  TdSpec td;
  NacConfig nac;
  std::uint64_t n_trials = 200;
  std::uint64_t base_seed = 1;
  std::string output_dir = "robrl-out";

  /// Every problem with the spec, in one pass (empty when valid).
  std::vector<std::string> problems() const;
  void validate() const;
  bool is_control() const;
};

}  // namespace robrl
