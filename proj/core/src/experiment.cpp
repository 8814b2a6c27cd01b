#include "robrl/experiment.hpp"

#include "robrl/oracle.hpp"
#include "robrl/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace robrl {

std::string to_string(EnvRecipe recipe) {
  switch (recipe) {
    case EnvRecipe::random_mrp: return "random_mrp";
    case EnvRecipe::circular_walk: return "circular_walk";
    case EnvRecipe::random_mdp: return "random_mdp";
    case EnvRecipe::file: return "file";
  }
  return "random_mrp";
}

EnvRecipe parse_env_recipe(const std::string& s) {
  if (s == "random_mrp") return EnvRecipe::random_mrp;
  if (s == "circular_walk") return EnvRecipe::circular_walk;
  if (s == "random_mdp" || s == "custom_mdp") return EnvRecipe::random_mdp;
  if (s == "file") return EnvRecipe::file;
  throw ConfigError("unknown environment recipe '" + s +
                    "' (expected random_mrp, circular_walk, random_mdp or file)");
}

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::tabular ? "tabular" : "gaussian";
}

FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "tabular") return FeatureKind::tabular;
  if (s == "gaussian") return FeatureKind::gaussian;
  throw ConfigError("unknown feature kind '" + s + "' (expected tabular or gaussian)");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::robust_td: return "robust_td";
    case Algorithm::plain_td: return "plain_td";
    case Algorithm::robust_nac: return "robust_nac";
  }
  return "robust_td";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "robust_td") return Algorithm::robust_td;
  if (s == "plain_td") return Algorithm::plain_td;
  if (s == "robust_nac") return Algorithm::robust_nac;
  throw ConfigError("unknown algorithm '" + s + "' (expected robust_td, plain_td or robust_nac)");
}

namespace {

NoiseSpec noise_of(const EnvSpec& spec) {
  if (!spec.tail_index) return NoiseSpec::none();
  return NoiseSpec::pareto(*spec.tail_index, spec.noise_scale);
}

}  // namespace

Environment make_environment(const EnvSpec& spec, std::uint64_t seed) {
  // The generators always attach Pareto noise; any valid tail works for building the chain.
  const double tail = spec.tail_index.value_or(2.0);
  switch (spec.recipe) {
    case EnvRecipe::random_mrp:
    case EnvRecipe::circular_walk: {
      RealizableEnvironment env =
          spec.recipe == EnvRecipe::random_mrp
              ? make_random_mrp(spec.n_states, spec.dim, spec.discount, tail, spec.rho, seed)
              : make_circular_walk(spec.n_states, spec.dim, spec.discount, tail, spec.rho, seed);
      env.mrp.noise = noise_of(spec);
      env.mrp.validate();
      return env;
    }
    case EnvRecipe::random_mdp:
      return make_random_mdp(spec.n_states, spec.n_actions, spec.discount, noise_of(spec),
                             spec.features, spec.dim, seed);
    case EnvRecipe::file:
      return load_environment(spec.path);
  }
  throw ConfigError("unknown environment recipe");
}

ResolvedTd resolve_td(const TdSpec& spec, const RealizableEnvironment& env,
                      const EvaluationTarget& target, double fallback_rho) {
  ResolvedTd r;
  if (spec.tight_radius) {
    if (!env.features.theta_star) {
      throw ConfigError("tight_radius needs an environment with a known theta_star");
    }
    r.rho = env.features.theta_star->norm();
    if (!(r.rho > 0.0)) throw ConfigError("tight_radius: theta_star is zero");
  } else {
    r.rho = spec.projection_radius.value_or(fallback_rho);
  }
  const NoiseSpec& noise = env.mrp.noise;
  r.p = spec.p.value_or(default_moment_order(noise));
  const double max_reward = env.mrp.mean_reward.cwiseAbs().maxCoeff();
  r.u0 = reward_moment_bound(noise, r.p, max_reward);
  r.u = spec.u ? *spec.u : u_bound(r.u0, r.rho, r.p);
  r.lambda_min = feature_gram(target.mu, target.phi).lambda_min;
  r.log_delta = td_log_delta(spec.delta);

  TdConfig& c = r.config;
  const auto horizon = static_cast<double>(spec.horizon);
  const double gamma = env.mrp.discount;
  c.horizon = spec.horizon;
  c.projection_radius = r.rho;
  c.sampling = spec.sampling;
  c.grid = spec.grid;
  c.grad_log_every = spec.grad_log_every;
  switch (spec.clip) {
    case ClipKind::power_law: c.clip = ClipSchedule::expected_rate(r.u, r.p); break;
    case ClipKind::linear: c.clip = ClipSchedule::linear(); break;
    case ClipKind::confidence: c.clip = ClipSchedule::high_probability(r.u, r.p, spec.delta); break;
    case ClipKind::horizon_constant:
      c.clip = ClipSchedule::horizon_constant_radius(r.u, horizon, r.p, spec.delta);
      break;
    case ClipKind::infinite: c.clip = ClipSchedule::none(); break;
  }
  switch (spec.step) {
    case StepKind::constant_rate:
      c.step = StepSchedule::expected_rate(r.rho, gamma, r.u, horizon, r.p);
      break;
    case StepKind::inverse_time:
      c.step = StepSchedule::full_rank(gamma, r.lambda_min);
      break;
    case StepKind::markov_rate:
      c.step = StepSchedule::markovian(r.rho, r.u, horizon, r.p);
      break;
    case StepKind::confidence_rate:
      c.step = StepSchedule::high_probability(r.rho, gamma, r.u, horizon, r.p, r.log_delta);
      break;
    case StepKind::fixed:
      c.step = StepSchedule::constant(spec.eta.value_or(0.0));
      break;
  }
  c.validate();
  return r;
}

bool ExperimentSpec::is_control() const {
  return std::find(algorithms.begin(), algorithms.end(), Algorithm::robust_nac) !=
         algorithms.end();
}

std::vector<std::string> ExperimentSpec::problems() const {
  std::vector<std::string> out;
  if (n_trials < 1) out.emplace_back("n_trials must be >= 1");
  if (output_dir.empty()) out.emplace_back("output_dir must not be empty");
  if (algorithms.empty()) out.emplace_back("at least one algorithm is required");
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    for (std::size_t k = i + 1; k < algorithms.size(); ++k) {
      if (algorithms[i] == algorithms[k]) {
        out.push_back("algorithm '" + to_string(algorithms[i]) + "' is listed twice");
      }
    }
  }
  const bool control = is_control();
  if (control && algorithms.size() > 1) {
    out.emplace_back("robust_nac cannot be combined with TD algorithms in one experiment");
  }

  if (env.recipe != EnvRecipe::file) {
    if (env.n_states < 2) out.emplace_back("env.n_states must be >= 2");
    if (env.dim < 1) out.emplace_back("env.dim must be >= 1");
    if (!(env.discount >= 0.0 && env.discount < 1.0)) {
      out.emplace_back("env.discount must lie in [0, 1)");
    }
    if (env.tail_index && !(*env.tail_index > 1.0)) {
      out.emplace_back("env.tail_index must exceed 1 (or be null for noiseless rewards)");
    }
    if (!(env.noise_scale > 0.0)) out.emplace_back("env.noise_scale must be positive");
    if (!(env.rho > 0.0)) out.emplace_back("env.rho must be positive");
  } else if (env.path.empty()) {
    out.emplace_back("env.path is required for the file recipe");
  }
  if (env.recipe == EnvRecipe::circular_walk && env.n_states <= 17) {
    out.emplace_back("env.n_states must exceed 17 for circular_walk");
  }
  if (env.recipe == EnvRecipe::random_mdp && !control) {
    out.emplace_back("random_mdp environments are only used by robust_nac");
  }
  if ((env.recipe == EnvRecipe::random_mrp || env.recipe == EnvRecipe::circular_walk) && control) {
    out.emplace_back("robust_nac needs a random_mdp or file environment");
  }
  if (env.recipe == EnvRecipe::random_mdp && env.n_actions < 1) {
    out.emplace_back("env.n_actions must be >= 1");
  }

  if (!control) {
    if (td.horizon < 1) out.emplace_back("td.horizon must be >= 1");
    if (td.projection_radius && !(*td.projection_radius > 0.0)) {
      out.emplace_back("td.projection_radius must be positive");
    }
    if (td.p && !(*td.p > 0.0 && *td.p <= 1.0)) out.emplace_back("td.p must lie in (0, 1]");
    if (td.p && env.tail_index && 1.0 + *td.p >= *env.tail_index) {
      out.emplace_back("td.p: the moment of order 1+p is infinite for env.tail_index");
    }
    if (td.u && !(*td.u > 0.0)) out.emplace_back("td.u must be positive");
    if (!(td.delta > 0.0 && td.delta < 1.0)) out.emplace_back("td.delta must lie in (0, 1)");
    if (td.step == StepKind::fixed && !(td.eta && *td.eta > 0.0)) {
      out.emplace_back("td.eta must be positive for the fixed step");
    }
    if (td.grid.kind == RecordGrid::Kind::stride && td.grid.stride < 1) {
      out.emplace_back("td.grid.stride must be >= 1");
    }
  } else if (env.recipe == EnvRecipe::random_mdp) {
    MarkovDecisionProcess shape;
    shape.n_states = env.n_states;
    shape.n_actions = env.n_actions;
    const std::size_t dim = env.features == FeatureKind::tabular ? shape.n_pairs() : env.dim;
    shape.features.phi = RowMatrix::Zero(static_cast<Eigen::Index>(shape.n_pairs()),
                                         static_cast<Eigen::Index>(dim));
    for (auto& p : nac.problems(shape)) out.push_back("nac: " + p);
  }
  return out;
}

void ExperimentSpec::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::ostringstream os;
  os << "invalid experiment spec:";
  for (const auto& issue : issues) os << "\n  - " << issue;
  throw ConfigError(os.str());
}

}  // namespace robrl
