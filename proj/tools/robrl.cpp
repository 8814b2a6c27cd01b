// Command-line front end: gen-env, run-td, run-nac, report.
#include "robrl/harness.hpp"
#include "robrl/serialize.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using robrl::ExperimentSpec;

// Flag values; only the ones given on the command line override the config file.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool quiet = false;

  std::optional<std::string> recipe;
  std::optional<std::size_t> states;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> actions;
  std::optional<double> discount;
  std::optional<std::string> tail_index;
  std::optional<double> noise_scale;
  std::optional<double> env_rho;
  std::optional<std::string> features;
  std::optional<std::string> env_file;

  std::vector<std::string> algorithms;
  std::optional<std::uint64_t> horizon;
  std::optional<double> radius;
  bool tight_radius = false;
  std::optional<std::string> clip;
  std::optional<std::string> step;
  std::optional<double> p;
  std::optional<double> u;
  std::optional<double> delta;
  std::optional<double> eta;
  std::optional<std::string> sampling;
  std::optional<std::string> grid;
  std::optional<std::uint64_t> grad_log_every;

  std::optional<std::uint64_t> outer_iterations;
  std::optional<std::uint64_t> critic_horizon;
  std::optional<double> actor_lr;
  std::optional<double> critic_eta;
  std::optional<std::uint64_t> snapshot_every;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON spec file; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--trials", o.trials, "Number of independent trials");
  cmd->add_option("--seed", o.seed, "Base seed (environment and trial seeds derive from it)");
  cmd->add_option("-j,--workers", o.workers,
                  std::string("Worker threads (default: $") + robrl::kWorkersEnv +
                      " or all cores)");
  cmd->add_flag("-q,--quiet", o.quiet, "No progress output");
}

void add_env(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--recipe", o.recipe, "random_mrp | circular_walk | random_mdp | file");
  cmd->add_option("--states", o.states, "Number of states");
  cmd->add_option("--dim", o.dim, "Feature dimension");
  cmd->add_option("--actions", o.actions, "Number of actions (random_mdp)");
  cmd->add_option("--discount", o.discount, "Discount factor in [0, 1)");
  cmd->add_option("--tail-index", o.tail_index, "Pareto tail index of the reward noise, or 'none'");
  cmd->add_option("--noise-scale", o.noise_scale, "Pareto scale of the reward noise");
  cmd->add_option("--env-rho", o.env_rho, "Radius the generated theta_star is scaled into");
  cmd->add_option("--features", o.features, "tabular | gaussian (random_mdp)");
  cmd->add_option("--env-file", o.env_file, "Environment JSON for the file recipe");
}

void add_td(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--algorithms", o.algorithms, "robust_td and/or plain_td")->delimiter(',');
  cmd->add_option("-T,--horizon", o.horizon, "TD steps per trial");
  cmd->add_option("--radius", o.radius, "Projection radius");
  cmd->add_flag("--tight-radius", o.tight_radius, "Use ||theta_star|| as the projection radius");
  cmd->add_option("--clip", o.clip, "power_law | linear | confidence | horizon_constant | infinite");
  cmd->add_option("--step", o.step,
                  "constant_rate | inverse_time | markov_rate | confidence_rate | fixed");
  cmd->add_option("--p", o.p, "Moment order p in (0, 1]");
  cmd->add_option("--u", o.u, "Moment bound u on the semi-gradient");
  cmd->add_option("--delta", o.delta, "Failure probability for high-probability schedules");
  cmd->add_option("--eta", o.eta, "Step size for --step fixed");
  cmd->add_option("--sampling", o.sampling, "iid | markovian");
  cmd->add_option("--grid", o.grid, "geometric | stride:N");
  cmd->add_option("--grad-log-every", o.grad_log_every, "Log gradient norms every N steps");
}

void add_nac(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-K,--outer-iterations", o.outer_iterations, "Actor updates");
  cmd->add_option("-T,--critic-horizon", o.critic_horizon, "Critic TD steps per iteration");
  cmd->add_option("--radius", o.radius, "Critic projection radius");
  cmd->add_option("--clip", o.clip, "Critic clip schedule");
  cmd->add_option("--step", o.step, "Critic step schedule");
  cmd->add_option("--critic-eta", o.critic_eta, "Critic step size for --step fixed");
  cmd->add_option("--actor-lr", o.actor_lr, "Actor learning rate");
  cmd->add_option("--p", o.p, "Moment order p in (0, 1]");
  cmd->add_option("--u", o.u, "Moment bound u");
  cmd->add_option("--delta", o.delta, "Failure probability");
  cmd->add_option("--sampling", o.sampling, "Critic sampling: iid | markovian");
  cmd->add_option("--snapshot-every", o.snapshot_every, "Store policy weights every N iterations");
}

robrl::RecordGrid parse_grid(const std::string& s) {
  if (s == "geometric") return robrl::RecordGrid::geometric();
  if (s.rfind("stride:", 0) == 0) return robrl::RecordGrid::every(std::stoull(s.substr(7)));
  throw robrl::ConfigError("--grid must be 'geometric' or 'stride:N'");
}

ExperimentSpec build_spec(ExperimentSpec base, const Overrides& o, bool control) {
  ExperimentSpec s =
      o.config ? robrl::merge_spec_json(std::move(base), robrl::read_text_file(*o.config))
               : std::move(base);
  if (o.out_dir) s.output_dir = *o.out_dir;
  if (o.trials) s.n_trials = *o.trials;
  if (o.seed) s.base_seed = *o.seed;

  if (o.recipe) s.env.recipe = robrl::parse_env_recipe(*o.recipe);
  if (o.states) s.env.n_states = *o.states;
  if (o.dim) s.env.dim = *o.dim;
  if (o.actions) s.env.n_actions = *o.actions;
  if (o.discount) s.env.discount = *o.discount;
  if (o.tail_index) {
    if (*o.tail_index == "none") {
      s.env.tail_index.reset();
    } else {
      s.env.tail_index = std::stod(*o.tail_index);
    }
  }
  if (o.noise_scale) s.env.noise_scale = *o.noise_scale;
  if (o.env_rho) s.env.rho = *o.env_rho;
  if (o.features) s.env.features = robrl::parse_feature_kind(*o.features);
  if (o.env_file) {
    s.env.recipe = robrl::EnvRecipe::file;
    s.env.path = *o.env_file;
  }

  if (control) {
    robrl::NacConfig& n = s.nac;
    s.algorithms = {robrl::Algorithm::robust_nac};
    if (o.outer_iterations) n.outer_iterations = *o.outer_iterations;
    if (o.critic_horizon) n.critic_horizon = *o.critic_horizon;
    if (o.radius) n.projection_radius = *o.radius;
    if (o.clip) n.critic_clip = robrl::parse_clip_kind(*o.clip);
    if (o.step) n.critic_step = robrl::parse_step_kind(*o.step);
    if (o.critic_eta) n.critic_eta = *o.critic_eta;
    if (o.actor_lr) n.actor_lr = *o.actor_lr;
    if (o.p) n.p = *o.p;
    if (o.u) n.u = *o.u;
    if (o.delta) n.delta = *o.delta;
    if (o.sampling) n.critic_sampling = robrl::parse_sampling_mode(*o.sampling);
    if (o.snapshot_every) n.snapshot_every = *o.snapshot_every;
    return s;
  }

  if (!o.algorithms.empty()) {
    s.algorithms.clear();
    for (const auto& a : o.algorithms) s.algorithms.push_back(robrl::parse_algorithm(a));
  }
  if (o.horizon) s.td.horizon = *o.horizon;
  if (o.radius) s.td.projection_radius = *o.radius;
  if (o.tight_radius) s.td.tight_radius = true;
  if (o.clip) s.td.clip = robrl::parse_clip_kind(*o.clip);
  if (o.step) s.td.step = robrl::parse_step_kind(*o.step);
  if (o.p) s.td.p = *o.p;
  if (o.u) s.td.u = *o.u;
  if (o.delta) s.td.delta = *o.delta;
  if (o.eta) s.td.eta = *o.eta;
  if (o.sampling) s.td.sampling = robrl::parse_sampling_mode(*o.sampling);
  if (o.grid) s.td.grid = parse_grid(*o.grid);
  if (o.grad_log_every) s.td.grad_log_every = *o.grad_log_every;
  return s;
}

ExperimentSpec nac_defaults() {
  ExperimentSpec s;
  s.env.recipe = robrl::EnvRecipe::random_mdp;
  s.env.n_states = 8;
  s.env.n_actions = 3;
  s.algorithms = {robrl::Algorithm::robust_nac};
  s.n_trials = 20;
  return s;
}

robrl::RunOptions run_options(const Overrides& o) {
  robrl::RunOptions opts;
  if (o.workers) opts.workers = *o.workers;
  if (!o.quiet) opts.progress = [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); };
  return opts;
}

void print_td_summary(const robrl::ExperimentResult& r) {
  std::printf("spec %s, environment seed %llu, %llu trials\n", r.spec_hash.c_str(),
              static_cast<unsigned long long>(r.spec.base_seed),
              static_cast<unsigned long long>(r.spec.n_trials));
  if (r.td) {
    std::printf("rho %s  p %s  u %s  lambda_min %s\n", robrl::format_double(r.td->rho).c_str(),
                robrl::format_double(r.td->p).c_str(), robrl::format_double(r.td->u).c_str(),
                robrl::format_double(r.td->lambda_min).c_str());
  }
  for (const auto& alg : r.td_results) {
    const auto& last = alg.averaged.points.back();
    std::printf("%-10s t=%llu  mean %.6g  median %.6g  q10 %.6g  q90 %.6g\n",
                robrl::to_string(alg.algorithm).c_str(), static_cast<unsigned long long>(last.t),
                last.mean, last.median, last.q10, last.q90);
  }
  if (r.td_results.size() > 1) {
    std::printf("paired streams: %s\n", r.streams_paired ? "identical" : "MISMATCH");
  }
}

void print_nac_summary(const robrl::ExperimentResult& r) {
  std::printf("spec %s, environment seed %llu, %llu runs\n", r.spec_hash.c_str(),
              static_cast<unsigned long long>(r.spec.base_seed),
              static_cast<unsigned long long>(r.spec.n_trials));
  std::vector<double> best;
  for (const auto& run : r.nac_runs) best.push_back(run.best_gap);
  std::sort(best.begin(), best.end());
  std::printf("optimal value %.6g  median best gap %.6g\n", r.nac_runs.front().optimal_value,
              robrl::sorted_median(best));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust TD learning and natural actor-critic under heavy-tailed rewards"};
  app.require_subcommand(1);

  Overrides gen, td, nac;
  std::optional<std::string> env_out;
  auto* gen_cmd = app.add_subcommand("gen-env", "Create and serialize an environment");
  add_common(gen_cmd, gen);
  add_env(gen_cmd, gen);
  gen_cmd->add_option("--output", env_out, "Environment file (default <out-dir>/environment.json)");

  auto* td_cmd = app.add_subcommand("run-td", "Run robust and/or plain TD trials");
  add_common(td_cmd, td);
  add_env(td_cmd, td);
  add_td(td_cmd, td);

  auto* nac_cmd = app.add_subcommand("run-nac", "Run robust natural actor-critic trials");
  add_common(nac_cmd, nac);
  add_env(nac_cmd, nac);
  add_nac(nac_cmd, nac);

  std::string report_dir;
  auto* report_cmd =
      app.add_subcommand("report", "Rebuild aggregates and plots from an output directory");
  report_cmd->add_option("dir", report_dir, "Output directory of an earlier run")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      ExperimentSpec spec = build_spec({}, gen, false);
      const std::string path =
          env_out.value_or((std::filesystem::path(spec.output_dir) / "environment.json").string());
      const auto env = robrl::make_environment(spec.env, spec.base_seed);
      robrl::save_environment(path, env);
      std::printf("wrote %s\n", path.c_str());
    } else if (*td_cmd) {
      ExperimentSpec spec = build_spec({}, td, false);
      if (spec.is_control()) throw robrl::ConfigError("run-td does not run robust_nac; use run-nac");
      const auto result = robrl::run_experiment(spec, run_options(td));
      print_td_summary(result);
      std::printf("results in %s\n", spec.output_dir.c_str());
    } else if (*nac_cmd) {
      ExperimentSpec spec = build_spec(nac_defaults(), nac, true);
      const auto result = robrl::run_experiment(spec, run_options(nac));
      print_nac_summary(result);
      std::printf("results in %s\n", spec.output_dir.c_str());
    } else if (*report_cmd) {
      for (const auto& f : robrl::report(report_dir)) std::printf("wrote %s\n", f.c_str());
    }
  } catch (const robrl::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
