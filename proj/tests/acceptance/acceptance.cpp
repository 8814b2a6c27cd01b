// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code is nonzero if
// any selected criterion fails.
//
//   acceptance                  run all criteria
//   acceptance --criterion 4    run one
#include "robrl/env.hpp"
#include "robrl/harness.hpp"
#include "robrl/nac.hpp"
#include "robrl/oracle.hpp"
#include "robrl/sampler.hpp"
#include "robrl/serialize.hpp"
#include "robrl/td.hpp"

#include "reference.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace robrl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  long double s = 0.0L;
  for (double x : xs) s += x;
  return static_cast<double>(s / static_cast<long double>(xs.size()));
}

double std_error(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  long double s = 0.0L;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(static_cast<double>(s / (xs.size() - 1)) / static_cast<double>(xs.size()));
}

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<double> final_values(const TdAlgorithmResult& r, bool averaged) {
  std::vector<double> out;
  for (const auto& trial : r.trials) {
    out.push_back(averaged ? trial.curve.back().mse_avg : trial.curve.back().mse_last);
  }
  return out;
}

double value_at(const TdTrialRecord& trial, std::uint64_t t, bool averaged) {
  for (const auto& p : trial.curve) {
    if (p.t == t) return averaged ? p.mse_avg : p.mse_last;
  }
  throw std::runtime_error("time " + std::to_string(t) + " is not on the record grid");
}

RunOptions quiet(bool write = false) {
  RunOptions o;
  o.write_files = write;
  return o;
}

// ---------------------------------------------------------------------------------------------

Outcome oracle_suite() {
  Stopwatch clock;
  const auto env = make_random_mrp(64, 8, 0.9, 1.4, 30.0, 101);
  const RowMatrix& p = env.mrp.transition;
  const Vector& r = env.mrp.mean_reward;

  int violations = 0;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    Vector a(64), b(64);
    const double scale = std::exp(4.0 * rng.normal());
    for (int k = 0; k < 64; ++k) {
      a(k) = scale * rng.normal();
      b(k) = scale * rng.normal();
    }
    const double before = (a - b).lpNorm<Eigen::Infinity>();
    const double after =
        (bellman_apply(p, r, 0.9, a) - bellman_apply(p, r, 0.9, b)).lpNorm<Eigen::Infinity>();
    if (after > 0.9 * before + 1e-12 * std::max(1.0, before)) ++violations;
  }

  const Vector v = exact_value(p, r, 0.9).v;
  const double bellman_residual = (bellman_apply(p, r, 0.9, v) - v).lpNorm<Eigen::Infinity>();

  double stationary_residual = 0.0;
  for (auto method : {StationaryMethod::direct, StationaryMethod::power}) {
    const Vector mu = stationary_distribution(p, method).mu;
    const Vector moved = (mu.transpose() * p).transpose();
    stationary_residual = std::max(stationary_residual, (moved - mu).cwiseAbs().sum());
  }

  Vector lambda0 = Vector::Zero(64);
  lambda0(0) = 0.25;
  lambda0(10) = 0.75;
  const Vector d = discounted_visitation(p, lambda0, 0.9);
  const Vector series = reference::visitation_series(p, lambda0, 0.9, 800);
  const double visitation_gap = (d - series).cwiseAbs().maxCoeff();

  const double secs = clock.seconds();
  Outcome out;
  out.pass = violations == 0 && bellman_residual <= 1e-10 && stationary_residual <= 1e-10 &&
             visitation_gap <= 1e-8 && secs < 10.0;
  std::ostringstream os;
  os << "contraction violations " << violations << "/1000, bellman residual "
     << fmt("%.2e", bellman_residual) << ", stationary residual "
     << fmt("%.2e", stationary_residual) << ", visitation gap " << fmt("%.2e", visitation_gap)
     << ", " << fmt("%.1f", secs) << " s";
  out.detail = os.str();
  return out;
}

Outcome clipping_off_equivalence() {
  Stopwatch clock;
  const auto env = make_random_mrp(64, 8, 0.9, 1.4, 30.0, 202);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  const double lambda_min = feature_gram(target.mu, target.phi).lambda_min;
  const std::uint64_t horizon = 100000;

  TdConfig config;
  config.horizon = horizon;
  config.projection_radius = 30.0;
  config.clip = ClipSchedule::none();
  config.step = StepSchedule::full_rank(0.9, lambda_min);

  int mismatched = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TdRunResult robust = run_robust_td(env.mrp, target, config, seed);
    IidSampler sampler(env.mrp, target.mu, seed);
    const auto plain = reference::plain_projected_td(
        target.phi, 0.9, 30.0, horizon,
        [&](std::uint64_t t) {
          return 1.0 / ((1.0 - 0.9) * static_cast<double>(t) * lambda_min);
        },
        sampler);
    bool same = true;
    for (Eigen::Index i = 0; i < robust.theta_final.size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      same = same && std::memcmp(&robust.theta_final(i), &plain.theta_final[k], 8) == 0 &&
             std::memcmp(&robust.theta_avg(i), &plain.theta_avg[k], 8) == 0;
    }
    if (!same) ++mismatched;
  }
  const double secs = clock.seconds();
  return {mismatched == 0 && secs < 30.0,
          std::to_string(10 - mismatched) + "/10 seeds bit-identical at T = 1e5, " +
              fmt("%.1f", secs) + " s"};
}

Outcome moment_bound() {
  Stopwatch clock;
  const double rho = 30.0, p = 0.3;
  const auto env = make_random_mrp(64, 8, 0.9, 1.4, rho, 303);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  const double u0 =
      reward_moment_bound(env.mrp.noise, p, env.mrp.mean_reward.cwiseAbs().maxCoeff());
  const double u = u_bound(u0, rho, p);

  Rng rng(31);
  double worst = 0.0;
  int exceed = 0;
  for (int j = 0; j < 20; ++j) {
    // Uniform in the ball: Gaussian direction, radius rho U^{1/d}.
    Vector theta(8);
    for (int i = 0; i < 8; ++i) theta(i) = rng.normal();
    theta *= rho * std::pow(rng.uniform_open_closed(), 1.0 / 8.0) / theta.norm();
    IidSampler sampler(env.mrp, target.mu, derive_seed(3030, static_cast<std::uint64_t>(j)));
    long double sum = 0.0L;
    const int n = 1000000;
    for (int t = 0; t < n; ++t) {
      const double g = semi_gradient(theta, sampler.next(), target.phi, 0.9).norm();
      sum += std::pow(g, 1.0 + p);
    }
    const double m = static_cast<double>(sum / n);
    worst = std::max(worst, m);
    if (m > u) ++exceed;
  }
  const double secs = clock.seconds();
  return {exceed == 0 && secs < 120.0,
          "max empirical E||g||^1.3 = " + fmt("%.4g", worst) + " vs u = " + fmt("%.4g", u) +
              " (" + std::to_string(exceed) + "/20 above), " + fmt("%.1f", secs) + " s"};
}

ExperimentSpec desk_spec(std::uint64_t horizon, std::uint64_t trials) {
  ExperimentSpec spec;
  spec.env.recipe = EnvRecipe::random_mrp;
  spec.env.n_states = 64;
  spec.env.dim = 8;
  spec.env.discount = 0.9;
  spec.env.tail_index = 1.4;
  spec.env.rho = 30.0;
  spec.algorithms = {Algorithm::robust_td};
  spec.td.horizon = horizon;
  spec.td.tight_radius = true;
  spec.td.p = 0.3;
  spec.td.clip = ClipKind::power_law;
  spec.td.step = StepKind::constant_rate;
  spec.n_trials = trials;
  spec.base_seed = 404;
  return spec;
}

// 6 rho u^{1/(1+p)} / ((1 - gamma) T^{p/(1+p)})
double expected_bound(double rho, double u, double p, double gamma, double horizon) {
  return 6.0 * rho * std::pow(u, 1.0 / (1.0 + p)) /
         ((1.0 - gamma) * std::pow(horizon, p / (1.0 + p)));
}

Outcome expected_rate_bound_check() {
  Stopwatch clock;
  bool all_below = true;
  std::vector<double> means;
  std::ostringstream os;
  for (int k : {8, 10, 12}) {
    const auto horizon = std::uint64_t{1} << k;
    const auto result = run_experiment(desk_spec(horizon, 200), quiet());
    const auto& td = *result.td;
    const auto values = final_values(result.td_results[0], true);
    const double m = mean_of(values);
    const double bound =
        expected_bound(td.rho, td.u, td.p, 0.9, static_cast<double>(horizon));
    all_below = all_below && m <= bound;
    means.push_back(m);
    os << "T=2^" << k << ": mean " << fmt("%.4g", m) << " ± " << fmt("%.2g", std_error(values))
       << " (SE) vs bound " << fmt("%.4g", bound) << "; ";
  }
  const bool decreasing = means.back() < means.front();
  const double secs = clock.seconds();
  os << (decreasing ? "decreasing" : "NOT decreasing") << ", " << fmt("%.1f", secs) << " s";
  return {all_below && decreasing && secs < 600.0, os.str()};
}

struct Setup {
  const char* name;
  std::size_t states;
  std::size_t dim;
  double tail;
};

Outcome figure_reproduction(const fs::path& out_dir) {
  Stopwatch clock;
  const Setup setups[] = {{"64x4/tail1.4", 64, 4, 1.4}, {"128x32/tail1.2", 128, 32, 1.2}};
  bool pass = true;
  std::ostringstream os;
  for (const auto& s : setups) {
    ExperimentSpec spec;
    spec.env.n_states = s.states;
    spec.env.dim = s.dim;
    spec.env.tail_index = s.tail;
    spec.env.rho = 30.0;
    spec.td.horizon = 100000;
    spec.td.clip = ClipKind::linear;
    spec.td.step = StepKind::inverse_time;
    spec.algorithms = {Algorithm::robust_td, Algorithm::plain_td};
    spec.n_trials = 200;
    spec.base_seed = 505;
    spec.output_dir = (out_dir / ("figure_" + std::to_string(s.states))).string();
    const auto result = run_experiment(spec, quiet(true));
    const auto& robust = result.td_results[0];
    const auto& plain = result.td_results[1];

    // These schedules carry a last-iterate guarantee, so the last iterate is scored; the
    // averaged iterate is reported alongside.
    for (bool averaged : {false, true}) {
      std::vector<double> robust_at_100;
      for (const auto& trial : robust.trials) {
        robust_at_100.push_back(value_at(trial, 100, averaged));
      }
      const auto robust_final = final_values(robust, averaged);
      const auto plain_final = final_values(plain, averaged);
      const double r100 = mean_of(robust_at_100), r_end = mean_of(robust_final);
      const double p_end = mean_of(plain_final);
      const double robust_median = median_of(robust_final);
      std::size_t outliers = 0;
      for (double x : plain_final) outliers += x > 10.0 * robust_median;
      const double outlier_frac = static_cast<double>(outliers) / plain_final.size();
      const bool a = r_end <= 0.25 * r100;
      const bool b = p_end >= 5.0 * r_end;
      const bool c = outlier_frac >= 0.01;
      if (!averaged) pass = pass && a && b && c;
      os << s.name << (averaged ? " [averaged, info]" : " [last]") << ": (a) "
         << fmt("%.3g", r_end) << "/" << fmt("%.3g", r100) << " = " << fmt("%.3f", r_end / r100)
         << (a ? " ok" : " FAIL") << "; (b) plain/robust = " << fmt("%.3f", p_end / r_end)
         << (b ? " ok" : " FAIL") << "; (c) outliers " << fmt("%.1f", 100 * outlier_frac) << "%"
         << (c ? " ok" : " FAIL") << "; ";
    }
    pass = pass && result.streams_paired;
  }
  const double secs = clock.seconds();
  os << fmt("%.1f", secs) << " s";
  return {pass && secs < 1200.0, os.str()};
}

// (rho u^{1/(1+p)} / ((1-gamma) T^{p/(1+p)})) (3 L^{-(1-p)/(2(1+p))} + 7 L^{p/(1+p)})
double confidence_bound(double rho, double u, double p, double gamma, double horizon,
                        double log_delta) {
  const double lead = rho * std::pow(u, 1.0 / (1.0 + p)) /
                      ((1.0 - gamma) * std::pow(horizon, p / (1.0 + p)));
  return lead * (3.0 * std::pow(log_delta, -(1.0 - p) / (2.0 * (1.0 + p))) +
                 7.0 * std::pow(log_delta, p / (1.0 + p)));
}

Outcome high_probability_check() {
  Stopwatch clock;
  const double delta = 0.2;
  auto spec = desk_spec(std::uint64_t{1} << 12, 300);
  spec.td.clip = ClipKind::confidence;
  spec.td.step = StepKind::confidence_rate;
  spec.td.delta = delta;
  const auto result = run_experiment(spec, quiet());
  const auto& td = *result.td;
  const double bound = confidence_bound(td.rho, td.u, td.p, 0.9, 4096.0, std::log(4.0 / delta));
  const auto values = final_values(result.td_results[0], true);
  std::size_t above = 0;
  for (double x : values) above += x > bound;
  const double frac = static_cast<double>(above) / values.size();
  const double secs = clock.seconds();
  return {frac <= delta + 0.05 && secs < 900.0,
          "fraction above bound " + fmt("%.4f", frac) + " (limit " + fmt("%.2f", delta + 0.05) +
              "), bound " + fmt("%.4g", bound) + ", max MSE " +
              fmt("%.4g", *std::max_element(values.begin(), values.end())) + ", " +
              fmt("%.1f", secs) + " s"};
}

ExperimentSpec nac_spec(std::uint64_t trials) {
  ExperimentSpec spec;
  spec.env.recipe = EnvRecipe::random_mdp;
  spec.env.n_states = 8;
  spec.env.n_actions = 3;
  spec.env.features = FeatureKind::tabular;
  spec.env.tail_index = 1.4;
  spec.algorithms = {Algorithm::robust_nac};
  spec.nac.outer_iterations = 50;
  spec.nac.critic_horizon = 2000;
  spec.nac.delta = 0.1;
  spec.n_trials = trials;
  spec.base_seed = 707;
  return spec;
}

Outcome nac_desk_run() {
  Stopwatch clock;
  const auto result = run_experiment(nac_spec(20), quiet());
  const auto& mdp = std::get<MarkovDecisionProcess>(result.environment);
  const Vector lambda = Vector::Constant(8, 1.0 / 8.0);
  const auto optimal = exact_optimal_policy(mdp);
  const double v_star = lambda.dot(optimal.v);
  const RowMatrix uniform = RowMatrix::Constant(8, 3, 1.0 / 3.0);
  const double v_unif = lambda.dot(state_values(mdp, uniform, exact_q(mdp, uniform)));

  std::vector<double> best;
  bool running_min_ok = true;
  for (const auto& run : result.nac_runs) {
    double running = std::numeric_limits<double>::infinity();
    for (const auto& rec : run.records) {
      const double next = std::min(running, rec.gap);
      running_min_ok = running_min_ok && next <= running;
      running = next;
    }
    running_min_ok = running_min_ok && running == run.best_gap;
    best.push_back(run.best_gap);
  }
  const double median_gap = median_of(best);
  const double limit = 0.05 * (v_star - v_unif);
  const double secs = clock.seconds();
  return {median_gap <= limit && running_min_ok && secs < 900.0,
          "median best gap " + fmt("%.4g", median_gap) + " vs limit " + fmt("%.4g", limit) +
              " (V* " + fmt("%.4f", v_star) + ", V^unif " + fmt("%.4f", v_unif) +
              "), running minimum " + (running_min_ok ? "ok" : "BROKEN") + ", " +
              fmt("%.1f", secs) + " s"};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), dir).string()] = read_text_file(entry.path());
    }
  }
  return out;
}

Outcome determinism_audit(const fs::path& out_dir) {
  Stopwatch clock;
  auto paired = desk_spec(100000, 20);
  paired.env.dim = 4;
  paired.td.tight_radius = false;
  paired.td.clip = ClipKind::linear;
  paired.td.step = StepKind::inverse_time;
  paired.td.p.reset();
  paired.algorithms = {Algorithm::robust_td, Algorithm::plain_td};

  struct Case {
    std::string name;
    ExperimentSpec spec;
  };
  std::vector<Case> cases{{"expected_rate", desk_spec(1024, 200)},
                          {"paired", paired},
                          {"nac", nac_spec(3)}};
  std::size_t files = 0, differing = 0;
  for (auto& c : cases) {
    std::map<std::string, std::string> first;
    // Both runs use the same output directory; the spec, and so every sidecar, is unchanged.
    const fs::path dir = out_dir / "determinism" / c.name;
    c.spec.output_dir = dir.string();
    for (int rep = 0; rep < 2; ++rep) {
      fs::remove_all(dir);
      RunOptions options = quiet(true);
      options.workers = rep == 0 ? 1 : 0;  // serial first, then the default worker count
      run_experiment(c.spec, options);
      auto tree = read_tree(dir);
      if (rep == 0) {
        first = std::move(tree);
      } else {
        for (const auto& [name, text] : first) {
          ++files;
          const auto it = tree.find(name);
          if (it == tree.end() || it->second != text) ++differing;
        }
        if (tree.size() != first.size()) ++differing;
      }
    }
  }

  // Pairing: replayed streams and regenerated streams both feed identical transitions.
  std::size_t unpaired = 0, trials = 0;
  for (std::uint64_t limit : {std::uint64_t{1} << 20, std::uint64_t{0}}) {
    RunOptions options = quiet();
    options.replay_limit = limit;
    const auto result = run_experiment(paired, options);
    const auto& robust = result.td_results[0].trials;
    const auto& plain = result.td_results[1].trials;
    for (std::size_t i = 0; i < robust.size(); ++i) {
      ++trials;
      if (robust[i].stream_checksum != plain[i].stream_checksum) ++unpaired;
    }
    if (!result.streams_paired) ++unpaired;
  }
  const double secs = clock.seconds();
  return {differing == 0 && unpaired == 0 && files > 0,
          std::to_string(files - differing) + "/" + std::to_string(files) +
              " files identical across reruns; " + std::to_string(trials - unpaired) + "/" +
              std::to_string(trials) + " paired trials with matching stream checksums, " +
              fmt("%.1f", secs) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  std::string out = "acceptance-out";
  app.add_option("-c,--criterion", selected, "Criterion number(s), 1-8")
      ->check(CLI::Range(1, 8));
  app.add_option("-o,--out-dir", out, "Where runs that write files put them");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8};

  const fs::path out_dir(out);
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"oracle property suite", oracle_suite}},
      {2, {"clipping-off equivalence", clipping_off_equivalence}},
      {3, {"gradient moment bound", moment_bound}},
      {4, {"expected-rate bound", expected_rate_bound_check}},
      {5, {"heavy-tail comparison", [&] { return figure_reproduction(out_dir); }}},
      {6, {"high-probability bound", high_probability_check}},
      {7, {"actor-critic desk run", nac_desk_run}},
      {8, {"determinism and pairing", [&] { return determinism_audit(out_dir); }}},
  };

  bool all = true;
  for (int n : selected) {
    const auto& [name, run] = criteria.at(n);
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d %s: %s: %s\n", n, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
