#include "robrl/harness.hpp"

#include "robrl/oracle.hpp"
#include "robrl/rng.hpp"
#include "robrl/sampler.hpp"
#include "robrl/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace robrl {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t default_worker_count() {
  if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
    std::size_t n = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto res = std::from_chars(env, end, n);
    if (res.ec != std::errc() || res.ptr != end || n == 0) {
      throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer, got '" + env +
                        "'");
    }
    return n;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t index) {
  return derive_seed(base_seed, index);
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string td_trial_csv(const TdTrialRecord& record) {
  std::ostringstream os;
  os << "trial,t,mse_avg,mse_last,clip_count_cum\n";
  for (const auto& p : record.curve) {
    os << record.trial << ',' << p.t << ',' << format_double(p.mse_avg) << ','
       << format_double(p.mse_last) << ',' << p.clip_count_cum << '\n';
  }
  return os.str();
}

std::string nac_run_csv(const NacRunResult& run) {
  std::ostringstream os;
  os << "k,value_exact,gap,critic_mse,c_conc,clip_fraction\n";
  for (const auto& r : run.records) {
    os << r.k << ',' << format_double(r.value_exact) << ',' << format_double(r.gap) << ','
       << format_double(r.critic_mse) << ',' << format_double(r.c_conc) << ','
       << format_double(r.clip_fraction) << '\n';
  }
  return os.str();
}

std::string aggregate_csv(const AggregateCurve& curve) {
  std::ostringstream os;
  os << "t,mean,median,q10,q90,n_trials\n";
  for (const auto& p : curve.points) {
    os << p.t << ',' << format_double(p.mean) << ',' << format_double(p.median) << ','
       << format_double(p.q10) << ',' << format_double(p.q90) << ',' << curve.n_trials << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const fs::path& path) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(path.string() + ": not a number: '" + s + "'");
  }
  return x;
}

std::string trial_name(std::uint64_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%04llu", static_cast<unsigned long long>(trial));
  return buf;
}

json parsed_spec(const ExperimentSpec& spec) { return json::parse(spec_to_json(spec)); }

json td_schedule_json(const ResolvedTd& r, const TdConfig& config) {
  json samples = json::array();
  for (std::uint64_t t = 1;; t *= 10) {
    const std::uint64_t at = std::min(t, config.horizon);
    samples.push_back({{"t", at},
                       {"clip_radius", format_double(config.clip.radius(at))},
                       {"step_size", format_double(config.step.size(at))}});
    if (at == config.horizon) break;
  }
  return {{"projection_radius", r.rho},  {"p", r.p},
          {"u", r.u},                    {"u0", r.u0},
          {"lambda_min", r.lambda_min},  {"log_delta", r.log_delta},
          {"clip", to_string(config.clip.kind)},
          {"step", to_string(config.step.kind)},
          {"samples", std::move(samples)}};
}

json nac_schedule_json(const NacSchedule& s) {
  return {{"projection_radius", s.rho},
          {"p", s.p},
          {"u", s.u},
          {"log_delta", s.log_delta},
          {"actor_lr", s.actor_lr},
          {"critic_clip", to_string(s.critic.clip.kind)},
          {"critic_step", to_string(s.critic.step.kind)},
          {"critic_clip_radius_t1", format_double(s.critic.clip.radius(1))},
          {"critic_step_t1", format_double(s.critic.step.size(1))}};
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

fs::path sidecar_for(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

TrialCurve curve_of(const TdTrialRecord& r, bool averaged) {
  TrialCurve c;
  c.trial = r.trial;
  for (const auto& p : r.curve) {
    c.t.push_back(p.t);
    c.value.push_back(averaged ? p.mse_avg : p.mse_last);
  }
  return c;
}

TrialCurve gap_curve(std::uint64_t trial, const NacRunResult& run, std::uint64_t iterations) {
  TrialCurve c;
  c.trial = trial;
  for (std::uint64_t k = 1; k <= iterations; ++k) {
    c.t.push_back(k);
    c.value.push_back(k <= run.records.size() ? run.records[k - 1].gap
                                              : std::numeric_limits<double>::quiet_NaN());
  }
  return c;
}

void write_aggregate(const fs::path& path, const AggregateCurve& curve, const std::string& hash,
                     const ExperimentSpec& spec, const std::string& metric,
                     std::vector<fs::path>& files) {
  write_text_file(path, aggregate_csv(curve));
  write_json(sidecar_for(path), {{"spec_hash", hash},
                                 {"base_seed", spec.base_seed},
                                 {"algorithm", curve.algorithm},
                                 {"metric", metric},
                                 {"n_trials", curve.n_trials},
                                 {"quantile_rule", "nearest-rank"}});
  files.push_back(path);
}

class Progress {
 public:
  Progress(const RunOptions& options, std::uint64_t total) : options_(options), total_(total) {}
  void tick(const std::string& what) {
    if (!options_.progress) return;
    std::lock_guard lock(mutex_);
    ++done_;
    options_.progress(what + " (" + std::to_string(done_) + "/" + std::to_string(total_) + ")");
  }

 private:
  const RunOptions& options_;
  std::uint64_t total_;
  std::uint64_t done_ = 0;
  std::mutex mutex_;
};

void run_td_experiment(ExperimentResult& out, const RunOptions& options, std::size_t workers) {
  const ExperimentSpec& spec = out.spec;
  const auto* env = std::get_if<RealizableEnvironment>(&out.environment);
  if (env == nullptr) throw ConfigError("TD algorithms need a Markov reward process environment");
  const EvaluationTarget target = EvaluationTarget::from(env->mrp, env->features);
  out.td = resolve_td(spec.td, *env, target, spec.env.rho);

  for (Algorithm a : spec.algorithms) {
    TdAlgorithmResult r;
    r.algorithm = a;
    r.config = out.td->config;
    if (a == Algorithm::plain_td) r.config.clip = ClipSchedule::none();
    r.trials.resize(spec.n_trials);
    out.td_results.push_back(std::move(r));
  }

  const fs::path dir = spec.output_dir;
  const bool replay = out.td_results.size() > 1 && spec.td.horizon <= options.replay_limit;
  std::vector<char> paired(spec.n_trials, 1);
  const json spec_j = parsed_spec(spec);
  Progress progress(options, spec.n_trials);

  parallel_for(spec.n_trials, workers, [&](std::size_t i) {
    const std::uint64_t seed = trial_seed(spec.base_seed, i);
    std::vector<Transition> stream;
    if (replay) {
      auto sampler = make_sampler(env->mrp, target.mu, spec.td.sampling, seed);
      stream = draw(*sampler, spec.td.horizon);
    }
    for (auto& alg : out.td_results) {
      TdRunResult run;
      if (replay) {
        ReplaySource source(stream);
        run = run_td(target, alg.config, source);
      } else {
        auto sampler = make_sampler(env->mrp, target.mu, spec.td.sampling, seed);
        run = run_td(target, alg.config, *sampler);
      }
      TdTrialRecord& rec = alg.trials[i];
      rec.trial = i;
      rec.seed = seed;
      rec.stream_checksum = run.stream_checksum;
      rec.curve = std::move(run.error_curve);
      rec.clip_count = run.clip_count;
      rec.sup_sq_error_final = run.sup_sq_error_final;
      rec.diverged = run.diverged;
      rec.failure = run.failure;
      if (rec.stream_checksum != out.td_results.front().trials[i].stream_checksum) paired[i] = 0;

      if (options.write_files) {
        const fs::path csv = dir / to_string(alg.algorithm) / (trial_name(i) + ".csv");
        write_text_file(csv, td_trial_csv(rec));
        write_json(sidecar_for(csv), {{"spec_hash", out.spec_hash},
                                      {"algorithm", to_string(alg.algorithm)},
                                      {"trial", i},
                                      {"seed", seed},
                                      {"base_seed", spec.base_seed},
                                      {"stream_checksum", rec.stream_checksum},
                                      {"stream_replayed", replay},
                                      {"clip_count", rec.clip_count},
                                      {"sup_sq_error_final", format_double(rec.sup_sq_error_final)},
                                      {"diverged", rec.diverged},
                                      {"failure", rec.failure},
                                      {"schedule", td_schedule_json(*out.td, alg.config)},
                                      {"spec", spec_j}});
      }
    }
    progress.tick("trial " + std::to_string(i) + " done");
  });
  out.streams_paired = std::all_of(paired.begin(), paired.end(), [](char c) { return c != 0; });

  std::vector<PlotSeries> series;
  for (auto& alg : out.td_results) {
    std::vector<TrialCurve> avg, last;
    for (const auto& t : alg.trials) {
      avg.push_back(curve_of(t, true));
      last.push_back(curve_of(t, false));
    }
    const std::string name = to_string(alg.algorithm);
    alg.averaged = aggregate(avg, name);
    alg.last = aggregate(last, name);
    series.push_back({name, std::move(avg), alg.averaged});
  }
  if (!options.write_files) return;
  for (const auto& alg : out.td_results) {
    const std::string name = to_string(alg.algorithm);
    write_aggregate(dir / (name + "_aggregate.csv"), alg.averaged, out.spec_hash, spec, "mse_avg",
                    out.files);
    write_aggregate(dir / (name + "_aggregate_last.csv"), alg.last, out.spec_hash, spec,
                    "mse_last", out.files);
  }
  const auto plots = emit_plots(series, dir, "td", PlotLabels{"", "t", "μ-MSE"});
  out.files.insert(out.files.end(), plots.begin(), plots.end());
}

void run_nac_experiment(ExperimentResult& out, const RunOptions& options, std::size_t workers) {
  const ExperimentSpec& spec = out.spec;
  const auto* mdp = std::get_if<MarkovDecisionProcess>(&out.environment);
  if (mdp == nullptr) throw ConfigError("robust_nac needs a Markov decision process environment");
  resolve_schedule(*mdp, spec.nac);  // surfaces configuration errors before any work

  const fs::path dir = spec.output_dir;
  const json spec_j = parsed_spec(spec);
  out.nac_runs.resize(spec.n_trials);
  Progress progress(options, spec.n_trials);
  parallel_for(spec.n_trials, workers, [&](std::size_t i) {
    const std::uint64_t seed = trial_seed(spec.base_seed, i);
    NacRunResult& run = out.nac_runs[i] = run_robust_nac(*mdp, spec.nac, seed);
    if (options.write_files) {
      const fs::path csv = dir / "robust_nac" / (trial_name(i) + ".csv");
      write_text_file(csv, nac_run_csv(run));
      json snapshots = json::array();
      for (const auto& s : run.snapshots) {
        snapshots.push_back({{"k", s.k}, {"w", std::vector<double>(s.w.data(), s.w.data() + s.w.size())}});
      }
      write_json(sidecar_for(csv),
                 {{"spec_hash", out.spec_hash},
                  {"algorithm", "robust_nac"},
                  {"trial", i},
                  {"seed", seed},
                  {"base_seed", spec.base_seed},
                  {"optimal_value", run.optimal_value},
                  {"best_gap", run.best_gap},
                  {"best_iteration", run.best_iteration},
                  {"diverged", run.diverged},
                  {"failure", run.failure},
                  {"final_weights", std::vector<double>(run.final_weights.data(),
                                                        run.final_weights.data() +
                                                            run.final_weights.size())},
                  {"snapshots", std::move(snapshots)},
                  {"schedule", nac_schedule_json(run.schedule)},
                  {"spec", spec_j}});
    }
    progress.tick("run " + std::to_string(i) + " done");
  });

  std::vector<TrialCurve> gaps;
  for (std::size_t i = 0; i < out.nac_runs.size(); ++i) {
    gaps.push_back(gap_curve(i, out.nac_runs[i], spec.nac.outer_iterations));
  }
  out.nac_gap = aggregate(gaps, "robust_nac");
  if (!options.write_files) return;
  write_aggregate(dir / "robust_nac_aggregate.csv", *out.nac_gap, out.spec_hash, spec, "gap",
                  out.files);
  std::vector<PlotSeries> series{{"robust_nac", std::move(gaps), *out.nac_gap}};
  const auto plots = emit_plots(series, dir, "nac", PlotLabels{"", "k", "V*(λ) - V^πk(λ)"});
  out.files.insert(out.files.end(), plots.begin(), plots.end());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const std::size_t workers = options.workers != 0 ? options.workers : default_worker_count();

  ExperimentResult out;
  out.spec = spec;
  out.spec_hash = spec_hash(spec);
  out.environment = make_environment(spec.env, spec.base_seed);

  if (options.write_files) {
    const fs::path dir = spec.output_dir;
    try {
      write_text_file(dir / "spec.json", spec_to_json(spec) + "\n");
      save_environment(dir / "environment.json", out.environment);
    } catch (const std::exception& e) {
      throw std::runtime_error("cannot write to output directory '" + spec.output_dir +
                               "': " + e.what());
    }
    out.files.push_back(dir / "spec.json");
    out.files.push_back(dir / "environment.json");
  }

  if (spec.is_control()) {
    run_nac_experiment(out, options, workers);
  } else {
    run_td_experiment(out, options, workers);
  }
  return out;
}

TrialCurve read_trial_csv(const fs::path& path, const std::string& column) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  const auto find = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  std::ptrdiff_t time_col = find("t");
  if (time_col < 0) time_col = find("k");
  const std::ptrdiff_t value_col = find(column);
  const std::ptrdiff_t trial_col = find("trial");
  if (time_col < 0 || value_col < 0) {
    throw ConfigError(path.string() + ": missing time column or '" + column + "'");
  }

  TrialCurve curve;
  bool trial_known = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ConfigError(path.string() + ": ragged row");
    curve.t.push_back(static_cast<std::uint64_t>(parse_number(cells[time_col], path)));
    curve.value.push_back(parse_number(cells[value_col], path));
    if (trial_col >= 0 && !trial_known) {
      curve.trial = static_cast<std::uint64_t>(parse_number(cells[trial_col], path));
      trial_known = true;
    }
  }
  if (!trial_known) {
    // trial_0042.csv
    const std::string stem = path.stem().string();
    const auto pos = stem.find('_');
    if (pos != std::string::npos) {
      curve.trial = static_cast<std::uint64_t>(parse_number(stem.substr(pos + 1), path));
    }
  }
  return curve;
}

std::vector<fs::path> report(const fs::path& dir) {
  const ExperimentSpec spec = spec_from_json(read_text_file(dir / "spec.json"));
  const std::string hash = spec_hash(spec);
  std::vector<fs::path> files;
  std::vector<PlotSeries> series;
  const bool control = spec.is_control();

  for (Algorithm a : spec.algorithms) {
    const std::string name = to_string(a);
    std::vector<fs::path> csvs;
    if (fs::is_directory(dir / name)) {
      for (const auto& entry : fs::directory_iterator(dir / name)) {
        if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
      }
    }
    std::sort(csvs.begin(), csvs.end());
    if (csvs.empty()) throw ConfigError("report: no trial CSVs for " + name + " in " + dir.string());

    std::vector<TrialCurve> primary, last;
    for (const auto& csv : csvs) {
      primary.push_back(read_trial_csv(csv, control ? "gap" : "mse_avg"));
      if (!control) last.push_back(read_trial_csv(csv, "mse_last"));
    }
    AggregateCurve agg = aggregate(primary, name);
    write_aggregate(dir / (name + "_aggregate.csv"), agg, hash, spec,
                    control ? "gap" : "mse_avg", files);
    if (!control) {
      write_aggregate(dir / (name + "_aggregate_last.csv"), aggregate(last, name), hash, spec,
                      "mse_last", files);
    }
    series.push_back({name, std::move(primary), std::move(agg)});
  }
  const auto plots =
      control ? emit_plots(series, dir, "nac", PlotLabels{"", "k", "V*(λ) - V^πk(λ)"})
              : emit_plots(series, dir, "td", PlotLabels{"", "t", "μ-MSE"});
  files.insert(files.end(), plots.begin(), plots.end());
  return files;
}

}  // namespace robrl
