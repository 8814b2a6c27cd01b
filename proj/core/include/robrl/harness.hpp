#pragma once

#include "robrl/aggregate.hpp"
#include "robrl/experiment.hpp"
#include "robrl/nac.hpp"
#include "robrl/plot.hpp"
#include "robrl/td.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace robrl {

/// Name of the environment variable holding the default worker count.
inline constexpr const char* kWorkersEnv = "ROBRL_WORKERS";

/// Worker count from ROBRL_WORKERS, else the hardware concurrency (at least 1).
std::size_t default_worker_count();

struct RunOptions {
  std::size_t workers = 0;  // 0: default_worker_count()
  bool write_files = true;
  /// Paired robust/plain streams up to this horizon are pre-drawn once and replayed;
  /// longer ones are regenerated from the shared trial seed.
  std::uint64_t replay_limit = std::uint64_t{1} << 20;
  std::function<void(const std::string&)> progress;
};

/// Seed of trial `index`: base_seed xor a hash of the index.
std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t index);

/// Runs `count` independent jobs on up to `workers` threads. job(i) must only touch slot i
/// of whatever it writes; the first failing index (lowest) is rethrown after all finish.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job);

struct TdTrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_checksum = 0;
  std::vector<ErrorPoint> curve;
  std::uint64_t clip_count = 0;
  double sup_sq_error_final = 0.0;
  bool diverged = false;
  std::string failure;
};

struct TdAlgorithmResult {
  Algorithm algorithm = Algorithm::robust_td;
  TdConfig config;
  std::vector<TdTrialRecord> trials;
  AggregateCurve averaged;  // MSE of the running-average iterate
  AggregateCurve last;      // MSE of the last iterate
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::string spec_hash;
  Environment environment;
  std::optional<ResolvedTd> td;
  std::vector<TdAlgorithmResult> td_results;
  std::vector<NacRunResult> nac_runs;
  std::optional<AggregateCurve> nac_gap;
  /// True when every paired trial fed identical streams to all TD algorithms.
  bool streams_paired = true;
  std::vector<std::filesystem::path> files;
};

/// Generates one environment from (recipe, base_seed), runs every trial of every algorithm,
/// and (unless disabled) writes CSVs, sidecars and plots under spec.output_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// CSV text for one TD trial: trial,t,mse_avg,mse_last,clip_count_cum.
std::string td_trial_csv(const TdTrialRecord& record);
/// CSV text for one NAC run: k,value_exact,gap,critic_mse,c_conc,clip_fraction.
std::string nac_run_csv(const NacRunResult& run);
/// CSV text for an aggregate: t,mean,median,q10,q90,n_trials.
std::string aggregate_csv(const AggregateCurve& curve);

/// Reads a per-trial CSV written by run_experiment back into a curve of `column`.
TrialCurve read_trial_csv(const std::filesystem::path& path, const std::string& column);

/// Rebuilds aggregates and plots from the per-trial CSVs of an earlier run in `dir`.
std::vector<std::filesystem::path> report(const std::filesystem::path& dir);

}  // namespace robrl
