#pragma once

#include "robrl/env.hpp"
#include "robrl/sampler.hpp"
#include "robrl/schedule.hpp"
#include "robrl/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace robrl {

enum class SamplingMode { iid, markovian };

std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& s);

/// Time points at which the error curve is evaluated. The geometric grid holds the powers
/// of 2 and of 10 up to the horizon.
struct RecordGrid {
  enum class Kind { geometric, stride };
  Kind kind = Kind::geometric;
  std::uint64_t stride = 1;

  static RecordGrid geometric() { return {}; }
  static RecordGrid every(std::uint64_t stride) { return {Kind::stride, stride}; }

  /// Sorted, unique points in [1, horizon]; always contains 1 and horizon.
  std::vector<std::uint64_t> points(std::uint64_t horizon) const;
};

struct TdConfig {
  std::uint64_t horizon = 1000;
  double projection_radius = 30.0;
  ClipSchedule clip;
  StepSchedule step;
  SamplingMode sampling = SamplingMode::iid;
  RecordGrid grid;
  std::uint64_t grad_log_every = 0;  // 0 disables the gradient-norm log
  bool store_iterates = false;       // keep Theta(1..T+1); small horizons only
  std::optional<Vector> theta_init;  // defaults to 0

  /// Every problem with the configuration, in one pass (empty when valid).
  std::vector<std::string> problems() const;
  void validate() const;
};

/// Everything the learner is scored against: features, exact values, stationary weights.
struct EvaluationTarget {
  RowMatrix phi;
  Vector value;
  Vector mu;
  double gamma = 0.0;

  static EvaluationTarget from(const MarkovRewardProcess& mrp, const FeatureMap& features);
};

struct ErrorPoint {
  std::uint64_t t = 0;
  double mse_avg = 0.0;   // mu-MSE of the running average (1/t) sum_{s<=t} Theta(s)
  double mse_last = 0.0;  // mu-MSE of Theta(t+1)
  std::uint64_t clip_count_cum = 0;
};

struct GradientRecord {
  std::uint64_t t = 0;
  double norm = 0.0;
  double radius = 0.0;
  double step = 0.0;
  bool dropped = false;
};

struct TdRunResult {
  Vector theta_final;  // Theta(T+1)
  Vector theta_avg;    // (1/T) sum_{t=1}^T Theta(t)
  std::vector<ErrorPoint> error_curve;
  std::uint64_t clip_count = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_checksum = 0;
  double sup_sq_error_final = 0.0;
  std::vector<GradientRecord> gradient_log;
  std::vector<Vector> iterates;
  bool diverged = false;
  std::string failure;
};

/// (R + gamma <theta, Phi(x')> - <theta, Phi(x)>) Phi(x).
Vector semi_gradient(const Vector& theta, const Transition& tr, const RowMatrix& phi,
                     double gamma);

/// g if ||g||_2 <= b, else the zero vector.
Vector clip_gate(const Vector& g, double b);

/// Euclidean projection onto the ball of radius rho around the origin.
Vector project_ball(const Vector& theta, double rho);

std::unique_ptr<TransitionSource> make_sampler(const MarkovRewardProcess& mrp, const Vector& mu,
                                               SamplingMode mode, std::uint64_t seed);

/// Projected TD with the clipping gate, consuming exactly config.horizon transitions.
TdRunResult run_td(const EvaluationTarget& target, const TdConfig& config,
                   TransitionSource& source);

TdRunResult run_robust_td(const MarkovRewardProcess& mrp, const EvaluationTarget& target,
                          const TdConfig& config, std::uint64_t seed);

TdRunResult run_robust_td(const MarkovRewardProcess& mrp, const FeatureMap& features,
                          const TdConfig& config, std::uint64_t seed);

}  // namespace robrl
