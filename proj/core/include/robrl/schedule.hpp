#pragma once

#include <cstdint>
#include <string>

namespace robrl {

/// Clipping radius sequences b_t for the gradient gate 1{||g_t|| <= b_t}.
enum class ClipKind {
  power_law,         // b_t = (u t)^{1/(1+p)}
  linear,            // b_t = t
  confidence,        // b_t = (u t / L_delta)^{1/(1+p)}, L_delta = log(4/delta)
  horizon_constant,  // b = (u T / log(4T/delta))^{1/(1+p)}, constant in t
  infinite,          // no clipping
};

struct ClipSchedule {
  ClipKind kind = ClipKind::infinite;
  double u = 1.0;
  double p = 1.0;
  double delta = 0.1;
  double horizon = 1.0;

  static ClipSchedule expected_rate(double u, double p) { return {ClipKind::power_law, u, p}; }
  static ClipSchedule linear() { return {ClipKind::linear}; }
  static ClipSchedule high_probability(double u, double p, double delta) {
    return {ClipKind::confidence, u, p, delta};
  }
  static ClipSchedule horizon_constant_radius(double u, double horizon, double p, double delta) {
    return {ClipKind::horizon_constant, u, p, delta, horizon};
  }
  static ClipSchedule none() { return {}; }

  double radius(std::uint64_t t) const;
  void validate() const;
};

enum class StepKind {
  constant_rate,    // 2 rho (1-gamma) / (u T)^{1/(1+p)}
  inverse_time,     // 1 / ((1-gamma) t lambda_min)
  markov_rate,      // sqrt(2) rho (u T)^{-1/(1+p)}
  confidence_rate,  // sqrt(2) (1-gamma) rho L^{(1-p)/(2(1+p))} / (u T)^{1/(1+p)}
  fixed,
};

struct StepSchedule {
  StepKind kind = StepKind::fixed;
  double rho = 1.0;
  double gamma = 0.0;
  double u = 1.0;
  double horizon = 1.0;
  double p = 1.0;
  double lambda_min = 0.0;
  double log_delta = 1.0;  // L_delta, supplied by the caller (log(4/delta) or log(4K/delta))
  double eta = 0.0;

  static StepSchedule expected_rate(double rho, double gamma, double u, double horizon, double p);
  static StepSchedule full_rank(double gamma, double lambda_min);
  static StepSchedule markovian(double rho, double u, double horizon, double p);
  static StepSchedule high_probability(double rho, double gamma, double u, double horizon,
                                       double p, double log_delta);
  static StepSchedule constant(double eta);

  double size(std::uint64_t t) const;
  void validate() const;
};

/// Gradient moment bound from the reward moment bound u0:
/// min{(u0^{1/(1+p)} + 2 rho)^{1+p}, u0 + 2^{2p+3} rho^{1+p}}.
double u_bound(double u0, double rho, double p);

/// L_delta = log(4 / delta) for a single TD run.
double td_log_delta(double delta);
/// L_delta = log(4 K / delta) across K actor-critic iterations.
double nac_log_delta(std::uint64_t outer_iterations, double delta);

// Right-hand sides of the finite-time guarantees, used for bound checks and reporting.

/// Expected mu-MSE of the averaged iterate with the expected-rate schedules.
double expected_rate_bound(double rho, double u, double p, double gamma, double horizon);
/// Full-rank constant C_p(u, lambda_min, gamma, rho).
double full_rank_constant(double u, double lambda_min, double gamma, double rho);
double full_rank_average_bound(double u, double lambda_min, double gamma, double rho, double p,
                               double horizon);
double full_rank_last_bound(double u, double lambda_min, double gamma, double rho, double p,
                            double horizon);
double markovian_bound(double rho, double u, double p, double gamma, double horizon,
                       double mixing);
/// High-probability (1 - delta) bound on the mu-MSE of the averaged iterate.
double high_probability_bound(double rho, double u, double p, double gamma, double horizon,
                              double log_delta);
double nac_bound(double rho, std::size_t n_actions, double gamma, std::uint64_t outer_iterations,
                 double u, double c_conc, double p, double horizon, double log_delta);

std::string to_string(ClipKind kind);
std::string to_string(StepKind kind);
ClipKind parse_clip_kind(const std::string& s);
StepKind parse_step_kind(const std::string& s);

}  // namespace robrl
