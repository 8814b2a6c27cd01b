#include "robrl/schedule.hpp"

#include "robrl/types.hpp"

#include <cmath>
#include <limits>

namespace robrl {

namespace {

void require_moment(double u, double p, const char* what) {
  if (!(u > 0.0)) throw ConfigError(std::string(what) + ": u must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + ": p must lie in (0, 1]");
}

void require_delta(double delta, const char* what) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError(std::string(what) + ": delta must lie in (0, 1)");
}

double indicator_rate(double p, double horizon) {
  // 1{p != 1} T^{-p} / (1 - p) + 1{p == 1} log(eT) / T
  if (p != 1.0) return std::pow(horizon, -p) / (1.0 - p);
  return std::log(std::exp(1.0) * horizon) / horizon;
}

}  // namespace

double ClipSchedule::radius(std::uint64_t t) const {
  const auto tt = static_cast<double>(t);
  switch (kind) {
    case ClipKind::power_law:
      return std::pow(u * tt, 1.0 / (1.0 + p));
    case ClipKind::linear:
      return tt;
    case ClipKind::confidence:
      return std::pow(u * tt / td_log_delta(delta), 1.0 / (1.0 + p));
    case ClipKind::horizon_constant:
      return std::pow(u * horizon / std::log(4.0 * horizon / delta), 1.0 / (1.0 + p));
    case ClipKind::infinite:
      return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

void ClipSchedule::validate() const {
  switch (kind) {
    case ClipKind::power_law:
      require_moment(u, p, "clip power_law");
      break;
    case ClipKind::confidence:
      require_moment(u, p, "clip confidence");
      require_delta(delta, "clip confidence");
      break;
    case ClipKind::horizon_constant:
      require_moment(u, p, "clip horizon_constant");
      require_delta(delta, "clip horizon_constant");
      if (!(horizon >= 1.0)) throw ConfigError("clip horizon_constant: horizon must be >= 1");
      break;
    case ClipKind::linear:
    case ClipKind::infinite:
      break;
  }
}

StepSchedule StepSchedule::expected_rate(double rho, double gamma, double u, double horizon,
                                         double p) {
  StepSchedule s;
  s.kind = StepKind::constant_rate;
  s.rho = rho;
  s.gamma = gamma;
  s.u = u;
  s.horizon = horizon;
  s.p = p;
  return s;
}

StepSchedule StepSchedule::full_rank(double gamma, double lambda_min) {
  StepSchedule s;
  s.kind = StepKind::inverse_time;
  s.gamma = gamma;
  s.lambda_min = lambda_min;
  return s;
}

StepSchedule StepSchedule::markovian(double rho, double u, double horizon, double p) {
  StepSchedule s;
  s.kind = StepKind::markov_rate;
  s.rho = rho;
  s.u = u;
  s.horizon = horizon;
  s.p = p;
  return s;
}

StepSchedule StepSchedule::high_probability(double rho, double gamma, double u, double horizon,
                                            double p, double log_delta) {
  StepSchedule s;
  s.kind = StepKind::confidence_rate;
  s.rho = rho;
  s.gamma = gamma;
  s.u = u;
  s.horizon = horizon;
  s.p = p;
  s.log_delta = log_delta;
  return s;
}

StepSchedule StepSchedule::constant(double eta) {
  StepSchedule s;
  s.kind = StepKind::fixed;
  s.eta = eta;
  return s;
}

double StepSchedule::size(std::uint64_t t) const {
  const double q = 1.0 / (1.0 + p);
  switch (kind) {
    case StepKind::constant_rate:
      return 2.0 * rho * (1.0 - gamma) / std::pow(u * horizon, q);
    case StepKind::inverse_time:
      return 1.0 / ((1.0 - gamma) * static_cast<double>(t) * lambda_min);
    case StepKind::markov_rate:
      return std::sqrt(2.0) * rho * std::pow(u * horizon, -q);
    case StepKind::confidence_rate:
      return std::sqrt(2.0) * (1.0 - gamma) * rho *
             std::pow(log_delta, (1.0 - p) / (2.0 * (1.0 + p))) / std::pow(u * horizon, q);
    case StepKind::fixed:
      return eta;
  }
  return eta;
}

void StepSchedule::validate() const {
  auto require_gamma = [&] {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("step schedule: gamma must lie in [0, 1)");
  };
  switch (kind) {
    case StepKind::constant_rate:
      require_gamma();
      require_moment(u, p, "step constant_rate");
      if (!(rho > 0.0 && horizon >= 1.0)) throw ConfigError("step constant_rate: need rho > 0, T >= 1");
      break;
    case StepKind::inverse_time:
      require_gamma();
      if (!(lambda_min > 0.0)) {
        throw ConfigError("step inverse_time: requires lambda_min > 0 (full-rank features)");
      }
      break;
    case StepKind::markov_rate:
      require_moment(u, p, "step markov_rate");
      if (!(rho > 0.0 && horizon >= 1.0)) throw ConfigError("step markov_rate: need rho > 0, T >= 1");
      break;
    case StepKind::confidence_rate:
      require_gamma();
      require_moment(u, p, "step confidence_rate");
      if (!(rho > 0.0 && horizon >= 1.0 && log_delta > 0.0)) {
        throw ConfigError("step confidence_rate: need rho > 0, T >= 1, L_delta > 0");
      }
      break;
    case StepKind::fixed:
      if (!(eta > 0.0)) throw ConfigError("step fixed: eta must be positive");
      break;
  }
}

double u_bound(double u0, double rho, double p) {
  if (!(u0 > 0.0) || !(rho >= 0.0) || !(p > 0.0 && p <= 1.0)) {
    throw ConfigError("u_bound: parameter out of range");
  }
  const double q = 1.0 + p;
  const double minkowski = std::pow(std::pow(u0, 1.0 / q) + 2.0 * rho, q);
  const double triangle = u0 + std::pow(2.0, 2.0 * p + 3.0) * std::pow(rho, q);
  return std::min(minkowski, triangle);
}

double td_log_delta(double delta) {
  require_delta(delta, "td_log_delta");
  return std::log(4.0 / delta);
}

double nac_log_delta(std::uint64_t outer_iterations, double delta) {
  require_delta(delta, "nac_log_delta");
  return std::log(4.0 * static_cast<double>(outer_iterations) / delta);
}

double expected_rate_bound(double rho, double u, double p, double gamma, double horizon) {
  return 6.0 * rho * std::pow(u, 1.0 / (1.0 + p)) /
         ((1.0 - gamma) * std::pow(horizon, p / (1.0 + p)));
}

double full_rank_constant(double u, double lambda_min, double gamma, double rho) {
  return u / (1.0 - gamma) * (4.0 * rho + 1.0 / ((1.0 - gamma) * lambda_min));
}

double full_rank_average_bound(double u, double lambda_min, double gamma, double rho, double p,
                               double horizon) {
  return full_rank_constant(u, lambda_min, gamma, rho) * indicator_rate(p, horizon);
}

double full_rank_last_bound(double u, double lambda_min, double gamma, double rho, double p,
                            double horizon) {
  return full_rank_average_bound(u, lambda_min, gamma, rho, p, horizon) / lambda_min;
}

double markovian_bound(double rho, double u, double p, double gamma, double horizon,
                       double mixing) {
  const double first = 7.0 * rho * std::pow(u, 1.0 / (1.0 + p)) /
                       ((1.0 - gamma) * std::pow(horizon, p / (1.0 + p)));
  const double second = 2.0 * std::sqrt(2.0) * rho * (1.0 + 2.0 * rho) *
                        (4.0 * rho + mixing * (1.0 + 6.0 * rho)) /
                        ((1.0 - gamma) * std::pow(horizon, 1.0 / (1.0 + p)));
  return first + second;
}

double high_probability_bound(double rho, double u, double p, double gamma, double horizon,
                              double log_delta) {
  const double lead = rho * std::pow(u, 1.0 / (1.0 + p)) /
                      ((1.0 - gamma) * std::pow(horizon, p / (1.0 + p)));
  return lead * (3.0 * std::pow(log_delta, -(1.0 - p) / (2.0 * (1.0 + p))) +
                 7.0 * std::pow(log_delta, p / (1.0 + p)));
}

double nac_bound(double rho, std::size_t n_actions, double gamma, std::uint64_t outer_iterations,
                 double u, double c_conc, double p, double horizon, double log_delta) {
  const double k = static_cast<double>(outer_iterations);
  const double actor = 2.0 * rho * std::sqrt(std::log(static_cast<double>(n_actions))) /
                       ((1.0 - gamma) * std::sqrt(k));
  const double critic = std::pow(u, 1.0 / (1.0 + p)) * c_conc * rho /
                        (std::pow(1.0 - gamma, 3.0) * std::pow(horizon, p / (1.0 + p))) *
                        (3.0 * std::pow(log_delta, -(1.0 - p) / (2.0 * (1.0 + p))) +
                         7.0 * std::pow(log_delta, p / (1.0 + p)));
  return actor + std::sqrt(critic);
}

std::string to_string(ClipKind kind) {
  switch (kind) {
    case ClipKind::power_law: return "power_law";
    case ClipKind::linear: return "linear";
    case ClipKind::confidence: return "confidence";
    case ClipKind::horizon_constant: return "horizon_constant";
    case ClipKind::infinite: return "infinite";
  }
  return "infinite";
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::constant_rate: return "constant_rate";
    case StepKind::inverse_time: return "inverse_time";
    case StepKind::markov_rate: return "markov_rate";
    case StepKind::confidence_rate: return "confidence_rate";
    case StepKind::fixed: return "fixed";
  }
  return "fixed";
}

ClipKind parse_clip_kind(const std::string& s) {
  for (auto k : {ClipKind::power_law, ClipKind::linear, ClipKind::confidence,
                 ClipKind::horizon_constant, ClipKind::infinite}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown clip schedule '" + s + "'");
}

StepKind parse_step_kind(const std::string& s) {
  for (auto k : {StepKind::constant_rate, StepKind::inverse_time, StepKind::markov_rate,
                 StepKind::confidence_rate, StepKind::fixed}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown step schedule '" + s + "'");
}

}  // namespace robrl
