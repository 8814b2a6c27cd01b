#include "robrl/td.hpp"

#include "robrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace robrl {

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::iid ? "iid" : "markovian";
}

SamplingMode parse_sampling_mode(const std::string& s) {
  if (s == "iid") return SamplingMode::iid;
  if (s == "markovian") return SamplingMode::markovian;
  throw ConfigError("unknown sampling mode '" + s + "'");
}

std::vector<std::uint64_t> RecordGrid::points(std::uint64_t horizon) const {
  std::vector<std::uint64_t> out;
  if (horizon == 0) return out;
  if (kind == Kind::geometric) {
    for (std::uint64_t t = 1; t <= horizon; t *= 2) {
      out.push_back(t);
      if (t > horizon / 2) break;
    }
    for (std::uint64_t t = 10; t <= horizon; t *= 10) {
      out.push_back(t);
      if (t > horizon / 10) break;
    }
  } else {
    out.push_back(1);
    const auto s = std::max<std::uint64_t>(stride, 1);
    for (std::uint64_t t = s; t <= horizon; t += s) out.push_back(t);
  }
  out.push_back(horizon);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> TdConfig::problems() const {
  std::vector<std::string> out;
  if (horizon < 1) out.emplace_back("horizon must be >= 1");
  if (!(projection_radius > 0.0)) out.emplace_back("projection_radius must be positive");
  if (grid.kind == RecordGrid::Kind::stride && grid.stride == 0) {
    out.emplace_back("record stride must be positive");
  }
  try {
    clip.validate();
  } catch (const ConfigError& e) {
    out.emplace_back(e.what());
  }
  try {
    step.validate();
  } catch (const ConfigError& e) {
    out.emplace_back(e.what());
  }
  if (theta_init && theta_init->norm() > projection_radius * (1.0 + 1e-12)) {
    out.emplace_back("theta_init lies outside the projection ball");
  }
  return out;
}

void TdConfig::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::ostringstream os;
  os << "invalid TD configuration:";
  for (const auto& issue : issues) os << "\n  - " << issue;
  throw ConfigError(os.str());
}

EvaluationTarget EvaluationTarget::from(const MarkovRewardProcess& mrp,
                                        const FeatureMap& features) {
  if (features.n_rows() != mrp.n_states()) {
    throw ConfigError("features must have one row per state");
  }
  EvaluationTarget target;
  target.phi = features.phi;
  target.mu = stationary_distribution(mrp.transition).mu;
  target.value = exact_value(mrp.transition, mrp.mean_reward, mrp.discount).v;
  target.gamma = mrp.discount;
  return target;
}

Vector semi_gradient(const Vector& theta, const Transition& tr, const RowMatrix& phi,
                     double gamma) {
  const auto x = static_cast<Eigen::Index>(tr.x);
  const auto xn = static_cast<Eigen::Index>(tr.x_next);
  const double td_error = tr.reward + gamma * phi.row(xn).dot(theta) - phi.row(x).dot(theta);
  return td_error * phi.row(x).transpose();
}

Vector clip_gate(const Vector& g, double b) {
  if (g.norm() <= b) return g;
  return Vector::Zero(g.size());
}

Vector project_ball(const Vector& theta, double rho) {
  const double norm = theta.norm();
  if (norm <= rho) return theta;
  return (rho / norm) * theta;
}

std::unique_ptr<TransitionSource> make_sampler(const MarkovRewardProcess& mrp, const Vector& mu,
                                               SamplingMode mode, std::uint64_t seed) {
  if (mode == SamplingMode::iid) return std::make_unique<IidSampler>(mrp, mu, seed);
  return std::make_unique<MarkovSampler>(mrp, mu, seed);
}

TdRunResult run_td(const EvaluationTarget& target, const TdConfig& config,
                   TransitionSource& source) {
  config.validate();
  const auto d = static_cast<std::size_t>(target.phi.cols());
  const double rho = config.projection_radius;
  const double gamma = target.gamma;

  Vector theta = config.theta_init ? *config.theta_init : Vector::Zero(target.phi.cols());
  if (static_cast<std::size_t>(theta.size()) != d) {
    throw ConfigError("theta_init has the wrong dimension");
  }
  Vector theta_sum = Vector::Zero(theta.size());
  std::vector<double> grad(d);

  TdRunResult result;
  const auto grid = config.grid.points(config.horizon);
  auto next_record = grid.begin();
  StreamChecksum checksum;
  if (config.store_iterates) result.iterates.push_back(theta);

  for (std::uint64_t t = 1; t <= config.horizon; ++t) {
    const Transition tr = source.next();
    checksum.add(tr);
    const double* phi_x = target.phi.row(static_cast<Eigen::Index>(tr.x)).data();
    const double* phi_next = target.phi.row(static_cast<Eigen::Index>(tr.x_next)).data();
    double* th = theta.data();

    double value_x = 0.0;
    for (std::size_t i = 0; i < d; ++i) value_x += th[i] * phi_x[i];
    double value_next = 0.0;
    for (std::size_t i = 0; i < d; ++i) value_next += th[i] * phi_next[i];
    const double td_error = tr.reward + gamma * value_next - value_x;

    double grad_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      grad[i] = td_error * phi_x[i];
      grad_sq += grad[i] * grad[i];
    }
    const double grad_norm = std::sqrt(grad_sq);
    const double radius = config.clip.radius(t);
    const double eta = config.step.size(t);

    theta_sum += theta;

    const bool keep = grad_norm <= radius;
    if (keep) {
      for (std::size_t i = 0; i < d; ++i) th[i] = th[i] + eta * grad[i];
    } else {
      ++result.clip_count;
    }

    double norm_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm_sq += th[i] * th[i];
    const double norm = std::sqrt(norm_sq);
    if (norm > rho) {
      const double scale = rho / norm;
      for (std::size_t i = 0; i < d; ++i) th[i] *= scale;
    }

    if (config.grad_log_every != 0 && t % config.grad_log_every == 0) {
      result.gradient_log.push_back({t, grad_norm, radius, eta, !keep});
    }
    if (config.store_iterates) result.iterates.push_back(theta);

    const bool finite = std::isfinite(norm) && theta.allFinite();
    if (next_record != grid.end() && (*next_record == t || !finite)) {
      const Vector avg = theta_sum / static_cast<double>(t);
      result.error_curve.push_back({t, mu_mse(avg, target.phi, target.value, target.mu),
                                    mu_mse(theta, target.phi, target.value, target.mu),
                                    result.clip_count});
      ++next_record;
    }
    if (!finite) {
      std::ostringstream os;
      os << "non-finite iterate at t=" << t << " (reward " << tr.reward << ", gradient norm "
         << grad_norm << ", step " << eta << ")";
      result.diverged = true;
      result.failure = os.str();
      result.theta_avg = theta_sum / static_cast<double>(t);
      result.theta_final = theta;
      result.stream_checksum = checksum.value();
      result.sup_sq_error_final = std::numeric_limits<double>::quiet_NaN();
      return result;
    }
  }

  result.theta_avg = theta_sum / static_cast<double>(config.horizon);
  result.theta_final = theta;
  result.stream_checksum = checksum.value();
  result.sup_sq_error_final = sup_sq_error(theta, target.phi, target.value);
  return result;
}

TdRunResult run_robust_td(const MarkovRewardProcess& mrp, const EvaluationTarget& target,
                          const TdConfig& config, std::uint64_t seed) {
  auto sampler = make_sampler(mrp, target.mu, config.sampling, seed);
  TdRunResult result = run_td(target, config, *sampler);
  result.seed = seed;
  return result;
}

TdRunResult run_robust_td(const MarkovRewardProcess& mrp, const FeatureMap& features,
                          const TdConfig& config, std::uint64_t seed) {
  return run_robust_td(mrp, EvaluationTarget::from(mrp, features), config, seed);
}

}  // namespace robrl
