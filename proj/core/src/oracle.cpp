#include "robrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robrl {

namespace {

constexpr std::size_t kDirectLimit = 512;
constexpr std::size_t kMaxPowerIterations = 1'000'000;

double stationary_residual(const RowMatrix& p, const Vector& mu) {
  return (p.transpose() * mu - mu).lpNorm<1>();
}

Vector clean_distribution(Vector mu) {
  mu = mu.cwiseMax(0.0);
  const double total = mu.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("stationary_distribution: degenerate solution");
  }
  return mu / total;
}

Vector power_iterate(const RowMatrix& p, Vector mu) {
  const auto n = static_cast<double>(p.rows());
  const double tol = std::max(1e-13, 64.0 * n * std::numeric_limits<double>::epsilon());
  for (std::size_t k = 0; k < kMaxPowerIterations; ++k) {
    Vector next = p.transpose() * mu;
    next /= next.sum();
    const double change = (next - mu).lpNorm<1>();
    mu = std::move(next);
    if (change <= tol) return mu;
  }
  throw NumericalError(
      "stationary_distribution: power iteration did not converge (chain not ergodic?)");
}

void check_square(const RowMatrix& p, Eigen::Index n, const char* what) {
  if (p.rows() != p.cols() || p.rows() != n) throw ConfigError(std::string(what) + ": shape mismatch");
}

}  // namespace

StationaryDistribution stationary_distribution(const RowMatrix& p, StationaryMethod method) {
  check_square(p, p.rows(), "stationary_distribution");
  const auto n = static_cast<std::size_t>(p.rows());
  if (method == StationaryMethod::automatic) {
    method = n <= kDirectLimit ? StationaryMethod::direct : StationaryMethod::power;
  }

  Vector mu;
  if (method == StationaryMethod::direct) {
    // (P^T - I) mu = 0 with the last balance equation replaced by sum(mu) = 1.
    Matrix a = p.transpose();
    a.diagonal().array() -= 1.0;
    a.row(a.rows() - 1).setOnes();
    Vector rhs = Vector::Zero(a.rows());
    rhs(rhs.size() - 1) = 1.0;
    mu = clean_distribution(a.partialPivLu().solve(rhs));
    if (stationary_residual(p, mu) > 1e-12) mu = power_iterate(p, mu);
  } else {
    mu = power_iterate(p, Vector::Constant(p.rows(), 1.0 / static_cast<double>(n)));
  }

  StationaryDistribution out{std::move(mu), 0.0};
  out.residual = stationary_residual(p, out.mu);
  if (!(out.residual <= 1e-10)) {
    throw NumericalError("stationary_distribution: residual above 1e-10");
  }
  return out;
}

ValueFunction exact_value(const RowMatrix& p, const Vector& r, double gamma) {
  check_square(p, r.size(), "exact_value");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("exact_value: gamma must lie in [0, 1)");
  Matrix a = -gamma * Matrix(p);
  a.diagonal().array() += 1.0;
  ValueFunction out{a.partialPivLu().solve(r)};
  if (!out.v.allFinite() || (a * out.v - r).lpNorm<Eigen::Infinity>() > 1e-10) {
    throw NumericalError("exact_value: linear solve failed");
  }
  return out;
}

Vector bellman_apply(const RowMatrix& p, const Vector& r, double gamma, const Vector& v) {
  check_square(p, r.size(), "bellman_apply");
  if (v.size() != r.size()) throw ConfigError("bellman_apply: value vector has wrong size");
  return r + gamma * (p * v);
}

GramSpectrum feature_gram(const Vector& mu, const RowMatrix& phi) {
  if (mu.size() != phi.rows()) throw ConfigError("feature_gram: mu and features disagree");
  GramSpectrum out;
  out.lambda = phi.transpose() * mu.asDiagonal() * phi;
  out.lambda = 0.5 * (out.lambda + out.lambda.transpose());
  out.lambda_min = std::max(0.0, symmetric_eigenvalues(out.lambda)(0));
  return out;
}

double mu_norm(const Vector& w, const Vector& mu) {
  if (w.size() != mu.size()) throw ConfigError("mu_norm: size mismatch");
  return std::sqrt((mu.array() * w.array().square()).sum());
}

double mu_mse(const Vector& theta, const RowMatrix& phi, const Vector& v, const Vector& mu) {
  if (theta.size() != phi.cols() || v.size() != phi.rows() || mu.size() != phi.rows()) {
    throw ConfigError("mu_mse: size mismatch");
  }
  const Vector err = phi * theta - v;
  return (mu.array() * err.array().square()).sum();
}

double sup_sq_error(const Vector& theta, const RowMatrix& phi, const Vector& v) {
  if (theta.size() != phi.cols() || v.size() != phi.rows()) {
    throw ConfigError("sup_sq_error: size mismatch");
  }
  return (phi * theta - v).array().square().maxCoeff();
}

Vector discounted_visitation(const RowMatrix& p_pi, const Vector& lambda0, double gamma) {
  check_square(p_pi, lambda0.size(), "discounted_visitation");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("discounted_visitation: gamma must lie in [0, 1)");
  }
  Matrix a = -gamma * Matrix(p_pi.transpose());
  a.diagonal().array() += 1.0;
  Vector d = a.partialPivLu().solve((1.0 - gamma) * lambda0);
  return d.cwiseMax(0.0);
}

double concentrability(const Vector& numerator, const Vector& denominator) {
  if (numerator.size() != denominator.size()) throw ConfigError("concentrability: size mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < numerator.size(); ++i) {
    if (numerator(i) <= 0.0) continue;
    if (denominator(i) <= 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, numerator(i) / denominator(i));
  }
  return worst;
}

std::int64_t mixing_time(double m, double zeta, double rho, double u, double horizon, double p) {
  if (!(m > 0.0) || !(zeta > 0.0 && zeta < 1.0) || !(rho > 0.0) || !(u > 0.0) ||
      !(horizon > 0.0) || !(p > 0.0 && p <= 1.0)) {
    throw ConfigError("mixing_time: parameter out of range");
  }
  const double threshold = std::sqrt(2.0) * rho * std::pow(u * horizon, -1.0 / (1.0 + p));
  if (m <= threshold) return 0;
  auto t = static_cast<std::int64_t>(std::ceil(std::log(threshold / m) / std::log(zeta)));
  // The logarithm can land one off in either direction; settle on the exact minimum.
  while (t > 0 && m * std::pow(zeta, static_cast<double>(t - 1)) <= threshold) --t;
  while (m * std::pow(zeta, static_cast<double>(t)) > threshold) ++t;
  return t;
}

Vector exact_q(const MarkovDecisionProcess& mdp, const RowMatrix& policy) {
  const RowMatrix p = induced_transition(mdp, policy);
  const Vector r = Eigen::Map<const Vector>(mdp.mean_reward.data(), mdp.mean_reward.size());
  return exact_value(p, r, mdp.discount).v;
}

Vector state_values(const MarkovDecisionProcess& mdp, const RowMatrix& policy, const Vector& q) {
  check_policy_table(policy, mdp.n_states, mdp.n_actions);
  if (static_cast<std::size_t>(q.size()) != mdp.n_pairs()) {
    throw ConfigError("state_values: q has wrong size");
  }
  Vector v = Vector::Zero(static_cast<Eigen::Index>(mdp.n_states));
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      v(s) += policy(s, a) * q(mdp.pair_index(s, a));
    }
  }
  return v;
}

}  // namespace robrl
