#pragma once

// Exact desk-scale ground truth. Every function here is pure.

#include "robrl/env.hpp"
#include "robrl/types.hpp"

#include <cstdint>

namespace robrl {

struct StationaryDistribution {
  Vector mu;
  double residual = 0.0;  // ||mu P - mu||_1
};

enum class StationaryMethod { automatic, direct, power };

/// mu P = mu, sum(mu) = 1. `automatic` uses a dense solve up to 512 states, power
/// iteration above that. Throws NumericalError if the residual cannot reach 1e-10.
StationaryDistribution stationary_distribution(const RowMatrix& p,
                                               StationaryMethod method = StationaryMethod::automatic);

struct ValueFunction {
  Vector v;
};

/// Solves (I - gamma P) V = r.
ValueFunction exact_value(const RowMatrix& p, const Vector& r, double gamma);

/// (T v)(x) = r(x) + gamma sum_x' P(x, x') v(x').
Vector bellman_apply(const RowMatrix& p, const Vector& r, double gamma, const Vector& v);

struct GramSpectrum {
  Matrix lambda;
  double lambda_min = 0.0;
};

/// Lambda = sum_x mu(x) Phi(x) Phi(x)^T and its smallest eigenvalue.
GramSpectrum feature_gram(const Vector& mu, const RowMatrix& phi);

/// Weighted norm ||w||_mu = sqrt(sum_x mu(x) w(x)^2).
double mu_norm(const Vector& w, const Vector& mu);

/// sum_x mu(x) (<theta, Phi(x)> - v(x))^2.
double mu_mse(const Vector& theta, const RowMatrix& phi, const Vector& v, const Vector& mu);

/// max_x (<theta, Phi(x)> - v(x))^2.
double sup_sq_error(const Vector& theta, const RowMatrix& phi, const Vector& v);

/// (1 - gamma) lambda0^T (I - gamma P_pi)^{-1}.
Vector discounted_visitation(const RowMatrix& p_pi, const Vector& lambda0, double gamma);

/// max_i numerator(i) / denominator(i); +infinity when a positive numerator meets a zero
/// denominator.
double concentrability(const Vector& numerator, const Vector& denominator);

/// Smallest t >= 0 with m zeta^t <= sqrt(2) rho (u T)^{-1/(1+p)}.
std::int64_t mixing_time(double m, double zeta, double rho, double u, double horizon, double p);

/// Q^pi over state-action pairs (indexed by mdp.pair_index) for a policy table.
Vector exact_q(const MarkovDecisionProcess& mdp, const RowMatrix& policy);

/// V^pi(s) = sum_a pi(a|s) Q^pi(s, a).
Vector state_values(const MarkovDecisionProcess& mdp, const RowMatrix& policy, const Vector& q);

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi rotations).
Vector symmetric_eigenvalues(const Matrix& a);

}  // namespace robrl
