#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "sgm/errors.hpp"
#include "sgm/rng.hpp"

namespace sgm {

struct BetaBinomialParams {
  double alpha = 0.0;
  double beta = 0.0;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the beta-binomial B(nu, alpha, beta).
inline Moments beta_binomial_moments(int nu, double alpha, double beta) {
  const double n = static_cast<double>(nu);
  const double s = alpha + beta;
  const double p = alpha / s;
  return {n * p, n * p * (1.0 - p) * (s + n) / (s + 1.0)};
}

/// Solve for (alpha, beta) so that B(nu, alpha, beta) has the requested mean
/// and variance. Feasible variances lie strictly between the binomial limit
/// mu*(nu-mu)/nu (alpha -> inf) and the two-point limit mu*(nu-mu) (alpha -> 0).
inline BetaBinomialParams beta_binomial_params(int nu, double mu, double var) {
  if (nu < 1) throw DomainError("beta_binomial_params: nu must be >= 1");
  if (!(mu > 0.0 && mu < static_cast<double>(nu)))
    throw DomainError("beta_binomial_params: mu must lie in (0, nu)");
  const double n = static_cast<double>(nu);
  const double lo = mu * (n - mu) / n;
  const double hi = mu * (n - mu);
  if (!(var > lo && var < hi)) {
    std::ostringstream msg;
    msg << "beta_binomial_params: variance " << var << " infeasible for nu=" << nu
        << ", mu=" << mu << "; feasible interval is (" << lo << ", " << hi << ")";
    throw DomainError(msg.str());
  }
  const double rho = (n - mu) / mu;
  // var = (nu*rho/(1+rho)^2) * (s + nu) / (s + 1) with s = alpha*(1+rho)
  const double s = (hi - var) / (var - lo);
  const double alpha = s / (1.0 + rho);
  return {alpha, rho * alpha};
}

/// Draw from B(nu, alpha, beta): q ~ Beta(alpha, beta), then Binomial(nu, q).
inline int sample_beta_binomial(int nu, double alpha, double beta, RngStream& rng) {
  if (!(alpha > 0.0 && beta > 0.0))
    throw DomainError("sample_beta_binomial: alpha and beta must be positive");
  const double q = sample_beta(alpha, beta, rng);
  int k = 0;
  for (int i = 0; i < nu; ++i)
    if (rng.uniform() < q) ++k;
  return k;
}

}  // namespace sgm
