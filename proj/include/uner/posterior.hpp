#pragma once

#include "uner/types.hpp"

namespace uner {

// Shrinkage weight n tau2 / (sigma2 + n tau2) applied to the area residual.
double shrinkage_weight(const ModelParams& params, const AreaData& area) noexcept;

// Area-mean residual ybar_i - xbar_i' beta.
double area_residual(const ModelParams& params, const AreaData& area) noexcept;

// Log-odds of u_i = 1 given (beta, sigma2, tau2, p) and y_i, with v_i
// integrated out. Infinite at p = 0 or p = 1.
double log_odds_u(const ModelParams& params, const AreaData& area);

// P(u_i = 1 | y_i). Evaluated through the log-odds so residuals of any
// magnitude neither overflow nor underflow.
double posterior_prob_u(const ModelParams& params, const AreaData& area);

// Var(mu_i | y_i) = Var(v_i | y_i) under the spike-and-slab posterior.
double posterior_var_mu(const ModelParams& params, const AreaData& area);

// Log marginal likelihood with the random effects integrated out. UNER uses
// the per-area two-component mixture, NER the single compound-symmetry
// normal.
double marginal_loglik(const ModelParams& params, const UnitDataset& data);

// Log density of N(y_i; X_i beta, sigma2 I + common J).
double area_log_density(const AreaData& area, const Vector& beta, double sigma2, double common);

// V = (N - m - q)^{-1} sum_ij {y_ij - ybar_i - (x_ij - xbar_i)' b}^2 with b the
// least-squares fit on within-area centred data. Throws DataError if
// N <= m + q.
double estimate_sampling_variance(const UnitDataset& data);

// Pooled least-squares coefficients (X'X)^{-1} X'y.
Vector ols_coefficients(const UnitDataset& data);

// Resolves auto_hyper (b1 = V + 2, b2 = V (V + 1)) and validates the result.
// An auto-derived b1 is only required to be positive; explicit
// hyperparameters must satisfy b1 > 3 and b2 > 0.
PriorConfig resolve_prior(const PriorConfig& prior, const UnitDataset& data);

}  // namespace uner
