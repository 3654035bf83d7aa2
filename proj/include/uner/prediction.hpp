#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uner/conditionals.hpp"
#include "uner/gibbs.hpp"
#include "uner/types.hpp"

namespace uner {

struct AreaSummary {
  double point = 0.0;  // posterior mean
  double sd = 0.0;     // posterior standard deviation (divisor draws - 1)
  double ci_lo = 0.0;  // 2.5% quantile, linear interpolation
  double ci_hi = 0.0;  // 97.5% quantile
  std::optional<double> p_tilde_mean;  // posterior mean of u_i (UNER only)
};

struct PredictionSummary {
  std::vector<AreaSummary> areas;
};

// Summaries of mu_i = c_i' beta + v_i over the retained draws.
PredictionSummary summarize_mu(const ChainOutput& chain, const TargetSpec& target);

// Column-wise summary of a draws x areas matrix.
PredictionSummary summarize_columns(const Matrix& draws);

struct PopulationArea {
  std::string id;
  long size = 0;  // N_i
  Vector xbar;    // population covariate mean
};

struct FinitePopulationSpec {
  std::vector<PopulationArea> areas;

  // Same area ids in the same order as the data, N_i >= n_i, xbar length q.
  void validate(const UnitDataset& data) const;
};

// (N_i - n_i)^{-1} (N_i Xbar_i - n_i xbar_i). Throws ConfigError when the
// area has no unsampled units.
Vector unsampled_covariate_mean(const PopulationArea& pop, const AreaData& area);

// Law of the unsampled-unit mean given u_i and the parameters:
// N(xr' beta + I(u_i) w_i (ybar_i - xbar_i' beta), I(u_i) sigma2 tau2 / (sigma2 + n_i tau2)
//   + sigma2 / (N_i - n_i)).
NormalLaw unsampled_mean_law(bool u_i, const ModelParams& params, const AreaData& area,
                             const PopulationArea& pop);

double draw_unsampled_mean(bool u_i, const ModelParams& params, const AreaData& area,
                           const PopulationArea& pop, Rng& rng);

struct FinitePopulationResult {
  PredictionSummary summary;  // of the finite-population means
  Matrix unsampled_draws;     // draws x m; NaN for fully observed areas
  Matrix mean_draws;          // draws x m
  ChainOutput chain;
};

// Runs the sampler, then for every retained state draws the unsampled mean of
// each area and forms N_i^{-1} (n_i ybar_i + (N_i - n_i) Ybar_r). Fully
// observed areas return ybar_i in every draw. NER uses the u_i = 1 branch.
FinitePopulationResult predict_finite_population(const UnitDataset& data,
                                                 const FinitePopulationSpec& spec, ModelKind kind,
                                                 const PriorConfig& prior, const ChainConfig& cfg);

}  // namespace uner
