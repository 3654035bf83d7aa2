#pragma once

#include <string>
#include <vector>

#include "uner/gibbs.hpp"

namespace uner {

struct DicReport {
  double dic = 0.0;
  double dbar = 0.0;       // posterior mean of D(phi) = -2 log marginal likelihood
  double d_at_mean = 0.0;  // D at the componentwise posterior mean of phi
  double p_d = 0.0;        // dbar - d_at_mean; may be negative, see negative_p_d
  bool negative_p_d = false;
};

// Deviance information criterion on the random-effect-marginal likelihood.
// phi = (beta, sigma2, tau2, p) for UNER and (beta, sigma2, tau2) for NER;
// the plug-in point is the arithmetic mean of each component.
DicReport dic(const ChainOutput& chain, const UnitDataset& data);

// Componentwise arithmetic mean of the parameter draws.
ModelParams posterior_mean_params(const ChainOutput& chain);

inline constexpr double kSplitHalfFlag = 0.2;

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  // |mean(first half) - mean(second half)| / sqrt((var1 + var2) / 2).
  double split_discrepancy = 0.0;
  bool flagged = false;  // split_discrepancy > kSplitHalfFlag
};

ParameterSummary summarize_parameter(std::string name, const std::vector<double>& draws);

// beta0..beta{q-1}, sigma2, tau2 and (UNER) p.
std::vector<ParameterSummary> chain_summary(const ChainOutput& chain);

}  // namespace uner
