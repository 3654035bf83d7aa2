#include "uner/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "uner/error.hpp"
#include "uner/posterior.hpp"
#include "uner/stats.hpp"

namespace uner {

ModelParams posterior_mean_params(const ChainOutput& chain) {
  if (chain.size() == 0) throw ConfigError("empty chain");
  const auto q = chain.params.front().beta.size();
  std::vector<CompensatedSum> beta(static_cast<std::size_t>(q));
  CompensatedSum s2, t2, p;
  for (const auto& d : chain.params) {
    for (Eigen::Index k = 0; k < q; ++k) beta[static_cast<std::size_t>(k)].add(d.beta(k));
    s2.add(d.sigma2);
    t2.add(d.tau2);
    p.add(d.p);
  }
  const double n = static_cast<double>(chain.size());
  ModelParams out;
  out.kind = chain.kind;
  out.beta.resize(q);
  for (Eigen::Index k = 0; k < q; ++k) out.beta(k) = beta[static_cast<std::size_t>(k)].value() / n;
  out.sigma2 = s2.value() / n;
  out.tau2 = t2.value() / n;
  out.p = chain.kind == ModelKind::kUner ? std::clamp(p.value() / n, 0.0, 1.0) : 1.0;
  return out;
}

DicReport dic(const ChainOutput& chain, const UnitDataset& data) {
  if (chain.size() == 0) throw ConfigError("empty chain");
  if (chain.dataset_fingerprint != 0 && chain.dataset_fingerprint != data.fingerprint())
    throw ConfigError("chain was not produced from this dataset");
  CompensatedSum dsum;
  for (const auto& d : chain.params) {
    ModelParams phi = d;
    phi.kind = chain.kind;
    dsum.add(-2.0 * marginal_loglik(phi, data));
  }
  DicReport r;
  r.dbar = dsum.value() / static_cast<double>(chain.size());
  r.d_at_mean = -2.0 * marginal_loglik(posterior_mean_params(chain), data);
  r.p_d = r.dbar - r.d_at_mean;
  r.dic = 2.0 * r.dbar - r.d_at_mean;
  r.negative_p_d = r.p_d < 0.0;
  return r;
}

ParameterSummary summarize_parameter(std::string name, const std::vector<double>& draws) {
  if (draws.empty()) throw ConfigError("empty chain");
  ParameterSummary s;
  s.name = std::move(name);
  const auto [lo, hi] = std::minmax_element(draws.begin(), draws.end());
  if (*lo == *hi) {
    s.mean = s.ci_lo = s.ci_hi = *lo;
    return s;
  }
  s.mean = mean(draws);
  s.sd = stddev(draws);
  s.ci_lo = quantile(draws, 0.025);
  s.ci_hi = quantile(draws, 0.975);

  const std::span<const double> all(draws);
  const std::size_t half = draws.size() / 2;
  if (half >= 1) {
    const auto first = all.first(half);
    const auto second = all.subspan(half);
    const double diff = std::abs(mean(first) - mean(second));
    const double sd1 = stddev(first);
    const double sd2 = stddev(second);
    const double pooled = std::sqrt(0.5 * (sd1 * sd1 + sd2 * sd2));
    if (pooled > 0.0)
      s.split_discrepancy = diff / pooled;
    else
      s.split_discrepancy = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  s.flagged = s.split_discrepancy > kSplitHalfFlag;
  return s;
}

std::vector<ParameterSummary> chain_summary(const ChainOutput& chain) {
  if (chain.size() == 0) throw ConfigError("empty chain");
  const auto q = chain.params.front().beta.size();
  std::vector<ParameterSummary> out;
  std::vector<double> col(chain.size());
  const auto collect = [&](auto get) {
    for (std::size_t k = 0; k < chain.size(); ++k) col[k] = get(chain.params[k]);
  };
  for (Eigen::Index j = 0; j < q; ++j) {
    collect([j](const ModelParams& d) { return d.beta(j); });
    out.push_back(summarize_parameter("beta" + std::to_string(j), col));
  }
  collect([](const ModelParams& d) { return d.sigma2; });
  out.push_back(summarize_parameter("sigma2", col));
  collect([](const ModelParams& d) { return d.tau2; });
  out.push_back(summarize_parameter("tau2", col));
  if (chain.kind == ModelKind::kUner) {
    collect([](const ModelParams& d) { return d.p; });
    out.push_back(summarize_parameter("p", col));
  }
  return out;
}

}  // namespace uner
