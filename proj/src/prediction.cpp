#include "uner/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uner/error.hpp"
#include "uner/posterior.hpp"
#include "uner/stats.hpp"

namespace uner {

namespace {

AreaSummary summarize(std::vector<double> draws) {
  AreaSummary s;
  const auto [lo, hi] = std::minmax_element(draws.begin(), draws.end());
  if (*lo == *hi) {
    s.point = s.ci_lo = s.ci_hi = *lo;
    return s;
  }
  s.point = mean(draws);
  s.sd = stddev(draws);
  std::sort(draws.begin(), draws.end());
  s.ci_lo = quantile_sorted(draws, 0.025);
  s.ci_hi = quantile_sorted(draws, 0.975);
  return s;
}

}  // namespace

PredictionSummary summarize_columns(const Matrix& draws) {
  if (draws.rows() == 0) throw ConfigError("cannot summarize an empty chain");
  PredictionSummary out;
  out.areas.reserve(static_cast<std::size_t>(draws.cols()));
  std::vector<double> col(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index i = 0; i < draws.cols(); ++i) {
    for (Eigen::Index k = 0; k < draws.rows(); ++k) col[static_cast<std::size_t>(k)] = draws(k, i);
    out.areas.push_back(summarize(col));
  }
  return out;
}

PredictionSummary summarize_mu(const ChainOutput& chain, const TargetSpec& target) {
  if (chain.size() == 0) throw ConfigError("cannot summarize an empty chain");
  const auto m = static_cast<Eigen::Index>(target.c.size());
  Matrix mu(static_cast<Eigen::Index>(chain.size()), m);
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const auto& beta = chain.params[k].beta;
    const auto& v = chain.latents[k].v;
    for (Eigen::Index i = 0; i < m; ++i)
      mu(static_cast<Eigen::Index>(k), i) = target.c[static_cast<std::size_t>(i)].dot(beta) + v(i);
  }
  PredictionSummary out = summarize_columns(mu);
  if (chain.kind == ModelKind::kUner) {
    for (Eigen::Index i = 0; i < m; ++i) {
      double on = 0.0;
      for (const auto& lat : chain.latents) on += lat.u[static_cast<std::size_t>(i)];
      out.areas[static_cast<std::size_t>(i)].p_tilde_mean = on / static_cast<double>(chain.size());
    }
  }
  return out;
}

void FinitePopulationSpec::validate(const UnitDataset& data) const {
  if (areas.size() != data.m())
    throw ConfigError("population spec lists " + std::to_string(areas.size()) + " areas, data has " +
                      std::to_string(data.m()));
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const auto& pop = areas[i];
    const auto& a = data.area(i);
    if (pop.id != a.id())
      throw ConfigError("population area '" + pop.id + "' does not match data area '" + a.id() + "'");
    if (pop.size < a.n())
      throw ConfigError("area '" + a.id() + "': population size " + std::to_string(pop.size) +
                        " is smaller than sample size " + std::to_string(a.n()));
    if (pop.xbar.size() != a.q())
      throw ConfigError("area '" + a.id() + "': population covariate mean has wrong length");
  }
}

Vector unsampled_covariate_mean(const PopulationArea& pop, const AreaData& area) {
  const long n = static_cast<long>(area.n());
  if (pop.size <= n)
    throw ConfigError("area '" + area.id() + "' has no unsampled units (N = " +
                      std::to_string(pop.size) + ", n = " + std::to_string(n) + ")");
  const double big = static_cast<double>(pop.size);
  const double small = static_cast<double>(n);
  return (big * pop.xbar - small * area.xbar()) / (big - small);
}

NormalLaw unsampled_mean_law(bool u_i, const ModelParams& params, const AreaData& area,
                             const PopulationArea& pop) {
  const Vector xr = unsampled_covariate_mean(pop, area);
  const double rest = static_cast<double>(pop.size - static_cast<long>(area.n()));
  NormalLaw law{xr.dot(params.beta), params.sigma2 / rest};
  if (u_i) {
    const double n = static_cast<double>(area.n());
    const double total = params.sigma2 + n * params.tau2;
    law.mean += n * params.tau2 * area_residual(params, area) / total;
    law.var += params.sigma2 * params.tau2 / total;
  }
  return law;
}

double draw_unsampled_mean(bool u_i, const ModelParams& params, const AreaData& area,
                           const PopulationArea& pop, Rng& rng) {
  return draw(unsampled_mean_law(u_i, params, area, pop), rng);
}

FinitePopulationResult predict_finite_population(const UnitDataset& data,
                                                 const FinitePopulationSpec& spec, ModelKind kind,
                                                 const PriorConfig& prior, const ChainConfig& cfg) {
  spec.validate(data);
  const TargetSpec target = TargetSpec::area_means(data);
  FinitePopulationResult out;
  out.chain = kind == ModelKind::kUner ? gibbs_uner(data, prior, target, cfg)
                                       : gibbs_ner(data, target, cfg);

  const auto draws = static_cast<Eigen::Index>(out.chain.size());
  const auto m = static_cast<Eigen::Index>(data.m());
  out.unsampled_draws.resize(draws, m);
  out.mean_draws.resize(draws, m);
  Rng rng(derive_seed(cfg.seed, {hash_tag("finite-population")}));
  for (Eigen::Index k = 0; k < draws; ++k) {
    const auto& params = out.chain.params[static_cast<std::size_t>(k)];
    const auto& u = out.chain.latents[static_cast<std::size_t>(k)].u;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const auto& area = data.area(idx);
      const auto& pop = spec.areas[idx];
      if (pop.size == static_cast<long>(area.n())) {
        out.unsampled_draws(k, i) = std::numeric_limits<double>::quiet_NaN();
        out.mean_draws(k, i) = area.ybar();
        continue;
      }
      const bool on = kind == ModelKind::kNer || u[idx] != 0;
      const double yr = draw_unsampled_mean(on, params, area, pop, rng);
      const double big = static_cast<double>(pop.size);
      const double n = static_cast<double>(area.n());
      out.unsampled_draws(k, i) = yr;
      out.mean_draws(k, i) = (n * area.ybar() + (big - n) * yr) / big;
    }
  }
  out.summary = summarize_columns(out.mean_draws);
  if (kind == ModelKind::kUner) {
    for (Eigen::Index i = 0; i < m; ++i) {
      double on = 0.0;
      for (const auto& lat : out.chain.latents) on += lat.u[static_cast<std::size_t>(i)];
      out.summary.areas[static_cast<std::size_t>(i)].p_tilde_mean = on / static_cast<double>(draws);
    }
  }
  return out;
}

}  // namespace uner
