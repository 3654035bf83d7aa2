#include "uner/posterior.hpp"

#include <cmath>
#include <limits>

#include "uner/compound_symmetry.hpp"
#include "uner/error.hpp"

namespace uner {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

double shrinkage_weight(const ModelParams& params, const AreaData& area) noexcept {
  const double ntau2 = static_cast<double>(area.n()) * params.tau2;
  return ntau2 / (params.sigma2 + ntau2);
}

double area_residual(const ModelParams& params, const AreaData& area) noexcept {
  return area.ybar() - area.xbar().dot(params.beta);
}

double log_odds_u(const ModelParams& params, const AreaData& area) {
  params.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (params.p == 0.0) return -inf;
  if (params.p == 1.0) return inf;
  const double n = static_cast<double>(area.n());
  const double s2 = params.sigma2;
  const double t2 = params.tau2;
  const double r = area_residual(params, area);
  const double total = s2 + n * t2;
  return std::log(params.p) - std::log1p(-params.p) - 0.5 * std::log1p(n * t2 / s2) +
         n * n * t2 * r * r / (2.0 * s2 * total);
}

double posterior_prob_u(const ModelParams& params, const AreaData& area) {
  const double lo = log_odds_u(params, area);
  if (lo >= 0.0) return 1.0 / (1.0 + std::exp(-lo));
  const double e = std::exp(lo);
  return e / (1.0 + e);
}

double posterior_var_mu(const ModelParams& params, const AreaData& area) {
  const double pt = posterior_prob_u(params, area);
  const double n = static_cast<double>(area.n());
  const double total = params.sigma2 + n * params.tau2;
  const double r = area_residual(params, area);
  const double w = n * params.tau2 / total;
  return w * w * r * r * pt * (1.0 - pt) + params.sigma2 * params.tau2 * pt / total;
}

double area_log_density(const AreaData& area, const Vector& beta, double sigma2, double common) {
  const CompoundSymmetry cs(area.n(), sigma2, common);
  const Vector resid = area.y() - area.x() * beta;
  const auto [solution, log_det] = cs_solve_logdet(cs, resid);
  const double quad = resid.dot(solution.col(0));
  return -0.5 * (static_cast<double>(area.n()) * kLog2Pi + log_det + quad);
}

double marginal_loglik(const ModelParams& params, const UnitDataset& data) {
  params.validate();
  if (params.beta.size() != data.q()) throw DomainError("beta length does not match q");
  double total = 0.0;
  for (const auto& area : data.areas()) {
    const double with_effect = area_log_density(area, params.beta, params.sigma2, params.tau2);
    if (params.kind == ModelKind::kNer) {
      total += with_effect;
      continue;
    }
    const double without = area_log_density(area, params.beta, params.sigma2, 0.0);
    const double lp = params.p > 0.0 ? std::log(params.p) : -std::numeric_limits<double>::infinity();
    const double lq =
        params.p < 1.0 ? std::log1p(-params.p) : -std::numeric_limits<double>::infinity();
    total += log_sum_exp(lp + with_effect, lq + without);
  }
  return total;
}

Vector ols_coefficients(const UnitDataset& data) {
  return data.x().colPivHouseholderQr().solve(data.y());
}

double estimate_sampling_variance(const UnitDataset& data) {
  const auto n_total = data.total_units();
  const auto m = static_cast<Eigen::Index>(data.m());
  const auto q = data.q();
  if (n_total <= m + q)
    throw DataError("sampling variance needs N > m + q (N = " + std::to_string(n_total) +
                    ", m = " + std::to_string(m) + ", q = " + std::to_string(q) + ")");

  Vector yc(n_total);
  Matrix xc(n_total, q);
  for (std::size_t i = 0; i < data.m(); ++i) {
    const auto& a = data.area(i);
    const auto off = data.offset(i);
    yc.segment(off, a.n()) = a.y().array() - a.ybar();
    xc.middleRows(off, a.n()) = a.x().rowwise() - a.xbar().transpose();
  }
  // Columns constant within every area (the intercept, area-level
  // covariates) centre to zero; the rank-revealing QR drops them.
  Eigen::ColPivHouseholderQR<Matrix> qr(xc);
  qr.setThreshold(1e-10);
  Vector resid = yc;
  if (qr.rank() > 0) resid -= xc * qr.solve(yc);
  return resid.squaredNorm() / static_cast<double>(n_total - m - q);
}

PriorConfig resolve_prior(const PriorConfig& prior, const UnitDataset& data) {
  if (!prior.auto_hyper) {
    prior.validate();
    return prior;
  }
  if (prior.a < 1) throw ConfigError("threshold a must satisfy a >= 1 (got " + std::to_string(prior.a) + ")");
  const double v = estimate_sampling_variance(data);
  PriorConfig out = prior;
  out.b1 = v + 2.0;
  out.b2 = v * (v + 1.0);
  if (!(out.b2 > 0.0))
    throw DataError("auto hyperparameters need a positive sampling variance (V = " +
                    std::to_string(v) + ")");
  return out;
}

}  // namespace uner
