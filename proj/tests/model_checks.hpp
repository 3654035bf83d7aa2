#pragma once

// Closed-form model checks shared by the unit tests and the acceptance gate.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sampler_checks.hpp"
#include "uner/compound_symmetry.hpp"
#include "uner/diagnostics.hpp"
#include "uner/posterior.hpp"

namespace checks {

using namespace uner;

// Intercept-only rows with ybar - beta0 = resid.
inline AreaData area_with_residual(int n, double resid, const Vector& beta) {
  Vector y(n);
  for (int j = 0; j < n; ++j) y(j) = beta(0) + resid + (j % 2 ? 0.25 : -0.25);
  if (n % 2) y(n - 1) = beta(0) + resid;
  return AreaData("a", y, Matrix::Ones(n, 1));
}

inline ModelParams params_of(double b0, double sigma2, double tau2, double p) {
  ModelParams mp;
  mp.beta = Vector::Constant(1, b0);
  mp.sigma2 = sigma2;
  mp.tau2 = tau2;
  mp.p = p;
  return mp;
}

// Worst relative error of the closed-form solve and log-determinant against
// a dense Cholesky factorization, n drawn from 1..20.
inline Check compound_symmetry_cases(std::uint64_t seed, int cases, double tol) {
  Rng rng(seed);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const auto n = static_cast<Eigen::Index>(1 + rng.uniform() * 20);
    const double diag = std::exp(rng.normal(0.0, 1.5));
    const double common = rng.uniform() < 0.1 ? 0.0 : std::exp(rng.normal(0.0, 1.5));
    Vector rhs(n);
    for (Eigen::Index k = 0; k < n; ++k) rhs(k) = rng.normal();
    const auto r = cs_solve_logdet(CompoundSymmetry(n, diag, common), rhs);
    const Matrix dense = oracle::compound_dense(n, diag, common);
    Eigen::LLT<Matrix> llt(dense);
    const Vector ref = llt.solve(rhs);
    const double ref_logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    worst = std::max(worst, (r.solution.col(0) - ref).norm() / ref.norm());
    worst = std::max(worst, std::abs(r.log_det - ref_logdet) / std::max(1.0, std::abs(ref_logdet)));
  }
  std::ostringstream os;
  os << cases << " cases, worst relative error " << worst;
  return {"compound symmetry vs dense", worst < tol, os.str()};
}

// Indicator probability and posterior variance of mu against adaptive
// quadrature over the effect, on a random parameter grid.
inline Check quadrature_grid(std::uint64_t seed, int points, double tol) {
  Rng rng(seed);
  const Vector b = Vector::Constant(1, 0.0);
  double worst_prob = 0.0, worst_var = 0.0;
  for (int c = 0; c < points; ++c) {
    const double p = 0.02 + 0.96 * rng.uniform();
    const double s2 = std::exp(rng.normal(0.0, 0.7));
    const double t2 = std::exp(rng.normal(-0.5, 0.7));
    const int n = 1 + static_cast<int>(rng.uniform() * 12);
    const double r = rng.normal(0.0, 2.0 * std::sqrt(t2 + s2 / n));
    const auto area = area_with_residual(n, r, b);
    const auto mp = params_of(0.0, s2, t2, p);
    const auto ref = oracle::quadrature_posterior(p, s2, t2, n, area_residual(mp, area));
    worst_prob = std::max(worst_prob, std::abs(posterior_prob_u(mp, area) - ref.prob_slab));
    worst_var = std::max(worst_var, std::abs(posterior_var_mu(mp, area) - ref.var) / std::max(1.0, ref.var));
  }
  std::ostringstream os;
  os << points << " points, worst |dprob| " << worst_prob << ", worst |dvar| " << worst_var;
  return {"quadrature grid", worst_prob < tol && worst_var < tol, os.str()};
}

inline ChainOutput chain_of(const std::vector<ModelParams>& params, const UnitDataset& data, ModelKind kind) {
  ChainOutput c;
  c.kind = kind;
  c.params = params;
  c.latents.assign(params.size(),
                   LatentState{std::vector<std::uint8_t>(data.m(), 1), Vector::Zero(static_cast<Eigen::Index>(data.m()))});
  c.dataset_fingerprint = data.fingerprint();
  return c;
}

inline std::vector<ModelParams> random_draws(int count, ModelKind kind, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ModelParams> out;
  for (int k = 0; k < count; ++k) {
    ModelParams mp;
    mp.beta = Vector::Constant(1, rng.normal(0.7, 0.2));
    mp.sigma2 = 0.5 + rng.uniform();
    mp.tau2 = 0.2 + rng.uniform();
    mp.p = kind == ModelKind::kUner ? rng.uniform() : 1.0;
    mp.kind = kind;
    out.push_back(mp);
  }
  return out;
}

inline UnitDataset dic_dataset() {
  Rng rng(6);
  Vector beta(1);
  beta << 0.7;
  return oracle::simulate_dataset(rng, 3, 2, 2, beta, 0.9, 0.6, 0.5);
}

// DIC terms against dense multivariate normal mixture densities on three
// areas, for a fixed list of parameter draws.
inline Check dic_dense_oracle(ModelKind kind, int count, std::uint64_t seed, double tol) {
  const auto data = dic_dataset();
  const auto draws = random_draws(count, kind, seed);
  const auto r = dic(chain_of(draws, data, kind), data);
  double dsum = 0.0;
  ModelParams bar;
  bar.beta = Vector::Zero(1);
  bar.sigma2 = bar.tau2 = bar.p = 0.0;
  for (const auto& d : draws) {
    dsum += -2.0 * oracle::dense_marginal_loglik(d, data);
    bar.beta += d.beta / count;
    bar.sigma2 += d.sigma2 / count;
    bar.tau2 += d.tau2 / count;
    bar.p += d.p / count;
  }
  bar.kind = kind;
  if (kind == ModelKind::kNer) bar.p = 1.0;
  const double gap_bar = std::abs(r.dbar - dsum / count);
  const double gap_mean = std::abs(r.d_at_mean + 2.0 * oracle::dense_marginal_loglik(bar, data));
  const bool identity = r.dic == 2.0 * r.dbar - r.d_at_mean && r.p_d == r.dbar - r.d_at_mean;
  std::ostringstream os;
  os << to_string(kind) << ": |dDbar| " << gap_bar << ", |dD(mean)| " << gap_mean << ", DIC " << r.dic;
  return {std::string("DIC dense oracle ") + to_string(kind), gap_bar < tol && gap_mean < tol && identity,
          os.str()};
}

}  // namespace checks
