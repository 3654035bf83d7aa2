#include "uner/gibbs.hpp"

#include <algorithm>

#include "uner/conditions.hpp"
#include "uner/error.hpp"
#include "uner/posterior.hpp"

namespace uner {

namespace {

template <typename Fn>
void run_block(std::size_t sweep, const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const SamplerError&) {
    throw;
  } catch (const std::exception& e) {
    throw SamplerError(sweep, name, e.what());
  }
}

double initial_sigma2(const UnitDataset& data, const Vector& beta) {
  const auto m = static_cast<Eigen::Index>(data.m());
  if (data.total_units() > m + data.q()) {
    const double v = estimate_sampling_variance(data);
    if (v > 0.0) return v;
  }
  const double rss = (data.y() - data.x() * beta).squaredNorm();
  const auto dof = std::max<Eigen::Index>(1, data.total_units() - data.q());
  const double pooled = rss / static_cast<double>(dof);
  return pooled > 0.0 ? pooled : 1.0;
}

}  // namespace

void ChainConfig::validate() const {
  if (burnin < 0) throw ConfigError("burn-in must be non-negative");
  if (iterations <= burnin)
    throw ConfigError("iterations (" + std::to_string(iterations) + ") must exceed burn-in (" +
                      std::to_string(burnin) + ")");
  if (thin < 1) throw ConfigError("thinning interval must be at least 1");
}

SamplerState initial_state(const UnitDataset& data, ModelKind kind, const InitStrategy& init) {
  SamplerState s;
  if (init.params) {
    s.params = *init.params;
    s.params.validate();
    if (s.params.beta.size() != data.q()) throw ConfigError("initial beta length does not match q");
  } else {
    s.params.beta = ols_coefficients(data);
    s.params.sigma2 = initial_sigma2(data, s.params.beta);
    s.params.tau2 = std::max(s.params.sigma2 / 2.0, 1e-4);
    s.params.p = 0.5;
  }
  s.params.kind = kind;
  if (kind == ModelKind::kNer) s.params.p = 1.0;
  s.latent.u.assign(data.m(), 1);
  s.latent.v = Vector::Zero(static_cast<Eigen::Index>(data.m()));
  return s;
}

void gibbs_sweep(SamplerState& state, const UnitDataset& data, const PriorConfig& prior,
                 const SamplerHooks& hooks, Rng& rng, std::size_t sweep) {
  auto& params = state.params;
  auto& latent = state.latent;
  const ProperSurrogate* surrogate = hooks.surrogate ? &*hooks.surrogate : nullptr;
  const int m = static_cast<int>(data.m());

  if (params.kind == ModelKind::kNer) {
    run_block(sweep, "beta", [&] { params.beta = beta_conditional_ner(params, data).draw(rng); });
    run_block(sweep, "v", [&] {
      for (std::size_t i = 0; i < data.m(); ++i)
        latent.v(static_cast<Eigen::Index>(i)) = draw(v_conditional_ner(params, data.area(i)), rng);
    });
    run_block(sweep, "tau2", [&] { params.tau2 = draw(tau2_conditional_ner(latent.v), rng); });
    run_block(sweep, "sigma2",
              [&] { params.sigma2 = draw_sigma2(latent.v, params.beta, data, rng, surrogate); });
    return;
  }

  run_block(sweep, "u", [&] {
    if (!hooks.freeze_u_at_one) latent.u = draw_u(params, data, rng);
  });
  run_block(sweep, "p", [&] { params.p = draw_p(latent.z(), m, rng); });
  run_block(sweep, "beta",
            [&] { params.beta = draw_beta(latent.u, params, data, rng, surrogate); });
  run_block(sweep, "v", [&] { latent.v = draw_v(latent.u, params, data, rng); });
  run_block(sweep, "tau2", [&] {
    if (tau2_rate_degenerate(latent.u, latent.v, prior)) latent.v = draw_v(latent.u, params, data, rng);
    params.tau2 = draw_tau2(latent.u, latent.v, prior, rng);
  });
  run_block(sweep, "sigma2",
            [&] { params.sigma2 = draw_sigma2(latent.v, params.beta, data, rng, surrogate); });
}

ChainOutput run_chain(const UnitDataset& data, ModelKind kind, const PriorConfig& prior,
                      const ChainConfig& cfg, const SamplerHooks& hooks) {
  cfg.validate();
  if (kind == ModelKind::kNer && data.m() < 2) throw ConfigError("NER needs at least two areas");

  ChainOutput out;
  out.kind = kind;
  out.config = cfg;
  out.prior = prior;
  out.dataset_fingerprint = data.fingerprint();
  out.rng_algorithm = std::string(kRngAlgorithm);
  const int retained = cfg.retained();
  if (retained < kMinRetainedDraws)
    out.warnings.push_back("only " + std::to_string(retained) + " retained draws (fewer than " +
                           std::to_string(kMinRetainedDraws) + ")");
  out.params.reserve(static_cast<std::size_t>(retained));
  out.latents.reserve(static_cast<std::size_t>(retained));

  SamplerState state = initial_state(data, kind, cfg.init);
  Rng rng(derive_seed(cfg.seed, {hash_tag("chain")}));
  for (int t = 0; t < cfg.iterations; ++t) {
    gibbs_sweep(state, data, prior, hooks, rng, static_cast<std::size_t>(t));
    if (t >= cfg.burnin && (t - cfg.burnin + 1) % cfg.thin == 0) {
      out.params.push_back(state.params);
      out.latents.push_back(state.latent);
    }
  }
  return out;
}

ChainOutput gibbs_uner(const UnitDataset& data, const PriorConfig& prior, const TargetSpec& target,
                       const ChainConfig& cfg, const SamplerHooks& hooks) {
  target.validate(data);
  const PriorConfig resolved = resolve_prior(prior, data);
  const auto proper = validate_conditions(data, resolved, Strictness::kPropriety);
  if (!proper.pass) throw ConfigError(proper.message());
  const auto finite = validate_conditions(data, resolved, Strictness::kFiniteVariance);

  ChainOutput out = run_chain(data, ModelKind::kUner, resolved, cfg, hooks);
  if (!finite.pass) out.warnings.insert(out.warnings.begin(), finite.message());
  if (resolved.auto_hyper && !(resolved.b1 > 3.0))
    out.warnings.push_back("auto-derived b1 = " + std::to_string(resolved.b1) + " is not above 3");
  return out;
}

ChainOutput gibbs_ner(const UnitDataset& data, const TargetSpec& target, const ChainConfig& cfg) {
  target.validate(data);
  return run_chain(data, ModelKind::kNer, PriorConfig{}, cfg);
}

}  // namespace uner
