#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uner/conditionals.hpp"
#include "uner/types.hpp"

namespace uner {

// Starting point. Without explicit params the chain starts at: beta = pooled
// OLS, sigma2 = V (sampling-variance estimate), tau2 = max(sigma2 / 2, 1e-4),
// p = 0.5, u = 1, v = 0.
struct InitStrategy {
  std::optional<ModelParams> params;
};

struct ChainConfig {
  int iterations = 6000;
  int burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 42;
  InitStrategy init;

  // Throws ConfigError unless iterations > burnin >= 0 and thin >= 1.
  void validate() const;
  int retained() const noexcept { return (iterations - burnin) / thin; }
};

inline constexpr int kMinRetainedDraws = 100;

struct SamplerState {
  ModelParams params;
  LatentState latent;
};

// Test hooks. Neither changes the sweep order.
struct SamplerHooks {
  // Keep u = 1 in every sweep (UNER reduces to NER blockwise).
  bool freeze_u_at_one = false;
  // Replace the improper priors on beta and sigma2 by proper ones.
  std::optional<ProperSurrogate> surrogate;
};

struct ChainOutput {
  ModelKind kind = ModelKind::kUner;
  std::vector<ModelParams> params;
  std::vector<LatentState> latents;
  ChainConfig config;
  PriorConfig prior;  // resolved hyperparameters (UNER only)
  std::uint64_t dataset_fingerprint = 0;
  std::string rng_algorithm;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return params.size(); }
};

SamplerState initial_state(const UnitDataset& data, ModelKind kind, const InitStrategy& init);

// One sweep. The order is fixed:
//   UNER: u -> p -> beta -> v -> tau2 -> sigma2
//   NER:  beta -> v -> tau2 -> sigma2
// beta is drawn with v integrated out, so v is redrawn right after it and
// before the v-conditioned blocks. Block failures are rethrown as
// SamplerError carrying `sweep` and the block name.
void gibbs_sweep(SamplerState& state, const UnitDataset& data, const PriorConfig& prior,
                 const SamplerHooks& hooks, Rng& rng, std::size_t sweep = 0);

// Runs a UNER chain: resolves auto hyperparameters, refuses to start unless
// the posterior-propriety conditions hold, warns when the finite-variance
// conditions fail. Deterministic in (data, prior, cfg).
ChainOutput gibbs_uner(const UnitDataset& data, const PriorConfig& prior, const TargetSpec& target,
                       const ChainConfig& cfg, const SamplerHooks& hooks = {});

ChainOutput gibbs_ner(const UnitDataset& data, const TargetSpec& target, const ChainConfig& cfg);

// Either model; prior is ignored for NER.
ChainOutput run_chain(const UnitDataset& data, ModelKind kind, const PriorConfig& prior,
                      const ChainConfig& cfg, const SamplerHooks& hooks = {});

}  // namespace uner
