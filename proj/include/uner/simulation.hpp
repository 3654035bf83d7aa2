#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uner/gibbs.hpp"
#include "uner/random.hpp"
#include "uner/types.hpp"

namespace uner {

// Random-effect laws of the model-based study. All non-degenerate components
// have variance 0.49.
//   S1: N(0, 0.49)
//   S2: 0.3 delta_0 + 0.7 N(0, 0.49)
//   S3: 0.3 delta_0 + 0.7 Laplace(0, scale 0.7 / sqrt 2)
//   S4: 0.3 delta_0 + 0.7 t_6 scaled by 0.7 sqrt(4 / 6)
enum class Scenario { kS1, kS2, kS3, kS4 };

Scenario parse_scenario(const std::string& tag);
const char* to_string(Scenario s) noexcept;

double draw_effect(Scenario s, Rng& rng);

struct ScenarioConfig {
  Scenario scenario = Scenario::kS2;
  int n = 6;
  int m = 50;
  double beta0 = 1.0;
  double beta1 = 0.5;
  int replications = 200;
  std::uint64_t base_seed = 20240601;

  void validate() const;
};

// Covariates x_ij ~ U(1, 2), one column per unit plus an intercept. Depends
// only on (base_seed, n, m): identical across replications and scenarios.
std::vector<Matrix> scenario_covariates(const ScenarioConfig& cfg);

struct ScenarioDraw {
  UnitDataset data;
  Vector mu;  // beta0 + beta1 xbar_i + v_i
  Vector v;
};

// Replication r of the configuration. The stream seed is
// derive_seed(base_seed, {r, hash_tag(scenario)}).
ScenarioDraw gen_scenario(const ScenarioConfig& cfg, int replication);

struct SimulationSettings {
  ChainConfig chain{2500, 500, 1, 0, {}};  // seed is derived per replication
  PriorConfig prior{5, 4.0, 2.0, true};
  int threads = 0;  // 0: UNER_THREADS environment variable, else hardware concurrency
};

int resolve_threads(int requested);

// Point estimates and 95% intervals for one model in one replication.
struct ModelEstimates {
  Vector point;
  Vector ci_lo;
  Vector ci_hi;
};

inline constexpr std::size_t kUnerSlot = 0;
inline constexpr std::size_t kNerSlot = 1;

struct ReplicationRecord {
  int replication = 0;
  int attempts = 1;
  Vector truth;
  std::array<ModelEstimates, 2> estimates;  // kUnerSlot, kNerSlot
};

struct MetricsRow {
  Scenario scenario = Scenario::kS1;
  int n = 0;
  int m = 0;
  ModelKind model = ModelKind::kUner;
  double mse = 0.0;
  double bias = 0.0;  // mean absolute error
  double cp = 0.0;    // coverage, percent
  int replications = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  const MetricsRow& at(Scenario s, ModelKind model) const;
};

// Pure reduction over stored replication records, in replication order with
// compensated summation.
MetricsTable reduce_metrics(const ScenarioConfig& cfg, const std::vector<ReplicationRecord>& records);

struct ModelSimResult {
  MetricsTable table;
  std::vector<ReplicationRecord> records;
  std::vector<std::string> log;
};

// Fits UNER and NER to every replication. A failed replication is retried
// with a fresh derived seed up to three times before the run aborts.
ModelSimResult run_model_sim(const ScenarioConfig& cfg, const SimulationSettings& settings);

// --- design-based study -----------------------------------------------------

struct PopulationConfig {
  int m = 30;
  int size_min = 20;
  int size_max = 45;
  Scenario scenario = Scenario::kS2;
  double beta0 = 1.0;
  double beta1 = 0.5;
  std::uint64_t seed = 7;
};

// Fully enumerated finite populations: each area holds all N_i units.
struct Population {
  std::vector<AreaData> areas;
  Vector v;  // effects used to generate the population

  // True finite-population means (the same arithmetic as AreaData::ybar()).
  Vector means() const;
};

Population generate_population(const PopulationConfig& cfg);

// n_i = N_i pi rounded half away from zero, clamped to [2, N_i]. Throws
// ConfigError if any N_i < 2 or pi is outside (0, 1].
std::vector<long> design_sample_sizes(const Population& pop, double pi);

// Simple random sample without replacement of n from {0..N-1}, ascending.
std::vector<std::size_t> srs_without_replacement(std::size_t population, std::size_t n, Rng& rng);

struct DesignSimResult {
  double pi = 0.0;
  int replications = 0;
  std::vector<std::string> ids;
  std::vector<long> sample_sizes;
  Vector truth;
  std::array<Vector, 2> smse;         // per area, kUnerSlot / kNerSlot
  Vector ratio;                       // smse UNER / smse NER (NaN when both are 0)
  std::array<double, 2> coverage{};   // percent of (r, i) with truth inside the 95% interval
  std::vector<ReplicationRecord> records;
  std::vector<std::string> log;
};

DesignSimResult run_design_sim(const Population& pop, double pi, int replications,
                               std::uint64_t base_seed, const SimulationSettings& settings);

}  // namespace uner
