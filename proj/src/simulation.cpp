#include "uner/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "uner/error.hpp"
#include "uner/conditions.hpp"
#include "uner/prediction.hpp"
#include "uner/stats.hpp"

namespace uner {

namespace {

constexpr double kSlabSd = 0.7;
constexpr double kSpikeWeight = 0.3;
constexpr int kMaxRetries = 3;

// Runs fn(i) for i in [0, count) on `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::size_t slot(ModelKind kind) { return kind == ModelKind::kUner ? kUnerSlot : kNerSlot; }

ModelEstimates estimates_from(const PredictionSummary& s) {
  const auto m = static_cast<Eigen::Index>(s.areas.size());
  ModelEstimates e{Vector(m), Vector(m), Vector(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& a = s.areas[static_cast<std::size_t>(i)];
    e.point(i) = a.point;
    e.ci_lo(i) = a.ci_lo;
    e.ci_hi(i) = a.ci_hi;
  }
  return e;
}

ChainConfig chain_for(const SimulationSettings& settings, std::uint64_t seed) {
  ChainConfig c = settings.chain;
  c.seed = seed;
  return c;
}

// Fits both models with up to kMaxRetries fresh seeds after a failure.
template <typename FitOnce>
ReplicationRecord fit_with_retries(int r, std::uint64_t rep_seed, FitOnce&& fit_once,
                                   std::vector<std::string>& log) {
  for (int attempt = 0;; ++attempt) {
    try {
      ReplicationRecord rec = fit_once(derive_seed(rep_seed, {hash_tag("attempt"),
                                                              static_cast<std::uint64_t>(attempt)}));
      rec.replication = r;
      rec.attempts = attempt + 1;
      return rec;
    } catch (const std::exception& e) {
      log.push_back("replication " + std::to_string(r) + " attempt " + std::to_string(attempt + 1) +
                    " failed: " + e.what());
      if (attempt >= kMaxRetries)
        throw NumericalError("replication " + std::to_string(r) + " failed after " +
                             std::to_string(kMaxRetries) + " retries: " + e.what());
    }
  }
}

std::vector<std::string> merge_logs(std::vector<std::vector<std::string>>& logs) {
  std::vector<std::string> out;
  for (auto& l : logs)
    for (auto& s : l) out.push_back(std::move(s));
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& tag) {
  if (tag == "S1" || tag == "s1") return Scenario::kS1;
  if (tag == "S2" || tag == "s2") return Scenario::kS2;
  if (tag == "S3" || tag == "s3") return Scenario::kS3;
  if (tag == "S4" || tag == "s4") return Scenario::kS4;
  throw ConfigError("unknown scenario '" + tag + "' (expected S1, S2, S3 or S4)");
}

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::kS1: return "S1";
    case Scenario::kS2: return "S2";
    case Scenario::kS3: return "S3";
    case Scenario::kS4: return "S4";
  }
  return "?";
}

double draw_effect(Scenario s, Rng& rng) {
  if (s == Scenario::kS1) return rng.normal(0.0, kSlabSd);
  if (rng.uniform() < kSpikeWeight) return 0.0;
  switch (s) {
    case Scenario::kS2:
      return rng.normal(0.0, kSlabSd);
    case Scenario::kS3: {
      // Laplace with scale b has variance 2 b^2.
      const double b = kSlabSd / std::sqrt(2.0);
      const double e = std::exponential_distribution<double>(1.0 / b)(rng.engine());
      return rng.uniform() < 0.5 ? -e : e;
    }
    case Scenario::kS4: {
      // t_nu has variance nu / (nu - 2); scale so the variance is 0.49.
      const double scale = kSlabSd * std::sqrt(4.0 / 6.0);
      return scale * std::student_t_distribution<double>(6.0)(rng.engine());
    }
    default:
      return 0.0;
  }
}

void ScenarioConfig::validate() const {
  if (n < 1) throw ConfigError("units per area n must be positive");
  if (m < 2) throw ConfigError("area count m must be at least 2");
  if (replications < 1) throw ConfigError("replication count must be positive");
}

std::vector<Matrix> scenario_covariates(const ScenarioConfig& cfg) {
  Rng rng(derive_seed(cfg.base_seed, {hash_tag("covariates"), static_cast<std::uint64_t>(cfg.n),
                                      static_cast<std::uint64_t>(cfg.m)}));
  std::vector<Matrix> xs;
  xs.reserve(static_cast<std::size_t>(cfg.m));
  for (int i = 0; i < cfg.m; ++i) {
    Matrix x(cfg.n, 2);
    for (int j = 0; j < cfg.n; ++j) {
      x(j, 0) = 1.0;
      x(j, 1) = 1.0 + rng.uniform();
    }
    xs.push_back(std::move(x));
  }
  return xs;
}

ScenarioDraw gen_scenario(const ScenarioConfig& cfg, int replication) {
  cfg.validate();
  const auto xs = scenario_covariates(cfg);
  Rng rng(derive_seed(cfg.base_seed,
                      {static_cast<std::uint64_t>(replication), hash_tag(to_string(cfg.scenario))}));
  std::vector<AreaData> areas;
  areas.reserve(static_cast<std::size_t>(cfg.m));
  Vector v(cfg.m);
  Vector mu(cfg.m);
  for (int i = 0; i < cfg.m; ++i) {
    v(i) = draw_effect(cfg.scenario, rng);
    const Matrix& x = xs[static_cast<std::size_t>(i)];
    Vector y(cfg.n);
    for (int j = 0; j < cfg.n; ++j) y(j) = cfg.beta0 + cfg.beta1 * x(j, 1) + v(i) + rng.normal();
    areas.emplace_back(std::to_string(i + 1), std::move(y), x);
    mu(i) = cfg.beta0 + cfg.beta1 * areas.back().xbar()(1) + v(i);
  }
  return {UnitDataset(std::move(areas)), std::move(mu), std::move(v)};
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("UNER_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

const MetricsRow& MetricsTable::at(Scenario s, ModelKind model) const {
  for (const auto& r : rows)
    if (r.scenario == s && r.model == model) return r;
  throw ConfigError(std::string("no metrics row for ") + to_string(s) + "/" + to_string(model));
}

MetricsTable reduce_metrics(const ScenarioConfig& cfg, const std::vector<ReplicationRecord>& records) {
  MetricsTable table;
  for (const ModelKind kind : {ModelKind::kUner, ModelKind::kNer}) {
    CompensatedSum se, ae;
    long covered = 0;
    long cells = 0;
    for (const auto& rec : records) {
      const auto& est = rec.estimates[slot(kind)];
      for (Eigen::Index i = 0; i < rec.truth.size(); ++i) {
        const double err = est.point(i) - rec.truth(i);
        se.add(err * err);
        ae.add(std::abs(err));
        if (est.ci_lo(i) <= rec.truth(i) && rec.truth(i) <= est.ci_hi(i)) ++covered;
        ++cells;
      }
    }
    MetricsRow row;
    row.scenario = cfg.scenario;
    row.n = cfg.n;
    row.m = cfg.m;
    row.model = kind;
    row.replications = static_cast<int>(records.size());
    if (cells > 0) {
      row.mse = se.value() / static_cast<double>(cells);
      row.bias = ae.value() / static_cast<double>(cells);
      row.cp = 100.0 * static_cast<double>(covered) / static_cast<double>(cells);
    }
    table.rows.push_back(row);
  }
  return table;
}

ModelSimResult run_model_sim(const ScenarioConfig& cfg, const SimulationSettings& settings) {
  cfg.validate();
  {
    const long total = static_cast<long>(cfg.n) * cfg.m;
    const auto report = validate_conditions(total, 2, cfg.m, settings.prior.a, Strictness::kPropriety);
    if (!report.pass) throw ConfigError(report.message());
  }
  settings.chain.validate();

  ModelSimResult out;
  out.records.resize(static_cast<std::size_t>(cfg.replications));
  std::vector<std::vector<std::string>> logs(static_cast<std::size_t>(cfg.replications));

  parallel_for(cfg.replications, resolve_threads(settings.threads), [&](int r) {
    const ScenarioDraw draw = gen_scenario(cfg, r);
    const TargetSpec target = TargetSpec::area_means(draw.data);
    const std::uint64_t rep_seed =
        derive_seed(cfg.base_seed, {static_cast<std::uint64_t>(r), hash_tag(to_string(cfg.scenario)),
                                    hash_tag("fit")});
    auto fit_once = [&](std::uint64_t seed) {
      ReplicationRecord rec;
      rec.truth = draw.mu;
      const auto uner_chain = gibbs_uner(draw.data, settings.prior, target,
                                         chain_for(settings, derive_seed(seed, {hash_tag("uner")})));
      rec.estimates[kUnerSlot] = estimates_from(summarize_mu(uner_chain, target));
      const auto ner_chain =
          gibbs_ner(draw.data, target, chain_for(settings, derive_seed(seed, {hash_tag("ner")})));
      rec.estimates[kNerSlot] = estimates_from(summarize_mu(ner_chain, target));
      return rec;
    };
    out.records[static_cast<std::size_t>(r)] =
        fit_with_retries(r, rep_seed, fit_once, logs[static_cast<std::size_t>(r)]);
  });

  out.log = merge_logs(logs);
  out.table = reduce_metrics(cfg, out.records);
  return out;
}

Vector Population::means() const {
  Vector out(static_cast<Eigen::Index>(areas.size()));
  for (std::size_t i = 0; i < areas.size(); ++i) out(static_cast<Eigen::Index>(i)) = areas[i].ybar();
  return out;
}

Population generate_population(const PopulationConfig& cfg) {
  if (cfg.m < 2) throw ConfigError("population needs at least two areas");
  if (cfg.size_min < 2 || cfg.size_max < cfg.size_min)
    throw ConfigError("population sizes need 2 <= size_min <= size_max");
  Rng rng(derive_seed(cfg.seed, {hash_tag("population")}));
  std::uniform_int_distribution<int> size_law(cfg.size_min, cfg.size_max);
  Population pop;
  pop.v.resize(cfg.m);
  for (int i = 0; i < cfg.m; ++i) {
    const int size = size_law(rng.engine());
    pop.v(i) = draw_effect(cfg.scenario, rng);
    Matrix x(size, 2);
    Vector y(size);
    for (int j = 0; j < size; ++j) {
      x(j, 0) = 1.0;
      x(j, 1) = 1.0 + rng.uniform();
      y(j) = cfg.beta0 + cfg.beta1 * x(j, 1) + pop.v(i) + rng.normal();
    }
    pop.areas.emplace_back(std::to_string(i + 1), std::move(y), std::move(x));
  }
  return pop;
}

std::vector<long> design_sample_sizes(const Population& pop, double pi) {
  if (!(pi > 0.0 && pi <= 1.0)) throw ConfigError("sampling rate pi must lie in (0, 1]");
  std::vector<long> sizes;
  sizes.reserve(pop.areas.size());
  for (const auto& a : pop.areas) {
    const long big = static_cast<long>(a.n());
    if (big < 2)
      throw ConfigError("area '" + a.id() + "' has fewer than 2 population units; cannot sample 2");
    const long n = std::lround(static_cast<double>(big) * pi);
    sizes.push_back(std::clamp(n, 2L, big));
  }
  return sizes;
}

std::vector<std::size_t> srs_without_replacement(std::size_t population, std::size_t n, Rng& rng) {
  if (n > population) throw ConfigError("sample larger than population");
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(n);
  std::sample(all.begin(), all.end(), std::back_inserter(out), n, rng.engine());
  return out;
}

DesignSimResult run_design_sim(const Population& pop, double pi, int replications,
                               std::uint64_t base_seed, const SimulationSettings& settings) {
  if (replications < 1) throw ConfigError("replication count must be positive");
  settings.chain.validate();
  DesignSimResult out;
  out.pi = pi;
  out.replications = replications;
  out.sample_sizes = design_sample_sizes(pop, pi);
  out.truth = pop.means();
  const auto m = static_cast<Eigen::Index>(pop.areas.size());
  for (const auto& a : pop.areas) out.ids.push_back(a.id());

  FinitePopulationSpec spec;
  for (const auto& a : pop.areas) spec.areas.push_back({a.id(), static_cast<long>(a.n()), a.xbar()});

  out.records.resize(static_cast<std::size_t>(replications));
  std::vector<std::vector<std::string>> logs(static_cast<std::size_t>(replications));
  const auto pi_key = static_cast<std::uint64_t>(std::llround(pi * 1e6));

  parallel_for(replications, resolve_threads(settings.threads), [&](int r) {
    const std::uint64_t rep_seed =
        derive_seed(base_seed, {hash_tag("design"), pi_key, static_cast<std::uint64_t>(r)});
    Rng sampler(derive_seed(rep_seed, {hash_tag("srs")}));
    std::vector<AreaData> sample;
    sample.reserve(pop.areas.size());
    for (std::size_t i = 0; i < pop.areas.size(); ++i) {
      const auto& a = pop.areas[i];
      const auto idx = srs_without_replacement(static_cast<std::size_t>(a.n()),
                                               static_cast<std::size_t>(out.sample_sizes[i]), sampler);
      Vector y(static_cast<Eigen::Index>(idx.size()));
      Matrix x(static_cast<Eigen::Index>(idx.size()), a.q());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        y(static_cast<Eigen::Index>(k)) = a.y()(static_cast<Eigen::Index>(idx[k]));
        x.row(static_cast<Eigen::Index>(k)) = a.x().row(static_cast<Eigen::Index>(idx[k]));
      }
      sample.emplace_back(a.id(), std::move(y), std::move(x));
    }
    const UnitDataset data(std::move(sample));

    auto fit_once = [&](std::uint64_t seed) {
      ReplicationRecord rec;
      rec.truth = out.truth;
      for (const ModelKind kind : {ModelKind::kUner, ModelKind::kNer}) {
        const auto res = predict_finite_population(
            data, spec, kind, settings.prior, chain_for(settings, derive_seed(seed, {hash_tag(to_string(kind))})));
        rec.estimates[slot(kind)] = estimates_from(res.summary);
      }
      return rec;
    };
    out.records[static_cast<std::size_t>(r)] =
        fit_with_retries(r, rep_seed, fit_once, logs[static_cast<std::size_t>(r)]);
  });
  out.log = merge_logs(logs);

  for (const ModelKind kind : {ModelKind::kUner, ModelKind::kNer}) {
    Vector smse(m);
    long covered = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      CompensatedSum se;
      for (const auto& rec : out.records) {
        const auto& est = rec.estimates[slot(kind)];
        const double err = est.point(i) - out.truth(i);
        se.add(err * err);
        if (est.ci_lo(i) <= out.truth(i) && out.truth(i) <= est.ci_hi(i)) ++covered;
      }
      smse(i) = std::sqrt(se.value() / static_cast<double>(replications));
    }
    out.smse[slot(kind)] = smse;
    out.coverage[slot(kind)] =
        100.0 * static_cast<double>(covered) / static_cast<double>(static_cast<long>(m) * replications);
  }
  out.ratio.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = out.smse[kUnerSlot](i);
    const double b = out.smse[kNerSlot](i);
    out.ratio(i) = b > 0.0 ? a / b : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace uner
