#include "uner/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uner/conditions.hpp"
#include "uner/diagnostics.hpp"
#include "uner/error.hpp"
#include "uner/io.hpp"
#include "uner/posterior.hpp"
#include "uner/prediction.hpp"
#include "uner/simulation.hpp"

namespace uner::cli {

namespace {

using nlohmann::ordered_json;

struct ChainOptions {
  int iterations = 6000;
  int burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 42;
};

struct PriorOptions {
  int a = 5;
  std::optional<double> b1;
  std::optional<double> b2;
  bool auto_hyper = false;

  // Explicit b1/b2 must come as a pair; without them the hyperparameters are
  // derived from the sampling-variance estimate.
  PriorConfig resolve() const {
    if (auto_hyper && (b1 || b2)) throw ConfigError("--auto-hyper cannot be combined with --b1/--b2");
    if (b1.has_value() != b2.has_value()) throw ConfigError("--b1 and --b2 must be given together");
    PriorConfig p;
    p.a = a;
    if (b1) {
      p.b1 = *b1;
      p.b2 = *b2;
      p.auto_hyper = false;
    } else {
      p.auto_hyper = true;
    }
    return p;
  }
};

struct FitOptions {
  std::string data;
  std::string population;
  std::string model = "uner";
  bool intercept = false;
  std::string out_dir = "out";
  ChainOptions chain;
  PriorOptions prior;
};

struct SimulateOptions {
  std::string scenario = "S2";
  int n = 6;
  int m = 50;
  int reps = 200;
  std::vector<double> pi;
  int pop_min = 20;
  int pop_max = 45;
  bool full_scale = false;
  int threads = 0;
  std::string out_dir = "out";
  ChainOptions chain{2500, 500, 1, 20240601};
  PriorOptions prior;
};

ModelKind parse_model(const std::string& s) {
  if (s == "uner") return ModelKind::kUner;
  if (s == "ner") return ModelKind::kNer;
  throw ConfigError("unknown model '" + s + "' (expected uner or ner)");
}

void add_chain_options(CLI::App* cmd, ChainOptions& c) {
  cmd->add_option("--iters", c.iterations, "Total Gibbs sweeps")->capture_default_str();
  cmd->add_option("--burnin", c.burnin, "Discarded initial sweeps")->capture_default_str();
  cmd->add_option("--thin", c.thin, "Keep every k-th sweep after burn-in")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Base seed")->capture_default_str();
}

void add_prior_options(CLI::App* cmd, PriorOptions& p) {
  cmd->add_option("--a", p.a, "Threshold a of the tau2 prior switch")->capture_default_str();
  cmd->add_option("--b1", p.b1, "Inverse-gamma shape for z <= a (default: V + 2)");
  cmd->add_option("--b2", p.b2, "Inverse-gamma rate for z <= a (default: V (V + 1))");
  cmd->add_flag("--auto-hyper", p.auto_hyper, "Derive b1, b2 from the sampling variance V");
}

ChainConfig to_chain(const ChainOptions& c) {
  ChainConfig cfg;
  cfg.iterations = c.iterations;
  cfg.burnin = c.burnin;
  cfg.thin = c.thin;
  cfg.seed = c.seed;
  return cfg;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
    if (!out_) throw IoError("write to '" + path_.string() + "' failed");
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "1" : "0"; }

  std::filesystem::path path_;
  std::ofstream out_;
};

ordered_json prior_json(const PriorConfig& p) {
  return {{"a", p.a}, {"b1", p.b1}, {"b2", p.b2}, {"auto_hyper", p.auto_hyper}};
}

ordered_json chain_json(const ChainConfig& c) {
  return {{"iterations", c.iterations}, {"burnin", c.burnin}, {"thin", c.thin}, {"seed", c.seed}};
}

void write_manifest(const std::filesystem::path& dir, ordered_json manifest,
                    std::chrono::steady_clock::time_point start) {
  manifest["artifact_version"] = kVersion;
  manifest["rng_algorithm"] = std::string(kRngAlgorithm);
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// The finite-variance warning is already printed by gate_conditions.
void report_chain_warnings(const ChainOutput& chain, std::ostream& err) {
  for (const auto& w : chain.warnings)
    if (w.find("finite posterior variance") == std::string::npos) err << "warning: " << w << '\n';
}

// Refuses to run when the propriety conditions fail; warns on the
// finite-variance conditions.
void gate_conditions(const UnitDataset& data, const PriorConfig& prior, std::ostream& err) {
  const auto proper = validate_conditions(data, prior, Strictness::kPropriety);
  if (!proper.pass) throw ConfigError(proper.message());
  const auto finite = validate_conditions(data, prior, Strictness::kFiniteVariance);
  if (!finite.pass) err << "warning: " << finite.message() << '\n';
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const ModelKind kind = parse_model(o.model);
  const UnitDataset data = read_unit_csv(o.data, o.intercept);
  const ChainConfig cfg = to_chain(o.chain);
  cfg.validate();
  PriorConfig prior;
  if (kind == ModelKind::kUner) {
    const PriorConfig requested = o.prior.resolve();
    gate_conditions(data, requested, err);
    prior = resolve_prior(requested, data);
  }
  const TargetSpec target = TargetSpec::area_means(data);
  const ChainOutput chain =
      kind == ModelKind::kUner ? gibbs_uner(data, prior, target, cfg) : gibbs_ner(data, target, cfg);
  report_chain_warnings(chain, err);

  const auto dir = prepare_dir(o.out_dir);
  {
    CsvFile f(dir / "params.csv");
    f.row("parameter", "mean", "sd", "ci_lo", "ci_hi", "split_discrepancy", "flagged");
    for (const auto& s : chain_summary(chain))
      f.row(s.name, s.mean, s.sd, s.ci_lo, s.ci_hi, s.split_discrepancy, s.flagged);
  }
  {
    const auto summary = summarize_mu(chain, target);
    CsvFile f(dir / "areas.csv");
    if (kind == ModelKind::kUner)
      f.row("area_id", "n", "mu_mean", "mu_sd", "mu_ci_lo", "mu_ci_hi", "p_tilde_mean");
    else
      f.row("area_id", "n", "mu_mean", "mu_sd", "mu_ci_lo", "mu_ci_hi");
    for (std::size_t i = 0; i < data.m(); ++i) {
      const auto& s = summary.areas[i];
      const long n = static_cast<long>(data.area(i).n());
      if (kind == ModelKind::kUner)
        f.row(data.area(i).id(), n, s.point, s.sd, s.ci_lo, s.ci_hi, s.p_tilde_mean.value_or(0.0));
      else
        f.row(data.area(i).id(), n, s.point, s.sd, s.ci_lo, s.ci_hi);
    }
  }
  const DicReport d = dic(chain, data);
  {
    CsvFile f(dir / "dic.csv");
    f.row("model", "dic", "dbar", "d_at_mean", "p_d", "negative_p_d");
    f.row(to_string(kind), d.dic, d.dbar, d.d_at_mean, d.p_d, d.negative_p_d);
  }
  if (d.negative_p_d) err << "warning: effective number of parameters p_D is negative\n";

  ordered_json manifest = {
      {"command", "fit"},
      {"config",
       {{"data", o.data},
        {"model", to_string(kind)},
        {"intercept", o.intercept},
        {"chain", chain_json(cfg)},
        {"prior", kind == ModelKind::kUner ? prior_json(prior) : ordered_json(nullptr)}}},
      {"seed", cfg.seed},
      {"dataset_fingerprint", fingerprint_hex(data.fingerprint())},
      {"retained_draws", chain.size()},
      {"warnings", chain.warnings}};
  write_manifest(dir, manifest, start);
  out << "fit " << to_string(kind) << ": " << chain.size() << " draws, DIC " << format_double(d.dic)
      << ", outputs in " << dir.string() << '\n';
  return kOk;
}

int cmd_predict_fp(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const ModelKind kind = parse_model(o.model);
  const UnitDataset data = read_unit_csv(o.data, o.intercept);
  const FinitePopulationSpec spec = read_population_csv(o.population, data, o.intercept);
  const ChainConfig cfg = to_chain(o.chain);
  cfg.validate();
  PriorConfig prior;
  if (kind == ModelKind::kUner) {
    const PriorConfig requested = o.prior.resolve();
    gate_conditions(data, requested, err);
    prior = resolve_prior(requested, data);
  }
  const auto result = predict_finite_population(data, spec, kind, prior, cfg);
  report_chain_warnings(result.chain, err);

  const auto dir = prepare_dir(o.out_dir);
  {
    CsvFile f(dir / "finite_population.csv");
    if (kind == ModelKind::kUner)
      f.row("area_id", "N", "n", "mean", "sd", "ci_lo", "ci_hi", "p_tilde_mean");
    else
      f.row("area_id", "N", "n", "mean", "sd", "ci_lo", "ci_hi");
    for (std::size_t i = 0; i < data.m(); ++i) {
      const auto& s = result.summary.areas[i];
      const long n = static_cast<long>(data.area(i).n());
      if (kind == ModelKind::kUner)
        f.row(data.area(i).id(), spec.areas[i].size, n, s.point, s.sd, s.ci_lo, s.ci_hi,
              s.p_tilde_mean.value_or(0.0));
      else
        f.row(data.area(i).id(), spec.areas[i].size, n, s.point, s.sd, s.ci_lo, s.ci_hi);
    }
  }
  ordered_json manifest = {
      {"command", "predict-fp"},
      {"config",
       {{"data", o.data},
        {"population", o.population},
        {"model", to_string(kind)},
        {"intercept", o.intercept},
        {"chain", chain_json(cfg)},
        {"prior", kind == ModelKind::kUner ? prior_json(prior) : ordered_json(nullptr)}}},
      {"seed", cfg.seed},
      {"dataset_fingerprint", fingerprint_hex(data.fingerprint())},
      {"retained_draws", result.chain.size()},
      {"warnings", result.chain.warnings}};
  write_manifest(dir, manifest, start);
  out << "predict-fp " << to_string(kind) << ": " << data.m() << " areas, outputs in " << dir.string()
      << '\n';
  return kOk;
}

SimulationSettings settings_from(const SimulateOptions& o) {
  SimulationSettings s;
  s.chain = to_chain(o.chain);
  s.chain.seed = 0;
  if (o.full_scale) {
    s.chain.iterations = 6000;
    s.chain.burnin = 1000;
  }
  s.prior = o.prior.resolve();
  if (!s.prior.auto_hyper) s.prior.validate();
  s.threads = o.threads;
  return s;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario scenario = parse_scenario(o.scenario);
  const SimulationSettings settings = settings_from(o);
  const int reps = o.full_scale ? 1000 : o.reps;
  const auto dir = prepare_dir(o.out_dir);
  ordered_json config = {{"scenario", to_string(scenario)},
                         {"replications", reps},
                         {"chain", chain_json(settings.chain)},
                         {"prior", prior_json(settings.prior)},
                         {"threads", resolve_threads(settings.threads)}};

  if (o.pi.empty()) {
    ScenarioConfig sc;
    sc.scenario = scenario;
    sc.n = o.n;
    sc.m = o.m;
    sc.replications = reps;
    sc.base_seed = o.chain.seed;
    const auto res = run_model_sim(sc, settings);
    report_warnings(res.log, err);
    {
      CsvFile f(dir / "metrics.csv");
      f.row("scenario", "n", "m", "model", "mse", "bias", "cp", "replications");
      for (const auto& r : res.table.rows)
        f.row(to_string(r.scenario), r.n, r.m, to_string(r.model), r.mse, r.bias, r.cp, r.replications);
    }
    {
      CsvFile f(dir / "replications.csv");
      f.row("replication", "area", "truth", "model", "point", "ci_lo", "ci_hi");
      for (const auto& rec : res.records)
        for (const ModelKind kind : {ModelKind::kUner, ModelKind::kNer}) {
          const auto& e = rec.estimates[kind == ModelKind::kUner ? kUnerSlot : kNerSlot];
          for (Eigen::Index i = 0; i < rec.truth.size(); ++i)
            f.row(rec.replication, static_cast<int>(i + 1), rec.truth(i), to_string(kind), e.point(i),
                  e.ci_lo(i), e.ci_hi(i));
        }
    }
    config["n"] = sc.n;
    config["m"] = sc.m;
    write_manifest(dir, {{"command", "simulate"}, {"study", "model"}, {"config", config},
                         {"seed", sc.base_seed}, {"log", res.log}},
                   start);
    for (const auto& r : res.table.rows)
      out << to_string(r.scenario) << " (" << r.n << "," << r.m << ") " << to_string(r.model)
          << ": MSE " << format_double(r.mse) << " Bias " << format_double(r.bias) << " CP "
          << format_double(r.cp) << '\n';
    return kOk;
  }

  PopulationConfig pc;
  pc.m = o.m;
  pc.size_min = o.pop_min;
  pc.size_max = o.pop_max;
  pc.scenario = scenario;
  pc.seed = o.chain.seed;
  const Population pop = generate_population(pc);
  CsvFile f(dir / "smse.csv");
  f.row("pi", "area_id", "N", "n", "truth", "smse_uner", "smse_ner", "ratio");
  ordered_json coverage = ordered_json::array();
  std::vector<std::string> log;
  for (const double pi : o.pi) {
    const auto res = run_design_sim(pop, pi, reps, o.chain.seed, settings);
    report_warnings(res.log, err);
    log.insert(log.end(), res.log.begin(), res.log.end());
    for (std::size_t i = 0; i < res.ids.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      f.row(pi, res.ids[i], static_cast<long>(pop.areas[i].n()), res.sample_sizes[i], res.truth(k),
            res.smse[kUnerSlot](k), res.smse[kNerSlot](k), res.ratio(k));
    }
    coverage.push_back({{"pi", pi},
                        {"coverage_uner", res.coverage[kUnerSlot]},
                        {"coverage_ner", res.coverage[kNerSlot]}});
    out << "pi " << format_double(pi) << ": coverage UNER " << format_double(res.coverage[kUnerSlot])
        << " NER " << format_double(res.coverage[kNerSlot]) << '\n';
  }
  config["m"] = pc.m;
  config["pop_min"] = pc.size_min;
  config["pop_max"] = pc.size_max;
  config["pi"] = o.pi;
  write_manifest(dir, {{"command", "simulate"}, {"study", "design"}, {"config", config},
                       {"seed", o.chain.seed}, {"coverage", coverage}, {"log", log}},
                 start);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian nested error regression with uncertain random effects"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit UNER or NER by Gibbs sampling");
  fit_cmd->add_option("--data", fit.data, "Unit CSV: area_id,y,x1,...,xq")->required();
  fit_cmd->add_option("--model", fit.model, "uner or ner")->capture_default_str();
  fit_cmd->add_flag("--intercept", fit.intercept, "Prepend a constant-1 covariate");
  fit_cmd->add_option("--out-dir", fit.out_dir, "Output directory")->capture_default_str();
  add_chain_options(fit_cmd, fit.chain);
  add_prior_options(fit_cmd, fit.prior);

  FitOptions fp;
  auto* fp_cmd = app.add_subcommand("predict-fp", "Predict finite-population area means");
  fp_cmd->add_option("--data", fp.data, "Unit CSV: area_id,y,x1,...,xq")->required();
  fp_cmd->add_option("--population", fp.population, "Population CSV: area_id,N,xbar1,...,xbarq")
      ->required();
  fp_cmd->add_option("--model", fp.model, "uner or ner")->capture_default_str();
  fp_cmd->add_flag("--intercept", fp.intercept, "Prepend a constant-1 covariate");
  fp_cmd->add_option("--out-dir", fp.out_dir, "Output directory")->capture_default_str();
  add_chain_options(fp_cmd, fp.chain);
  add_prior_options(fp_cmd, fp.prior);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Model-based (default) or design-based (--pi) study");
  sim_cmd->add_option("--scenario", sim.scenario, "Random-effect law: S1, S2, S3 or S4")
      ->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "Units per area (model study)")->capture_default_str();
  sim_cmd->add_option("--m", sim.m, "Number of areas")->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "Replications R")->capture_default_str();
  sim_cmd->add_option("--pi", sim.pi, "Sampling rates; switches to the design study")->delimiter(',');
  sim_cmd->add_option("--pop-min", sim.pop_min, "Smallest synthetic population size")
      ->capture_default_str();
  sim_cmd->add_option("--pop-max", sim.pop_max, "Largest synthetic population size")
      ->capture_default_str();
  sim_cmd->add_flag("--full-scale", sim.full_scale, "R = 1000, 6000 sweeps with 1000 burn-in");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0: $UNER_THREADS or all cores)")
      ->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  add_chain_options(sim_cmd, sim.chain);
  add_prior_options(sim_cmd, sim.prior);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kValidationFailure;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out, err);
    if (*fp_cmd) return cmd_predict_fp(fp, out, err);
    if (*sim_cmd) return cmd_simulate(sim, out, err);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const ConfigError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const DomainError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kValidationFailure;
}

}  // namespace uner::cli
