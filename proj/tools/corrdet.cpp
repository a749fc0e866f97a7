// corrdet: exponents, optimal spacing, sweeps and Monte Carlo checks for
// detecting a correlated Gauss-Markov field with a line of sensors.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "corrdet/config_opt.hpp"
#include "corrdet/detector.hpp"
#include "corrdet/exponent.hpp"
#include "corrdet/io.hpp"

using namespace corrdet;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kCheckFailed = 1, kInvalid = 2, kNumeric = 3 };

struct Common {
  std::string config;
  std::optional<double> diffusion_rate;
  std::optional<double> snr_db;
  std::optional<double> snr;
  double stationary_variance = 1.0;
  std::string format = "json";
  std::string out = "-";
  int threads = 0;

  // layout flags
  std::string layout_kind;
  double spacing = 0.0;
  int count = 100;
  int cluster_size = 0;
  int cluster_count = 1;
  double period = 0.0;
  std::vector<double> offsets;
};

void add_common(CLI::App* cmd, Common& c, bool needs_layout) {
  cmd->add_option("--config", c.config, "JSON experiment config");
  cmd->add_option("--A", c.diffusion_rate, "diffusion rate A >= 0");
  auto* db = cmd->add_option("--snr-db", c.snr_db, "SNR in dB");
  auto* lin = cmd->add_option("--snr", c.snr, "SNR, linear");
  db->excludes(lin);
  cmd->add_option("--pi0", c.stationary_variance, "stationary field variance")->capture_default_str();
  cmd->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd->add_option("--out", c.out, "output path, '-' for stdout")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker cap, 0 uses CORRDET_THREADS or all cores")
      ->capture_default_str();
  if (needs_layout) {
    cmd->add_option("--layout", c.layout_kind, "layout kind")
        ->check(CLI::IsMember({"uniform", "clustered", "periodic"}));
    cmd->add_option("--spacing", c.spacing, "uniform spacing");
    cmd->add_option("--count", c.count, "uniform sensor count")->capture_default_str();
    cmd->add_option("--cluster-size", c.cluster_size, "sensors per cluster");
    cmd->add_option("--cluster-count", c.cluster_count, "number of clusters")->capture_default_str();
    cmd->add_option("--offsets", c.offsets, "periodic gaps, last one closes the period");
  }
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg;
  bool have_field = false;
  if (!c.config.empty()) {
    cfg = load_experiment_config(c.config);
    have_field = true;
  }
  if (c.diffusion_rate || c.snr_db || c.snr) {
    double a = c.diffusion_rate ? *c.diffusion_rate : (have_field ? cfg.field.diffusion_rate : -1.0);
    if (a < 0) throw ConfigError("--A is required without --config");
    double pi0 = have_field && c.stationary_variance == 1.0 ? cfg.field.stationary_variance
                                                            : c.stationary_variance;
    double sigma2;
    if (c.snr_db)
      sigma2 = pi0 / db_to_linear(*c.snr_db);
    else if (c.snr)
      sigma2 = pi0 / *c.snr;
    else if (have_field)
      sigma2 = cfg.field.noise_variance;
    else
      throw ConfigError("--snr-db or --snr is required without --config");
    cfg.field = make_field_params(a, pi0, sigma2);
    have_field = true;
  }
  if (!have_field) throw ConfigError("field parameters missing: give --config or --A with --snr-db/--snr");
  cfg.field.validate();

  if (!c.layout_kind.empty()) {
    json j{{"kind", c.layout_kind}};
    if (c.layout_kind == "uniform") {
      j["spacing"] = c.spacing;
      j["count"] = c.count;
    } else if (c.layout_kind == "clustered") {
      j["cluster_size"] = c.cluster_size;
      j["cluster_count"] = c.cluster_count;
      j["period"] = c.period;
    } else {
      j["offsets"] = c.offsets;
      j["period_count"] = c.cluster_count;
    }
    cfg.layout = layout_from_json(j);
  }
  return cfg;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw ConfigError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void emit_json(const Common& c, json metadata, json result) {
  Output out(c.out);
  json doc{{"metadata", std::move(metadata)}, {"result", std::move(result)}};
  out.stream() << doc.dump(2) << '\n';
}

json base_metadata(const std::string& command, const Common& c, const ExperimentConfig& cfg) {
  json m{{"command", command},
         {"version", kVersion},
         {"params", to_json(cfg.field)},
         {"format", c.format}};
  if (!c.config.empty()) m["config"] = c.config;
  if (cfg.layout) m["layout"] = to_json(*cfg.layout);
  return m;
}

LayoutFamily family_for(const SensorLayout& layout) {
  if (const auto* u = std::get_if<UniformLayout>(&layout)) return uniform_family(u->spacing);
  if (const auto* k = std::get_if<ClusteredLayout>(&layout))
    return clustered_family(k->cluster_size, k->period);
  return periodic_family(std::get<PeriodicLayout>(layout).offsets);
}

// ---------------------------------------------------------------------------

int run_exponent(const Common& c) {
  ExperimentConfig cfg = resolve_config(c);
  if (!cfg.layout) throw ConfigError("exponent needs a layout (config 'layout' or --layout)");
  ExponentResult r = exponent(cfg.field, *cfg.layout);
  json result = to_json(r);
  if (const auto* k = std::get_if<ClusteredLayout>(&*cfg.layout)) {
    ExponentResult v = vector_exponent(cfg.field, as_periodic(*k));
    result["cross_check"] = {{"method", "vector"},
                             {"exponent_per_sensor", v.exponent_per_sensor},
                             {"exponent_per_block", v.exponent_per_block},
                             {"difference", r.exponent_per_sensor - v.exponent_per_sensor}};
  }
  if (c.format == "csv") {
    Output out(c.out);
    write_csv(out.stream(), r);
  } else {
    emit_json(c, base_metadata("exponent", c, cfg), result);
  }
  return kOk;
}

struct OptimizeArgs {
  std::vector<double> snr_db_grid;
};

int run_optimize(const Common& c, const OptimizeArgs& a) {
  std::vector<OptimalSpacingResult> curve;
  ExperimentConfig cfg;
  if (!a.snr_db_grid.empty()) {
    if (c.snr_db || c.snr) throw ConfigError("--snr-db-grid excludes --snr-db and --snr");
    double A = c.diffusion_rate ? *c.diffusion_rate : -1.0;
    if (c.diffusion_rate) {
      cfg.field = make_field_params(A, c.stationary_variance, c.stationary_variance);
    } else if (!c.config.empty()) {
      cfg = load_experiment_config(c.config);
      A = cfg.field.diffusion_rate;
    } else {
      throw ConfigError("--A or --config is required");
    }
    curve = optimal_spacing_curve(A, a.snr_db_grid, c.stationary_variance);
  } else {
    cfg = resolve_config(c);
    curve.push_back(cfg.field.diffusion_rate > 0 ? optimal_spacing(cfg.field)
                                                 : optimal_correlation(cfg.field));
  }
  if (c.format == "csv") {
    Output out(c.out);
    write_csv(out.stream(), curve);
    return kOk;
  }
  json m = base_metadata("optimize", c, cfg);
  if (!a.snr_db_grid.empty()) {
    m.erase("params");
    m["diffusion_rate"] = cfg.field.diffusion_rate;
    m["stationary_variance"] = c.stationary_variance;
    m["snr_db_grid"] = a.snr_db_grid;
  }
  m["defaults"] = {{"scan_grid", "linspace(0, 0.999, 1000) plus 1 - 10^-k, k = 3.25..6"},
                   {"crosscheck_grid_step", 1e-3},
                   {"residual_tolerance", 1e-10}};
  json results = json::array();
  for (const auto& r : curve) results.push_back(to_json(r));
  emit_json(c, m, {{"optimal", results}});
  return kOk;
}

struct SweepArgs {
  std::string axis;
  int m = 0;
  double period = 0;
  int grid_points = 0;
  int n_total = 100;
  double field_length = 1.0;
  double a = 0.5;
  double lo = 0, hi = 0;
  std::vector<int> sizes;
};

int run_sweep(const Common& c, SweepArgs s) {
  SweepResult r;
  json defaults;
  ExperimentConfig cfg;
  auto points = [&](int d) { return s.grid_points > 0 ? s.grid_points : d; };
  if (s.axis == "snr") {
    int pts = points(51);
    double lo = s.lo != s.hi ? s.lo : -20.0, hi = s.lo != s.hi ? s.hi : 30.0;
    std::vector<double> grid;
    for (double db : linspace(lo, hi, pts)) grid.push_back(db_to_linear(db));
    r = snr_sweep(s.a, grid, s.n_total, c.stationary_variance);
    defaults = {{"a", s.a}, {"snr_db_lo", lo}, {"snr_db_hi", hi}, {"grid_points", pts}};
    cfg.field = make_field_params(0.0, c.stationary_variance, c.stationary_variance);
  } else {
    // The a axis fixes the correlation directly, so A is not needed.
    Common local = c;
    const bool rate_unused = s.axis == "a" && !c.diffusion_rate && c.config.empty();
    if (rate_unused) local.diffusion_rate = 0.0;
    cfg = resolve_config(local);
    if (rate_unused) defaults["diffusion_rate_unused"] = true;
    if (s.axis == "a") {
      int pts = points(101);
      r = correlation_sweep(cfg.field, linspace(0.0, 1.0, pts), s.n_total);
      defaults.update({{"a_lo", 0.0}, {"a_hi", 1.0}, {"grid_points", pts}});
    } else if (s.axis == "n") {
      std::vector<int> ns;
      for (int n = 10; n <= 100; n += 10) ns.push_back(n);
      r = field_size_sweep(cfg.field, s.field_length, ns);
      defaults = {{"field_length", s.field_length}, {"n_grid", ns}};
    } else if (s.axis == "cluster") {
      std::vector<int> sizes = s.sizes;
      if (sizes.empty())
        for (int m = 1; m <= std::min(10, s.n_total); ++m)
          if (s.n_total % m == 0) sizes.push_back(m);
      r = cluster_size_sweep(cfg.field, s.field_length, s.n_total, sizes);
      defaults = {{"field_length", s.field_length}, {"sizes", sizes}};
    } else if (s.axis == "delta1") {
      if (s.m != 0 && s.m != 2) throw ConfigError("--axis delta1 requires --m 2");
      double period = s.period > 0 ? s.period : 0.02;
      int pts = points(101);
      r = offset_sweep_m2(cfg.field, period, pts, s.n_total);
      defaults = {{"m", 2}, {"period", period}, {"grid_points", pts}};
    } else if (s.axis == "x2x3") {
      if (s.m != 0 && s.m != 3) throw ConfigError("--axis x2x3 requires --m 3");
      double period = s.period > 0 ? s.period : 0.03;
      int pts = points(61);
      r = offset_sweep_m3(cfg.field, period, pts, s.n_total);
      defaults = {{"m", 3}, {"period", period}, {"grid_points", pts}};
    } else {
      throw ConfigError("unknown sweep axis '" + s.axis + "'");
    }
  }
  if (c.format == "csv") {
    Output out(c.out);
    write_csv(out.stream(), r);
    return kOk;
  }
  json m = base_metadata("sweep", c, cfg);
  if (s.axis == "snr") m.erase("params");
  defaults["n_total"] = s.n_total;
  m["defaults"] = defaults;
  emit_json(c, m, to_json(r));
  return kOk;
}

struct McArgs {
  std::vector<double> alphas;
  long trials = 0;
  std::uint64_t seed = 0;
  std::vector<int> n_values;
  int n_max = 0;
  double tolerance = 0;
};

// Flag > config > library default.
ValidationOptions mc_options(const Common& c, const ExperimentConfig& cfg, const McArgs& a) {
  ValidationOptions v;
  const RunOptions& o = cfg.options;
  if (!a.alphas.empty())
    v.alphas = a.alphas;
  else if (o.alphas)
    v.alphas = *o.alphas;
  v.mc.trials = a.trials > 0 ? a.trials : o.trials.value_or(v.mc.trials);
  v.mc.seed = a.seed > 0 ? a.seed : o.seed.value_or(v.mc.seed);
  v.mc.threads = c.threads > 0 ? c.threads : o.threads.value_or(0);
  v.n_max = a.n_max > 0 ? a.n_max : o.n_max.value_or(v.n_max);
  v.tolerance = a.tolerance > 0 ? a.tolerance : o.tolerance.value_or(v.tolerance);
  if (!a.n_values.empty())
    v.n_values = a.n_values;
  else if (o.n_values)
    v.n_values = *o.n_values;
  if (const auto* k = cfg.layout ? std::get_if<ClusteredLayout>(&*cfg.layout) : nullptr)
    v.granularity = k->cluster_size;
  else if (const auto* p = cfg.layout ? std::get_if<PeriodicLayout>(&*cfg.layout) : nullptr)
    v.granularity = p->sensors_per_period();
  return v;
}

json mc_metadata(const ValidationOptions& v, const std::vector<int>& grid) {
  return {{"alphas", v.alphas},          {"trials", v.mc.trials},
          {"seed", v.mc.seed},           {"n_values", grid},
          {"n_max", v.n_max},            {"tolerance", v.tolerance},
          {"polynomial_slope", v.polynomial_slope},
          {"polynomial_tolerance", v.polynomial_tolerance},
          {"min_misses_for_fit", v.mc.min_misses_for_fit},
          {"threshold", "empirical (1 - alpha) quantile of H0 LLR"},
          {"rate_fit", "OLS of -ln P_M + z_{1-alpha} sd_H0(LLR) - 0.5 ln n on n"}};
}

int run_simulate(const Common& c, const McArgs& a) {
  ExperimentConfig cfg = resolve_config(c);
  if (!cfg.layout) throw ConfigError("simulate needs a layout (config 'layout' or --layout)");
  ValidationOptions v = mc_options(c, cfg, a);
  ExponentResult k = exponent(cfg.field, *cfg.layout);
  std::vector<int> grid = v.n_values.empty() ? default_validation_grid(k.exponent_per_sensor, v) : v.n_values;
  std::vector<DetectionEstimate> est =
      estimate_miss_probability(cfg.field, family_for(*cfg.layout), v.alphas, grid, v.mc);
  if (c.format == "csv") {
    Output out(c.out);
    write_csv(out.stream(), est);
    return kOk;
  }
  json m = base_metadata("simulate", c, cfg);
  m["defaults"] = mc_metadata(v, grid);
  json arr = json::array();
  for (const auto& e : est) arr.push_back(to_json(e));
  emit_json(c, m, {{"closed_form_per_sensor", k.exponent_per_sensor}, {"estimates", arr}});
  return kOk;
}

int run_validate(const Common& c, const McArgs& a) {
  ExperimentConfig cfg = resolve_config(c);
  if (!cfg.layout) throw ConfigError("validate needs a layout (config 'layout' or --layout)");
  ValidationOptions v = mc_options(c, cfg, a);
  ExponentResult k = exponent(cfg.field, *cfg.layout);
  std::vector<int> grid = v.n_values.empty() ? default_validation_grid(k.exponent_per_sensor, v) : v.n_values;
  v.n_values = grid;
  ValidationReport rep = validate_exponent(cfg.field, family_for(*cfg.layout), k, v);
  if (c.format == "csv") {
    Output out(c.out);
    write_csv(out.stream(), rep.estimates);
  } else {
    json m = base_metadata("validate", c, cfg);
    m["defaults"] = mc_metadata(v, grid);
    emit_json(c, m, to_json(rep));
  }
  return rep.passed ? kOk : kCheckFailed;
}

int report_error(int code, const std::string& type, const std::string& message,
                 json extra = json::object()) {
  json e{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
  for (auto& [key, value] : extra.items()) e["error"][key] = value;
  std::cerr << e.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection exponents for correlated random fields"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  OptimizeArgs opt;
  SweepArgs sweep;
  McArgs mc;

  auto* cmd_exp = app.add_subcommand("exponent", "closed-form error exponent of a layout");
  add_common(cmd_exp, common, true);
  cmd_exp->add_option("--period", common.period, "cluster period");

  auto* cmd_opt = app.add_subcommand("optimize", "optimal correlation and spacing for SNR < 1");
  add_common(cmd_opt, common, false);
  cmd_opt->add_option("--snr-db-grid", opt.snr_db_grid, "list of SNRs in dB for a spacing curve");

  auto* cmd_sweep = app.add_subcommand("sweep", "exponent over a parameter grid");
  add_common(cmd_sweep, common, false);
  cmd_sweep->add_option("--axis", sweep.axis, "a | snr | n | cluster | delta1 | x2x3")
      ->required()
      ->check(CLI::IsMember({"a", "snr", "n", "cluster", "delta1", "x2x3"}));
  cmd_sweep->add_option("--m", sweep.m, "sensors per period (delta1: 2, x2x3: 3)");
  cmd_sweep->add_option("--period", sweep.period, "period for offset sweeps");
  cmd_sweep->add_option("--grid-points", sweep.grid_points, "points per grid axis");
  cmd_sweep->add_option("--n-total", sweep.n_total, "total sensors")->capture_default_str();
  cmd_sweep->add_option("--field-length", sweep.field_length, "field length for n and cluster axes")
      ->capture_default_str();
  cmd_sweep->add_option("--a", sweep.a, "correlation for the snr axis")->capture_default_str();
  cmd_sweep->add_option("--sizes", sweep.sizes, "cluster sizes, default divisors of n-total up to 10");
  cmd_sweep->add_option("--lo", sweep.lo, "snr axis lower end, dB");
  cmd_sweep->add_option("--hi", sweep.hi, "snr axis upper end, dB");

  auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo miss probability vs n");
  auto* cmd_val = app.add_subcommand("validate", "Monte Carlo check of the closed-form exponent");
  for (auto* cmd : {cmd_sim, cmd_val}) {
    add_common(cmd, common, true);
    cmd->add_option("--period", common.period, "cluster period");
    cmd->add_option("--alpha", mc.alphas, "test sizes");
    cmd->add_option("--trials", mc.trials, "trials per hypothesis and n");
    cmd->add_option("--seed", mc.seed, "master seed");
    cmd->add_option("--n-values", mc.n_values, "explicit n grid");
    cmd->add_option("--n-max", mc.n_max, "largest n of the automatic grid");
    cmd->add_option("--tolerance", mc.tolerance, "relative tolerance on the fitted rate");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(kInvalid, "usage", e.what());
  }

  try {
    if (*cmd_exp) return run_exponent(common);
    if (*cmd_opt) return run_optimize(common, opt);
    if (*cmd_sweep) return run_sweep(common, sweep);
    if (*cmd_sim) return run_simulate(common, mc);
    if (*cmd_val) return run_validate(common, mc);
  } catch (const RootNotFound& e) {
    return report_error(kNumeric, "root_not_found", e.what(),
                        {{"grid_points", e.grid().size()}});
  } catch (const NumericFailure& e) {
    return report_error(kNumeric, "numeric_failure", e.what(),
                        {{"last_residual", e.last_residual()}});
  } catch (const InternalConsistencyError& e) {
    return report_error(kNumeric, "internal_consistency", e.what());
  } catch (const ConfigError& e) {
    return report_error(kInvalid, "config", e.what());
  } catch (const InvalidArgument& e) {
    return report_error(kInvalid, "invalid_argument", e.what());
  } catch (const DomainError& e) {
    return report_error(kInvalid, "domain", e.what());
  } catch (const std::exception& e) {
    return report_error(kNumeric, "unexpected", e.what());
  }
  return kInvalid;
}
