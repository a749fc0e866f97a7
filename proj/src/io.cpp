#include "corrdet/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

namespace corrdet {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + "." + key + " is required");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

long integer(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long>();
}

int optional_int(const json& j, const std::string& key, int fallback, const std::string& where) {
  return j.contains(key) ? static_cast<int>(integer(j, key, where)) : fallback;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FieldParams field_params_from_json(const json& j) {
  FieldParams p{number(j, "diffusion_rate", "config"), number(j, "stationary_variance", "config"),
                number(j, "noise_variance", "config")};
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

SensorLayout layout_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("layout must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("layout.kind must be one of uniform, clustered, periodic");
  const std::string kind = j.at("kind").get<std::string>();
  SensorLayout layout;
  if (kind == "uniform") {
    reject_unknown(j, {"kind", "spacing", "count"}, "layout");
    layout = UniformLayout{number(j, "spacing", "layout"), optional_int(j, "count", 1, "layout")};
  } else if (kind == "clustered") {
    reject_unknown(j, {"kind", "cluster_size", "cluster_count", "period"}, "layout");
    if (!j.contains("cluster_size")) throw ConfigError("layout.cluster_size is required");
    layout = ClusteredLayout{static_cast<int>(integer(j, "cluster_size", "layout")),
                             optional_int(j, "cluster_count", 1, "layout"),
                             number(j, "period", "layout")};
  } else if (kind == "periodic") {
    reject_unknown(j, {"kind", "offsets", "period_count"}, "layout");
    if (!j.contains("offsets") || !j.at("offsets").is_array())
      throw ConfigError("layout.offsets must be an array of numbers");
    PeriodicLayout p;
    p.offsets.clear();
    for (const json& v : j.at("offsets")) {
      if (!v.is_number()) throw ConfigError("layout.offsets must be an array of numbers");
      p.offsets.push_back(v.get<double>());
    }
    p.period_count = optional_int(j, "period_count", 1, "layout");
    layout = std::move(p);
  } else {
    throw ConfigError("layout.kind must be one of uniform, clustered, periodic");
  }
  try {
    validate(layout);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return layout;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  reject_unknown(j, {"diffusion_rate", "stationary_variance", "noise_variance", "layout", "options"},
                 "config");
  ExperimentConfig cfg;
  cfg.field = field_params_from_json(j);
  if (j.contains("layout")) cfg.layout = layout_from_json(j.at("layout"));
  if (j.contains("options")) {
    const json& o = j.at("options");
    reject_unknown(o, {"alpha", "trials", "seed", "n_max", "n_values", "tolerance", "threads"},
                   "options");
    RunOptions& r = cfg.options;
    if (o.contains("alpha")) {
      std::vector<double> alphas;
      const json& a = o.at("alpha");
      if (a.is_number()) {
        alphas.push_back(a.get<double>());
      } else if (a.is_array()) {
        for (const json& v : a) {
          if (!v.is_number()) throw ConfigError("options.alpha must be a number or array of numbers");
          alphas.push_back(v.get<double>());
        }
      } else {
        throw ConfigError("options.alpha must be a number or array of numbers");
      }
      for (double v : alphas)
        if (!(v > 0.0 && v < 1.0)) throw ConfigError("options.alpha values must lie in (0, 1)");
      r.alphas = alphas;
    }
    if (o.contains("trials")) r.trials = integer(o, "trials", "options");
    if (o.contains("seed")) {
      if (!o.at("seed").is_number_unsigned()) throw ConfigError("options.seed must be a nonnegative integer");
      r.seed = o.at("seed").get<std::uint64_t>();
    }
    if (o.contains("n_max")) r.n_max = static_cast<int>(integer(o, "n_max", "options"));
    if (o.contains("n_values")) {
      std::vector<int> ns;
      if (!o.at("n_values").is_array()) throw ConfigError("options.n_values must be an array of integers");
      for (const json& v : o.at("n_values")) {
        if (!v.is_number_integer()) throw ConfigError("options.n_values must be an array of integers");
        ns.push_back(v.get<int>());
      }
      r.n_values = ns;
    }
    if (o.contains("tolerance")) r.tolerance = number(o, "tolerance", "options");
    if (o.contains("threads")) r.threads = static_cast<int>(integer(o, "threads", "options"));
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------

json to_json(const FieldParams& p) {
  return {{"diffusion_rate", p.diffusion_rate},
          {"stationary_variance", p.stationary_variance},
          {"noise_variance", p.noise_variance},
          {"snr", p.snr()}};
}

json to_json(const SensorLayout& layout) {
  json j;
  j["kind"] = std::string(kind_name(layout));
  if (const auto* u = std::get_if<UniformLayout>(&layout)) {
    j["spacing"] = u->spacing;
    j["count"] = u->count;
  } else if (const auto* c = std::get_if<ClusteredLayout>(&layout)) {
    j["cluster_size"] = c->cluster_size;
    j["cluster_count"] = c->cluster_count;
    j["period"] = c->period;
  } else {
    const auto& p = std::get<PeriodicLayout>(layout);
    j["offsets"] = p.offsets;
    j["period_count"] = p.period_count;
  }
  return j;
}

json to_json(const ExponentResult& r) {
  json j;
  j["exponent_per_sensor"] = r.exponent_per_sensor;
  j["exponent_per_block"] = r.exponent_per_block;
  j["sensors_per_block"] = r.sensors_per_block;
  j["method"] = std::string(method_name(r.method));
  if (const auto* s = std::get_if<ScalarInnovations>(&r.innovations)) {
    j["innovations"] = {{"type", "scalar"},       {"p", s->p},
                        {"r_e", s->r_e},          {"p_tilde", s->p_tilde},
                        {"r_e_tilde", s->r_e_tilde}, {"gain", s->gain},
                        {"iterations", s->iterations}, {"residual", s->residual}};
  } else {
    const auto& m = std::get<MatrixInnovations>(r.innovations);
    j["innovations"] = {{"type", "matrix"},
                        {"p", matrix_json(m.p)},
                        {"r_e", matrix_json(m.r_e)},
                        {"p_tilde", matrix_json(m.p_tilde)},
                        {"r_e_tilde", matrix_json(m.r_e_tilde)},
                        {"gain", matrix_json(m.gain)},
                        {"closed_loop_radius", m.closed_loop_radius},
                        {"riccati_iterations", m.riccati_iterations},
                        {"riccati_residual", m.riccati_residual},
                        {"lyapunov_residual", m.lyapunov_residual}};
  }
  j["params"] = to_json(r.params_echo);
  j["layout"] = r.config_echo ? to_json(*r.config_echo) : json(nullptr);
  return j;
}

json to_json(const OptimalSpacingResult& r) {
  return {{"snr", r.snr},
          {"snr_db", linear_to_db(r.snr)},
          {"a_star", r.a_star},
          {"delta_star", finite_or_null(r.delta_star)},
          {"residual", r.residual},
          {"exponent_at_optimum", r.exponent_at_optimum},
          {"grid_argmax", r.grid_argmax},
          {"grid_step", r.grid_step}};
}

json to_json(const SweepResult& s) {
  json j;
  j["axis"] = s.axis;
  j["coord_names"] = s.coord_names;
  j["n_total"] = s.n_total;
  j["params"] = to_json(s.params);
  json values = json::array();
  for (const SweepPoint& p : s.values)
    values.push_back({{"coords", p.coords},
                      {"k_per_sensor", p.k_per_sensor},
                      {"k_per_block", p.k_per_block},
                      {"approx_miss_prob", p.approx_miss_prob}});
  j["values"] = std::move(values);
  j["argmax"] = {{"index", s.argmax}, {"coords", s.best().coords},
                 {"k_per_sensor", s.best().k_per_sensor}};
  j["classification"] = s.classification.empty() ? json(nullptr) : json(s.classification);
  return j;
}

namespace {

json fit_json(const RateFit& f) {
  return {{"valid", f.valid},
          {"slope", finite_or_null(f.slope)},
          {"std_error", finite_or_null(f.std_error)},
          {"intercept", finite_or_null(f.intercept)},
          {"n_used", f.n_used},
          {"note", f.note}};
}

}  // namespace

json to_json(const DetectionEstimate& e) {
  json points = json::array();
  for (std::size_t i = 0; i < e.n_values.size(); ++i) {
    const MissEstimate& m = e.miss_prob[i];
    points.push_back({{"n", e.n_values[i]},
                      {"threshold", e.threshold_per_n[i]},
                      {"misses", m.misses},
                      {"miss_prob", m.estimate},
                      {"ci_half_width", m.ci_half_width},
                      {"one_sided", m.one_sided},
                      {"h0_llr_mean", e.h0_llr_mean[i]},
                      {"h0_llr_sd", e.h0_llr_sd[i]}});
  }
  return {{"alpha", e.alpha},
          {"trials", e.trials},
          {"points", std::move(points)},
          {"fitted_rate", finite_or_null(e.fitted_rate())},
          {"fit", fit_json(e.fit)},
          {"plain_fit", fit_json(e.plain_fit)},
          {"loglog_fit", fit_json(e.loglog_fit)}};
}

json to_json(const ValidationReport& r) {
  json checks = json::array();
  for (const AlphaCheck& c : r.checks)
    checks.push_back({{"alpha", c.alpha},
                      {"fitted_rate", finite_or_null(c.fitted_rate)},
                      {"std_error", finite_or_null(c.std_error)},
                      {"relative_deviation", finite_or_null(c.relative_deviation)},
                      {"loglog_slope", finite_or_null(c.loglog_slope)},
                      {"passed", c.passed}});
  json estimates = json::array();
  for (const DetectionEstimate& e : r.estimates) estimates.push_back(to_json(e));
  return {{"regime", std::string(regime_name(r.regime))},
          {"closed_form_per_sensor", r.closed_form},
          {"checks", std::move(checks)},
          {"alpha_independent", r.alpha_independent},
          {"alpha_difference", finite_or_null(r.alpha_difference)},
          {"alpha_allowance", finite_or_null(r.alpha_allowance)},
          {"passed", r.passed},
          {"failures", r.failures},
          {"estimates", std::move(estimates)}};
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& os, const SweepResult& s) {
  for (const std::string& name : s.coord_names) os << name << ',';
  os << "K_per_sensor,K_per_block,approx_miss_prob,is_argmax\n";
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const SweepPoint& p = s.values[i];
    for (double c : p.coords) os << fmt(c) << ',';
    os << fmt(p.k_per_sensor) << ',' << fmt(p.k_per_block) << ',' << fmt(p.approx_miss_prob) << ','
       << (i == s.argmax ? 1 : 0) << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<DetectionEstimate>& estimates) {
  os << "alpha,n,threshold,misses,trials,miss_prob,ci_half_width,one_sided,h0_llr_mean,h0_llr_sd\n";
  for (const DetectionEstimate& e : estimates)
    for (std::size_t i = 0; i < e.n_values.size(); ++i) {
      const MissEstimate& m = e.miss_prob[i];
      os << fmt(e.alpha) << ',' << e.n_values[i] << ',' << fmt(e.threshold_per_n[i]) << ','
         << m.misses << ',' << e.trials << ',' << fmt(m.estimate) << ',' << fmt(m.ci_half_width)
         << ',' << (m.one_sided ? 1 : 0) << ',' << fmt(e.h0_llr_mean[i]) << ','
         << fmt(e.h0_llr_sd[i]) << '\n';
    }
}

void write_csv(std::ostream& os, const std::vector<OptimalSpacingResult>& curve) {
  os << "snr_db,snr,a_star,delta_star,exponent_at_optimum,residual,grid_argmax\n";
  for (const OptimalSpacingResult& r : curve)
    os << fmt(linear_to_db(r.snr)) << ',' << fmt(r.snr) << ',' << fmt(r.a_star) << ','
       << fmt(r.delta_star) << ',' << fmt(r.exponent_at_optimum) << ',' << fmt(r.residual) << ','
       << fmt(r.grid_argmax) << '\n';
}

void write_csv(std::ostream& os, const ExponentResult& r) {
  os << "method,sensors_per_block,K_per_sensor,K_per_block\n"
     << method_name(r.method) << ',' << r.sensors_per_block << ',' << fmt(r.exponent_per_sensor)
     << ',' << fmt(r.exponent_per_block) << '\n';
}

}  // namespace corrdet
