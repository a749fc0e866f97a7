#include "corrdet/exponent.hpp"

#include <cmath>

namespace corrdet {

std::string_view method_name(ExponentMethod m) {
  switch (m) {
    case ExponentMethod::Scalar: return "scalar";
    case ExponentMethod::PerfectCorrelation: return "perfect_correlation";
    case ExponentMethod::Clustering: return "clustering";
    case ExponentMethod::Vector: return "vector";
  }
  return "unknown";
}

double clamp_exponent(double k) {
  if (std::isnan(k)) throw NumericFailure("exponent is NaN", k);
  if (k >= 0.0) return k;
  if (k > -1e-12) return 0.0;
  throw NumericFailure("negative error exponent", k);
}

ExponentResult scalar_exponent_at(const FieldParams& params, CorrelationCoefficient a,
                                  const SolverOptions& opts) {
  params.validate();
  ExponentResult out;
  out.params_echo = params;
  out.sensors_per_block = 1;
  if (a.value() == 1.0) {
    const double s2 = params.noise_variance;
    out.method = ExponentMethod::PerfectCorrelation;
    out.innovations = ScalarInnovations{0.0, s2, 0.0, s2, 0.0, 0, 0.0};
    return out;
  }
  const ScalarInnovations inn = scalar_riccati_fixed_point(params, a, opts);
  const double s2 = params.noise_variance;
  // 1/2 log(R_e / s2) + 1/2 (R~_e - R_e) / R_e, rearranged to avoid cancellation
  const double k = 0.5 * std::log1p(inn.p / s2) - 0.5 * (inn.p - s2 * inn.p_tilde) / inn.r_e;
  out.exponent_per_sensor = out.exponent_per_block = clamp_exponent(k);
  out.method = ExponentMethod::Scalar;
  out.innovations = inn;
  return out;
}

ExponentResult scalar_exponent(const FieldParams& params, double spacing,
                               const SolverOptions& opts) {
  ExponentResult out = scalar_exponent_at(params, correlation_from_spacing(params, spacing), opts);
  if (spacing > 0.0 && std::isfinite(spacing)) out.config_echo = UniformLayout{spacing, 1};
  return out;
}

ExponentResult clustering_exponent(const FieldParams& params, const ClusteredLayout& layout,
                                   const SolverOptions& opts) {
  validate(SensorLayout{layout});
  params.validate();
  FieldParams averaged = params;
  averaged.noise_variance = params.noise_variance / layout.cluster_size;
  ExponentResult out = scalar_exponent(averaged, layout.period, opts);
  out.exponent_per_block = out.exponent_per_sensor;
  out.exponent_per_sensor = out.exponent_per_block / layout.cluster_size;
  out.sensors_per_block = layout.cluster_size;
  if (out.method == ExponentMethod::Scalar) out.method = ExponentMethod::Clustering;
  out.config_echo = layout;
  out.params_echo = params;
  return out;
}

ExponentResult vector_exponent(const FieldParams& params, const PeriodicLayout& layout,
                               const SolverOptions& opts) {
  validate(SensorLayout{layout});
  const StateSpace<double> ss = build_periodic_state_space(params, layout.offsets);
  const RiccatiSolution<double> ric = vector_riccati_solve(ss, params.noise_variance, opts);
  const LyapunovSolution<double> lyap = vector_lyapunov_solve(ss, ric, params.noise_variance);

  ExponentResult out;
  out.params_echo = params;
  out.config_echo = layout;
  out.method = ExponentMethod::Vector;
  out.sensors_per_block = layout.sensors_per_period();
  out.exponent_per_block =
      clamp_exponent(innovations_exponent(ric.r_e, lyap.r_e_tilde, params.noise_variance));
  out.exponent_per_sensor = out.exponent_per_block / out.sensors_per_block;

  MatrixInnovations inn;
  inn.p = ric.p;
  inn.r_e = ric.r_e;
  inn.gain = ric.gain;
  inn.p_tilde = lyap.p_tilde;
  inn.r_e_tilde = lyap.r_e_tilde;
  inn.closed_loop_radius = ric.closed_loop_radius;
  inn.riccati_iterations = ric.iterations;
  inn.riccati_residual = ric.residual;
  inn.lyapunov_residual = lyap.residual;
  out.innovations = std::move(inn);
  return out;
}

ExponentResult exponent(const FieldParams& params, const SensorLayout& layout,
                        const SolverOptions& opts) {
  validate(layout);
  if (const auto* u = std::get_if<UniformLayout>(&layout)) {
    ExponentResult r = scalar_exponent(params, u->spacing, opts);
    r.config_echo = layout;
    return r;
  }
  if (const auto* c = std::get_if<ClusteredLayout>(&layout)) return clustering_exponent(params, *c, opts);
  return vector_exponent(params, std::get<PeriodicLayout>(layout), opts);
}

}  // namespace corrdet
