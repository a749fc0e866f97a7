#pragma once

#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "corrdet/field_model.hpp"
#include "corrdet/riccati.hpp"
#include "corrdet/state_space.hpp"

namespace corrdet {

// Steady-state innovations statistics of the vector (periodic) model.
struct MatrixInnovations {
  Eigen::MatrixXd p;
  Eigen::MatrixXd r_e;
  Eigen::MatrixXd p_tilde;
  Eigen::MatrixXd r_e_tilde;
  Eigen::MatrixXd gain;
  double closed_loop_radius = 0;
  long riccati_iterations = 0;
  double riccati_residual = 0;
  double lyapunov_residual = 0;
};

enum class ExponentMethod { Scalar, PerfectCorrelation, Clustering, Vector };

std::string_view method_name(ExponentMethod m);

/// Large-sample miss-probability decay rate of the size-alpha Neyman-Pearson
/// detector.  `exponent_per_block` is the rate per vector observation
/// (one period of M sensors, or one cluster); `exponent_per_sensor` divides
/// it by M.  Both are natural-log rates.
struct ExponentResult {
  double exponent_per_sensor = 0;
  double exponent_per_block = 0;
  int sensors_per_block = 1;
  ExponentMethod method = ExponentMethod::Scalar;
  std::variant<ScalarInnovations, MatrixInnovations> innovations;
  std::optional<SensorLayout> config_echo;
  FieldParams params_echo;
};

// Values in (-1e-12, 0) are roundoff and become 0; anything more negative
// throws NumericFailure.
double clamp_exponent(double k);

/// Uniform spacing d: K = -1/2 log(sigma^2 / R_e) + 1/2 R~_e / R_e - 1/2.
/// a = 1 (d = 0 or A = 0) returns K = 0 without solving.
ExponentResult scalar_exponent(const FieldParams& params, double spacing,
                               const SolverOptions& opts = {});

// Same, parameterized by the correlation coefficient directly.
ExponentResult scalar_exponent_at(const FieldParams& params, CorrelationCoefficient a,
                                  const SolverOptions& opts = {});

/// Periodic clustering: (1/M) K(period; M * SNR), the SNR gain realized by
/// averaging M co-located readings (noise variance divided by M).
ExponentResult clustering_exponent(const FieldParams& params, const ClusteredLayout& layout,
                                   const SolverOptions& opts = {});

/// Arbitrary periodic layout through the vector Riccati/Lyapunov pair.
ExponentResult vector_exponent(const FieldParams& params, const PeriodicLayout& layout,
                               const SolverOptions& opts = {});

// Dispatch on layout kind.  Uniform count and cluster/period counts do not
// enter the asymptotic rate.
ExponentResult exponent(const FieldParams& params, const SensorLayout& layout,
                        const SolverOptions& opts = {});

}  // namespace corrdet
