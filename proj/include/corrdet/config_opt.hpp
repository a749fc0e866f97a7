#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "corrdet/exponent.hpp"
#include "corrdet/field_model.hpp"

namespace corrdet {

struct OptimalSpacingResult {
  double snr = 0;
  double a_star = 0;
  double delta_star = 0;  // -ln(a_star) / A; +inf when A = 0
  double residual = 0;    // optimality equation evaluated at a_star
  double exponent_at_optimum = 0;
  double grid_argmax = 0;  // argmax of K over the cross-check grid
  double grid_step = 0;
};

/// Left-hand side of the stationarity condition for the optimal correlation,
///   g(a) = [1 + a^2 + SNR (1 - a^2)]^2 - 2 (r_e + a^4 / r_e),
/// with r_e = R_e / sigma^2 the normalized steady-state innovations variance.
double optimal_correlation_equation(const FieldParams& params, double a);

/// Correlation a* in (0, 1) maximizing the uniform-layout exponent for SNR < 1.
///
/// Brackets the first sign change of g from below on a grid that is dense
/// toward a = 1 (g(1) = 0 for every SNR, a spurious root), bisects, then
/// cross-checks against the argmax of K on a step-1e-3 grid.  Disagreement
/// raises NumericFailure instead of returning a wrong optimum.
OptimalSpacingResult optimal_correlation(const FieldParams& params);

// optimal_correlation plus delta* = -ln(a*) / A; requires A > 0.
OptimalSpacingResult optimal_spacing(const FieldParams& params);

// Optimal spacing over a list of SNRs (dB) at fixed A and Pi0.
std::vector<OptimalSpacingResult> optimal_spacing_curve(double diffusion_rate,
                                                        const std::vector<double>& snr_db,
                                                        double stationary_variance = 1.0);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepPoint {
  std::vector<double> coords;
  double k_per_sensor = 0;
  double k_per_block = 0;
  double approx_miss_prob = 0;  // exp(-n_total * k_per_sensor)
};

struct SweepResult {
  std::string axis;
  std::vector<std::string> coord_names;
  std::vector<SweepPoint> values;
  std::size_t argmax = 0;
  std::string classification;  // empty unless the axis has a taxonomy
  int n_total = 0;
  FieldParams params;

  const SweepPoint& best() const { return values.at(argmax); }
};

// Index of the largest value.  Values within 1e-9 (relative) of the maximum
// are ties and resolve to the lowest index, i.e. the smallest coordinate.
std::size_t tie_broken_argmax(const std::vector<double>& values);

// Exponent vs correlation coefficient on the given grid.
SweepResult correlation_sweep(const FieldParams& params, const std::vector<double>& a_grid,
                              int n_total = 100);

// Exponent vs SNR (linear) at fixed correlation.
SweepResult snr_sweep(double a, const std::vector<double>& snr_grid, int n_total = 100,
                      double stationary_variance = 1.0);

/// Uniform layouts of n sensors covering a field of length `field_length`
/// (spacing field_length / n).  Records K(n), and exp(-n K(n)).
SweepResult field_size_sweep(const FieldParams& params, double field_length,
                             const std::vector<int>& n_grid);

/// Periodic clustering with n_total sensors over `field_length`: cluster
/// period field_length / (n_total / M) for each M in `sizes`.
SweepResult cluster_size_sweep(const FieldParams& params, double field_length, int n_total,
                               const std::vector<int>& sizes);

/// M = 2: first gap D1 over [0, period] on `grid_points` points, second gap
/// period - D1.  Classification: clustering / uniform / intermediate.
SweepResult offset_sweep_m2(const FieldParams& params, double period, int grid_points,
                            int n_total = 100);

/// M = 3: positions (0, x2, x3) with (x2, x3) over [0, period]^2, row-major
/// in x2.  Classification: clustering / two_plus_one / two_plus_one_offcenter /
/// uniform / irregular.
SweepResult offset_sweep_m3(const FieldParams& params, double period, int grid_points,
                            int n_total = 100);

// Sorted circular gaps of sensors at 0, x2, x3 within one period.
std::vector<double> m3_offsets(double x2, double x3, double period);

std::string classify_m2(double d1, double period, double tol);
std::string classify_m3(double x2, double x3, double period, double tol);

std::vector<double> linspace(double lo, double hi, int count);

}  // namespace corrdet
