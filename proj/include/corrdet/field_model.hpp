#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "corrdet/errors.hpp"

namespace corrdet {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Stationary Ornstein-Uhlenbeck field observed in white Gaussian noise.
///
/// `diffusion_rate` is the decay rate A of the spatial correlation
/// (correlation e^{-A d} over distance d), `stationary_variance` the signal
/// power and `noise_variance` the per-sensor measurement noise power.
template <typename Scalar>
struct BasicFieldParams {
  Scalar diffusion_rate{0};
  Scalar stationary_variance{1};
  Scalar noise_variance{1};

  Scalar snr() const { return stationary_variance / noise_variance; }

  void validate() const {
    using std::isfinite;
    if (!(diffusion_rate >= Scalar(0)) || !isfinite(diffusion_rate))
      throw InvalidArgument("diffusion_rate must be finite and >= 0");
    if (!(stationary_variance > Scalar(0)) || !isfinite(stationary_variance))
      throw InvalidArgument("stationary_variance must be finite and > 0");
    if (!(noise_variance > Scalar(0)) || !isfinite(noise_variance))
      throw InvalidArgument("noise_variance must be finite and > 0");
  }

  // A = 0: every pair of samples is perfectly correlated.
  bool perfectly_correlated() const { return diffusion_rate == Scalar(0); }

  template <typename Other>
  BasicFieldParams<Other> cast() const {
    return {Other(diffusion_rate), Other(stationary_variance), Other(noise_variance)};
  }
};

using FieldParams = BasicFieldParams<double>;

// Validated construction.
FieldParams make_field_params(double diffusion_rate, double stationary_variance,
                              double noise_variance);

// Noise variance chosen so that stationary_variance / noise_variance equals
// 10^(snr_db / 10).
FieldParams field_params_from_snr_db(double diffusion_rate, double snr_db,
                                     double stationary_variance = 1.0);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Correlation between two field samples, a = e^{-A d}, in [0, 1].
template <typename Scalar>
class BasicCorrelationCoefficient {
 public:
  explicit BasicCorrelationCoefficient(Scalar value) : value_(value) {
    if (!(value >= Scalar(0) && value <= Scalar(1)))
      throw InvalidArgument("correlation coefficient must lie in [0, 1]");
  }
  Scalar value() const { return value_; }

 private:
  Scalar value_;
};

using CorrelationCoefficient = BasicCorrelationCoefficient<double>;

template <typename Scalar>
BasicCorrelationCoefficient<Scalar> correlation_from_spacing(
    const BasicFieldParams<Scalar>& params, Scalar spacing) {
  using std::exp;
  if (!(spacing >= Scalar(0))) throw InvalidArgument("spacing must be >= 0");
  // Zero diffusion keeps a = 1 even for infinite spacing (0 * inf is NaN).
  if (params.diffusion_rate == Scalar(0)) return BasicCorrelationCoefficient<Scalar>(Scalar(1));
  return BasicCorrelationCoefficient<Scalar>(exp(-params.diffusion_rate * spacing));
}

// ---------------------------------------------------------------------------
// Sensor layouts

/// n sensors at 0, d, 2d, ...
struct UniformLayout {
  double spacing{1};
  int count{1};
};

/// N clusters of M co-located sensors, clusters `period` apart.
struct ClusteredLayout {
  int cluster_size{1};
  int cluster_count{1};
  double period{1};
};

/// M sensors per period with consecutive gaps offsets[0..M-1] (the last gap
/// closes the period), repeated `period_count` times.
struct PeriodicLayout {
  std::vector<double> offsets{1.0};
  int period_count{1};

  double period() const;
  int sensors_per_period() const { return static_cast<int>(offsets.size()); }
};

using SensorLayout = std::variant<UniformLayout, ClusteredLayout, PeriodicLayout>;

// Throws InvalidArgument when a layout violates its invariants.
void validate(const SensorLayout& layout);

std::string_view kind_name(const SensorLayout& layout);
int total_sensors(const SensorLayout& layout);

// Sensor coordinates, nondecreasing, starting at 0.
Eigen::VectorXd positions(const SensorLayout& layout);

// A clustered layout is the periodic layout with offsets [0, ..., 0, period].
PeriodicLayout as_periodic(const ClusteredLayout& layout);

/// Exact covariance of the noiseless field samples: Pi0 * exp(-A |x_i - x_j|).
template <typename Scalar>
MatrixX<Scalar> signal_covariance(const BasicFieldParams<Scalar>& params,
                                  const SensorLayout& layout) {
  using std::abs;
  using std::exp;
  const Eigen::VectorXd x = positions(layout);
  const Eigen::Index n = x.size();
  MatrixX<Scalar> cov(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    cov(j, j) = params.stationary_variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Scalar d = Scalar(abs(x(i) - x(j)));
      const Scalar v = params.diffusion_rate == Scalar(0)
                           ? params.stationary_variance
                           : params.stationary_variance * exp(-params.diffusion_rate * d);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  return cov;
}

enum class Hypothesis { H0, H1 };

/// One realization of the sensor readings.
///
/// H0 gives i.i.d. N(0, sigma^2).  H1 adds the field samples generated by
/// the exact recursion s_{i+1} = a_i s_i + u_i, s_1 ~ N(0, Pi0),
/// u_i ~ N(0, Pi0 (1 - a_i^2)), with a_i the correlation across gap i.
/// Deterministic given `seed`.
Eigen::VectorXd sample_observations(const FieldParams& params, const SensorLayout& layout,
                                    Hypothesis hypothesis, std::uint64_t seed);

// Per-gap correlations a_i = e^{-A (x_{i+1} - x_i)}, length n - 1.
Eigen::VectorXd gap_correlations(const FieldParams& params, const SensorLayout& layout);

}  // namespace corrdet
