#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrdet/exponent.hpp"
#include "corrdet/field_model.hpp"

namespace corrdet {

/// Time-varying H1 Kalman predictor for a fixed layout.
///
/// Gains and innovations variances do not depend on the data, so they are
/// computed once; `llr` then costs O(n) per observation vector.
class InnovationsFilter {
 public:
  InnovationsFilter(const FieldParams& params, const SensorLayout& layout);

  int size() const { return static_cast<int>(r_e_.size()); }

  // ln p(y | H1) - ln p(y | H0).
  double llr(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  const Eigen::VectorXd& innovation_variances() const { return r_e_; }
  const Eigen::VectorXd& gap_correlations() const { return a_; }
  // sqrt(Pi0 (1 - a_i^2)), the field innovation scale across gap i
  const Eigen::VectorXd& drive_scales() const { return drive_; }

  // -1/2 sum ln(R_{e,i} / sigma^2): the LLR of the all-zero observation.
  double log_normalizer() const { return log_norm_.sum(); }

  // Single H0 or H1 draw fused with the LLR update; draw order matches
  // sample_observations for the same seed.
  double simulate_llr(Hypothesis hypothesis, std::uint64_t seed) const;

 private:
  FieldParams params_;
  Eigen::VectorXd a_;         // n - 1
  Eigen::VectorXd drive_;     // n - 1
  Eigen::VectorXd r_e_;       // n
  Eigen::VectorXd gain_;      // n - 1
  Eigen::VectorXd log_norm_;  // n
};

/// LLR through the Kalman innovations of the H1 model.
double llr_innovations(const FieldParams& params, const SensorLayout& layout,
                       const Eigen::Ref<const Eigen::VectorXd>& observations);

/// LLR from the dense covariances Sigma_1 = C + sigma^2 I and Sigma_0 = sigma^2 I
/// via a Cholesky factorization.  Limited to n <= 2000.
double llr_direct(const FieldParams& params, const SensorLayout& layout,
                  const Eigen::Ref<const Eigen::VectorXd>& observations);

// ---------------------------------------------------------------------------

// Layout with exactly n sensors.
using LayoutFamily = std::function<SensorLayout(int n)>;

LayoutFamily uniform_family(double spacing);
// n must be a multiple of cluster_size.
LayoutFamily clustered_family(int cluster_size, double period);
// n must be a multiple of offsets.size().
LayoutFamily periodic_family(std::vector<double> offsets);
// All n sensors at one point.
LayoutFamily colocated_family();

struct MonteCarloOptions {
  long trials = 100000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: CORRDET_THREADS, else hardware concurrency
  double min_misses_for_fit = 50;
};

int resolve_threads(int requested);

struct MissEstimate {
  double estimate = 0;
  double ci_half_width = 0;  // binomial 95%; one-sided 3/trials when no misses
  long misses = 0;
  bool one_sided = false;
};

struct RateFit {
  bool valid = false;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> n_used;
  std::string note;
};

/// Monte Carlo miss probability of the size-alpha NP detector vs n.
///
/// For each n the threshold is the empirical (1 - alpha) quantile of the H0
/// LLR over `trials` runs, and P_M is the fraction of H1 runs whose LLR does
/// not exceed it.
///
/// `fit` is the decay rate from regressing
///   -ln P_M + z_{1-alpha} sd(LLR_n | H0) - (1/2) ln n
/// on n, which removes the sqrt(n) and log n terms that separate -ln P_M
/// from n K at fixed size.  `plain_fit` regresses -ln P_M alone.  Both use
/// the upper half (at least 3) of the n values with P_M trials >= 50.
/// `loglog_fit` regresses ln P_M on ln n over all such points.
struct DetectionEstimate {
  double alpha = 0;
  long trials = 0;
  std::vector<int> n_values;
  std::vector<double> threshold_per_n;
  std::vector<MissEstimate> miss_prob;
  std::vector<double> h0_llr_mean;
  std::vector<double> h0_llr_sd;
  RateFit fit;
  RateFit plain_fit;
  RateFit loglog_fit;

  double fitted_rate() const { return fit.slope; }
};

DetectionEstimate estimate_miss_probability(const FieldParams& params, const LayoutFamily& family,
                                            double alpha, const std::vector<int>& n_values,
                                            const MonteCarloOptions& opts = {});

// Several sizes sharing one set of simulated LLRs.
std::vector<DetectionEstimate> estimate_miss_probability(const FieldParams& params,
                                                         const LayoutFamily& family,
                                                         const std::vector<double>& alphas,
                                                         const std::vector<int>& n_values,
                                                         const MonteCarloOptions& opts = {});

// Fraction of fresh H0 runs whose LLR exceeds `threshold`.
double empirical_false_alarm(const FieldParams& params, const SensorLayout& layout,
                             double threshold, long trials, std::uint64_t seed, int threads = 0);

// ---------------------------------------------------------------------------

struct ValidationOptions {
  std::vector<double> alphas{0.05, 0.2};
  MonteCarloOptions mc;
  int n_max = 300;
  int granularity = 1;          // n values are multiples of this
  std::vector<int> n_values;    // explicit grid; empty picks one automatically
  double tolerance = 0.2;       // relative, exponential regime
  double polynomial_slope = -0.5;
  double polynomial_tolerance = 0.15;
};

struct AlphaCheck {
  double alpha = 0;
  double fitted_rate = 0;
  double std_error = 0;
  double relative_deviation = 0;
  double loglog_slope = 0;
  bool passed = false;
};

enum class DecayRegime { Exponential, Polynomial };

struct ValidationReport {
  DecayRegime regime = DecayRegime::Exponential;
  double closed_form = 0;  // per sensor
  std::vector<AlphaCheck> checks;
  std::vector<DetectionEstimate> estimates;
  bool alpha_independent = true;
  double alpha_difference = 0;
  double alpha_allowance = 0;  // 1.96 (se_1 + se_2)
  bool passed = false;
  std::vector<std::string> failures;
};

/// Compares the Monte Carlo decay with a closed-form exponent.
///
/// Exponential regime: each alpha's fitted rate must be within `tolerance`
/// (relative) of the closed form, and the 95% confidence intervals of the
/// first two alphas must overlap.  A zero closed form routes to the
/// polynomial regime: the log-log slope must be within
/// `polynomial_tolerance` of `polynomial_slope`.
ValidationReport validate_exponent(const FieldParams& params, const LayoutFamily& family,
                                   const ExponentResult& closed_form,
                                   const ValidationOptions& opts = {});

// Default n grid for validate_exponent.
std::vector<int> default_validation_grid(double closed_form, const ValidationOptions& opts);

std::string_view regime_name(DecayRegime r);

}  // namespace corrdet
