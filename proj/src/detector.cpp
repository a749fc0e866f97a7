#include "corrdet/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "corrdet/rng.hpp"

namespace corrdet {

InnovationsFilter::InnovationsFilter(const FieldParams& params, const SensorLayout& layout)
    : params_(params) {
  params.validate();
  a_ = corrdet::gap_correlations(params, layout);
  const Eigen::Index n = a_.size() + 1;
  const double s2 = params.noise_variance;
  const double pi0 = params.stationary_variance;

  drive_.resize(n - 1);
  gain_.resize(n - 1);
  r_e_.resize(n);
  log_norm_.resize(n);
  double p = pi0;
  for (Eigen::Index i = 0; i < n; ++i) {
    r_e_(i) = s2 + p;
    log_norm_(i) = -0.5 * std::log1p(p / s2);
    if (i + 1 < n) {
      const double a = a_(i);
      const double q = std::max(0.0, pi0 * (1.0 - a * a));
      drive_(i) = std::sqrt(q);
      gain_(i) = a * p / r_e_(i);
      p = q + a * a * p * s2 / r_e_(i);
    }
  }
}

double InnovationsFilter::llr(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != r_e_.size())
    throw InvalidArgument("observation length " + std::to_string(y.size()) +
                          " does not match layout size " + std::to_string(r_e_.size()));
  const double inv_s2 = 1.0 / params_.noise_variance;
  double acc = 0.0;
  double predicted = 0.0;
  const Eigen::Index n = r_e_.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = y(i) - predicted;
    acc += log_norm_(i) - 0.5 * e * e / r_e_(i) + 0.5 * y(i) * y(i) * inv_s2;
    if (i + 1 < n) predicted = a_(i) * predicted + gain_(i) * e;
  }
  return acc;
}

double InnovationsFilter::simulate_llr(Hypothesis hypothesis, std::uint64_t seed) const {
  auto gen = make_stream(seed, {static_cast<std::uint64_t>(hypothesis)});
  std::normal_distribution<double> normal;
  const double noise_sd = std::sqrt(params_.noise_variance);
  const double inv_s2 = 1.0 / params_.noise_variance;
  const Eigen::Index n = r_e_.size();
  const bool h1 = hypothesis == Hypothesis::H1;

  double s = h1 ? std::sqrt(params_.stationary_variance) * normal(gen) : 0.0;
  double acc = 0.0;
  double predicted = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (h1 && i > 0) s = a_(i - 1) * s + drive_(i - 1) * normal(gen);
    const double y = s + noise_sd * normal(gen);
    const double e = y - predicted;
    acc += log_norm_(i) - 0.5 * e * e / r_e_(i) + 0.5 * y * y * inv_s2;
    if (i + 1 < n) predicted = a_(i) * predicted + gain_(i) * e;
  }
  return acc;
}

double llr_innovations(const FieldParams& params, const SensorLayout& layout,
                       const Eigen::Ref<const Eigen::VectorXd>& observations) {
  if (observations.size() != total_sensors(layout))
    throw InvalidArgument("observation length does not match layout");
  return InnovationsFilter(params, layout).llr(observations);
}

double llr_direct(const FieldParams& params, const SensorLayout& layout,
                  const Eigen::Ref<const Eigen::VectorXd>& observations) {
  params.validate();
  const int n = total_sensors(layout);
  if (observations.size() != n) throw InvalidArgument("observation length does not match layout");
  if (n > 2000) throw InvalidArgument("llr_direct is limited to n <= 2000");
  const double s2 = params.noise_variance;
  Eigen::MatrixXd sigma1 = signal_covariance(params, layout);
  sigma1.diagonal().array() += s2;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma1);
  if (llt.info() != Eigen::Success)
    throw NumericFailure("Cholesky factorization of the H1 covariance failed", 0.0);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd white = llt.matrixL().solve(observations);
  return -0.5 * (log_det - n * std::log(s2)) - 0.5 * white.squaredNorm() +
         0.5 * observations.squaredNorm() / s2;
}

// ---------------------------------------------------------------------------

LayoutFamily uniform_family(double spacing) {
  return [spacing](int n) { return SensorLayout{UniformLayout{spacing, n}}; };
}

LayoutFamily clustered_family(int cluster_size, double period) {
  return [cluster_size, period](int n) {
    if (n % cluster_size != 0)
      throw InvalidArgument("n is not a multiple of the cluster size");
    return SensorLayout{ClusteredLayout{cluster_size, n / cluster_size, period}};
  };
}

LayoutFamily periodic_family(std::vector<double> offsets) {
  return [offsets = std::move(offsets)](int n) {
    const int m = static_cast<int>(offsets.size());
    if (n % m != 0) throw InvalidArgument("n is not a multiple of the sensors per period");
    return SensorLayout{PeriodicLayout{offsets, n / m}};
  };
}

LayoutFamily colocated_family() {
  return [](int n) { return SensorLayout{ClusteredLayout{n, 1, 1.0}}; };
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CORRDET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs body(i) for i in [0, count) over `threads` workers.  Chunks are
// handed out dynamically; results must be written by index.
template <class Body>
void parallel_for(long count, int threads, Body body) {
  constexpr long kChunk = 2048;
  const long chunks = (count + kChunk - 1) / kChunk;
  const int workers = static_cast<int>(std::min<long>(std::max(1, threads), std::max(1L, chunks)));
  std::atomic<long> next{0};
  auto run = [&] {
    for (long c; (c = next.fetch_add(1)) < chunks;) {
      const long end = std::min(count, (c + 1) * kChunk);
      for (long i = c * kChunk; i < end; ++i) body(i);
    }
  };
  if (workers == 1) {
    run();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
}

std::vector<double> simulate_batch(const InnovationsFilter& filter, Hypothesis h, long trials,
                                   std::uint64_t seed, std::uint64_t key, int threads) {
  std::vector<double> out(trials);
  parallel_for(trials, threads, [&](long t) {
    out[t] = filter.simulate_llr(h, derive_seed(seed, {key, static_cast<std::uint64_t>(t)}));
  });
  return out;
}

struct Ols {
  double slope, intercept, se;
};

Ols least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Ols r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double res = y[i] - r.intercept - r.slope * x[i];
    ssr += res * res;
  }
  r.se = x.size() > 2 ? std::sqrt(ssr / (k - 2.0) / sxx) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

RateFit fit_points(const std::vector<int>& n, const std::vector<double>& x,
                   const std::vector<double>& y) {
  RateFit fit;
  if (x.size() < 3) {
    fit.note = "fewer than 3 usable n values";
    return fit;
  }
  const Ols ols = least_squares(x, y);
  fit.valid = std::isfinite(ols.slope);
  fit.slope = ols.slope;
  fit.intercept = ols.intercept;
  fit.std_error = ols.se;
  fit.n_used = n;
  return fit;
}

double quantile_upper(std::vector<double> sorted_h0, double alpha) {
  // smallest order statistic with at most alpha of the sample above it
  const long t = static_cast<long>(sorted_h0.size());
  long idx = static_cast<long>(std::ceil((1.0 - alpha) * t)) - 1;
  idx = std::clamp(idx, 0L, t - 1);
  return sorted_h0[idx];
}

}  // namespace

std::vector<DetectionEstimate> estimate_miss_probability(const FieldParams& params,
                                                         const LayoutFamily& family,
                                                         const std::vector<double>& alphas,
                                                         const std::vector<int>& n_values,
                                                         const MonteCarloOptions& opts) {
  params.validate();
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (opts.trials < 10000) throw InvalidArgument("at least 10^4 trials are required");
  if (n_values.empty()) throw InvalidArgument("n_values must not be empty");
  for (std::size_t i = 0; i < n_values.size(); ++i)
    if (n_values[i] < 1 || (i > 0 && n_values[i] <= n_values[i - 1]))
      throw InvalidArgument("n_values must be positive and strictly increasing");

  const int threads = resolve_threads(opts.threads);
  const long trials = opts.trials;
  std::vector<DetectionEstimate> out(alphas.size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    out[k].alpha = alphas[k];
    out[k].trials = trials;
    out[k].n_values = n_values;
  }

  for (int n : n_values) {
    const SensorLayout layout = family(n);
    if (total_sensors(layout) != n) throw InvalidArgument("layout family returned the wrong size");
    const InnovationsFilter filter(params, layout);
    const auto key0 = static_cast<std::uint64_t>(n) * 2;
    std::vector<double> h0 = simulate_batch(filter, Hypothesis::H0, trials, opts.seed, key0, threads);
    std::vector<double> h1 =
        simulate_batch(filter, Hypothesis::H1, trials, opts.seed, key0 + 1, threads);

    const double mean = std::accumulate(h0.begin(), h0.end(), 0.0) / trials;
    double var = 0;
    for (double v : h0) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / (trials - 1));
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());

    for (std::size_t k = 0; k < alphas.size(); ++k) {
      const double threshold = quantile_upper(h0, alphas[k]);
      const long misses = std::upper_bound(h1.begin(), h1.end(), threshold) - h1.begin();
      MissEstimate m;
      m.misses = misses;
      m.estimate = static_cast<double>(misses) / trials;
      if (misses == 0) {
        m.one_sided = true;
        m.ci_half_width = 3.0 / trials;
      } else {
        m.ci_half_width = 1.96 * std::sqrt(m.estimate * (1.0 - m.estimate) / trials);
      }
      out[k].threshold_per_n.push_back(threshold);
      out[k].miss_prob.push_back(m);
      out[k].h0_llr_mean.push_back(mean);
      out[k].h0_llr_sd.push_back(sd);
    }
  }

  for (std::size_t k = 0; k < alphas.size(); ++k) {
    DetectionEstimate& est = out[k];
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - est.alpha);
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < est.n_values.size(); ++i)
      if (est.miss_prob[i].misses >= opts.min_misses_for_fit) usable.push_back(i);

    std::vector<int> n_all;
    std::vector<double> log_n, log_p;
    for (std::size_t i : usable) {
      n_all.push_back(est.n_values[i]);
      log_n.push_back(std::log(double(est.n_values[i])));
      log_p.push_back(std::log(est.miss_prob[i].estimate));
    }
    est.loglog_fit = fit_points(n_all, log_n, log_p);

    const std::size_t keep =
        usable.size() < 3 ? usable.size() : std::max<std::size_t>(3, (usable.size() + 1) / 2);
    std::vector<int> n_fit;
    std::vector<double> x, y_corrected, y_plain;
    for (std::size_t j = usable.size() - keep; j < usable.size(); ++j) {
      const std::size_t i = usable[j];
      const double n = est.n_values[i];
      const double neg_log_p = -std::log(est.miss_prob[i].estimate);
      n_fit.push_back(est.n_values[i]);
      x.push_back(n);
      y_plain.push_back(neg_log_p);
      y_corrected.push_back(neg_log_p + z * est.h0_llr_sd[i] - 0.5 * std::log(n));
    }
    est.fit = fit_points(n_fit, x, y_corrected);
    est.plain_fit = fit_points(n_fit, x, y_plain);
  }
  return out;
}

DetectionEstimate estimate_miss_probability(const FieldParams& params, const LayoutFamily& family,
                                            double alpha, const std::vector<int>& n_values,
                                            const MonteCarloOptions& opts) {
  return estimate_miss_probability(params, family, std::vector<double>{alpha}, n_values, opts)
      .front();
}

double empirical_false_alarm(const FieldParams& params, const SensorLayout& layout,
                             double threshold, long trials, std::uint64_t seed, int threads) {
  const InnovationsFilter filter(params, layout);
  const std::vector<double> h0 =
      simulate_batch(filter, Hypothesis::H0, trials, seed, 0x5157, resolve_threads(threads));
  const long above = std::count_if(h0.begin(), h0.end(), [&](double v) { return v > threshold; });
  return static_cast<double>(above) / trials;
}

// ---------------------------------------------------------------------------

std::string_view regime_name(DecayRegime r) {
  return r == DecayRegime::Exponential ? "exponential" : "polynomial";
}

std::vector<int> default_validation_grid(double closed_form, const ValidationOptions& opts) {
  const int g = std::max(1, opts.granularity);
  auto round_up = [g](double v) { return std::max(g, static_cast<int>(std::ceil(v / g)) * g); };
  std::vector<int> grid;
  if (closed_form <= 0.0) {
    for (int n = 16; n <= 4096; n *= 2) grid.push_back(round_up(n));
  } else {
    // P_M sits above exp(-n K) at these n, so twice the nominal horizon
    // still leaves usable points near the top.
    const double horizon = 2.0 * std::log(opts.mc.trials / opts.mc.min_misses_for_fit) / closed_form;
    const int cap = std::max(g, opts.n_max / g * g);
    const int n_max = std::min(cap, round_up(horizon));
    const int lo = g;
    const int points = 16;
    for (int i = 0; i < points; ++i) grid.push_back(round_up(lo + double(n_max - lo) * i / (points - 1)));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

ValidationReport validate_exponent(const FieldParams& params, const LayoutFamily& family,
                                   const ExponentResult& closed_form,
                                   const ValidationOptions& opts) {
  ValidationReport report;
  report.closed_form = closed_form.exponent_per_sensor;
  report.regime = report.closed_form <= 1e-12 ? DecayRegime::Polynomial : DecayRegime::Exponential;
  const std::vector<int> grid =
      opts.n_values.empty() ? default_validation_grid(report.closed_form, opts) : opts.n_values;
  report.estimates = estimate_miss_probability(params, family, opts.alphas, grid, opts.mc);

  for (const DetectionEstimate& est : report.estimates) {
    AlphaCheck c;
    c.alpha = est.alpha;
    c.fitted_rate = est.fit.slope;
    c.std_error = est.fit.std_error;
    c.loglog_slope = est.loglog_fit.slope;
    if (report.regime == DecayRegime::Exponential) {
      c.relative_deviation = (c.fitted_rate - report.closed_form) / report.closed_form;
      c.passed = est.fit.valid && std::abs(c.relative_deviation) <= opts.tolerance;
      if (!est.fit.valid)
        report.failures.push_back("alpha " + std::to_string(c.alpha) + ": rate fit unavailable (" +
                                  est.fit.note + ")");
      else if (!c.passed)
        report.failures.push_back("alpha " + std::to_string(c.alpha) +
                                  ": fitted rate deviates from the closed form by " +
                                  std::to_string(100.0 * c.relative_deviation) + "%");
    } else {
      c.passed = est.loglog_fit.valid &&
                 std::abs(c.loglog_slope - opts.polynomial_slope) <= opts.polynomial_tolerance;
      if (!c.passed)
        report.failures.push_back("alpha " + std::to_string(c.alpha) + ": log-log slope " +
                                  std::to_string(c.loglog_slope) + " outside tolerance");
    }
    report.checks.push_back(c);
  }

  if (report.regime == DecayRegime::Exponential && report.checks.size() >= 2) {
    const AlphaCheck& a = report.checks[0];
    const AlphaCheck& b = report.checks[1];
    report.alpha_difference = std::abs(a.fitted_rate - b.fitted_rate);
    report.alpha_allowance = 1.96 * (a.std_error + b.std_error);
    report.alpha_independent = std::isfinite(report.alpha_difference) &&
                               report.alpha_difference <= report.alpha_allowance;
    if (!report.alpha_independent)
      report.failures.push_back("fitted rates differ across alpha beyond their 95% intervals");
  }
  report.passed = report.failures.empty();
  return report;
}

}  // namespace corrdet
