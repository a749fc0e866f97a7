#include "corrdet/field_model.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "corrdet/rng.hpp"

namespace corrdet {

FieldParams make_field_params(double diffusion_rate, double stationary_variance,
                              double noise_variance) {
  FieldParams p{diffusion_rate, stationary_variance, noise_variance};
  p.validate();
  return p;
}

FieldParams field_params_from_snr_db(double diffusion_rate, double snr_db,
                                     double stationary_variance) {
  return make_field_params(diffusion_rate, stationary_variance,
                           stationary_variance / db_to_linear(snr_db));
}

double PeriodicLayout::period() const {
  return std::accumulate(offsets.begin(), offsets.end(), 0.0);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate(const SensorLayout& layout) {
  std::visit(
      overloaded{
          [](const UniformLayout& l) {
            if (!(l.spacing > 0.0) || !std::isfinite(l.spacing))
              throw InvalidArgument("uniform layout: spacing must be finite and > 0");
            if (l.count < 1) throw InvalidArgument("uniform layout: count must be >= 1");
          },
          [](const ClusteredLayout& l) {
            if (l.cluster_size < 1)
              throw InvalidArgument("clustered layout: cluster_size must be >= 1");
            if (l.cluster_count < 1)
              throw InvalidArgument("clustered layout: cluster_count must be >= 1");
            if (!(l.period > 0.0) || !std::isfinite(l.period))
              throw InvalidArgument("clustered layout: period must be finite and > 0");
          },
          [](const PeriodicLayout& l) {
            if (l.offsets.empty())
              throw InvalidArgument("periodic layout: offsets must not be empty");
            for (double d : l.offsets)
              if (!(d >= 0.0) || !std::isfinite(d))
                throw InvalidArgument("periodic layout: offsets must be finite and >= 0");
            if (!(l.period() > 0.0))
              throw InvalidArgument("periodic layout: at least one offset must be > 0");
            if (l.period_count < 1)
              throw InvalidArgument("periodic layout: period_count must be >= 1");
          },
      },
      layout);
}

std::string_view kind_name(const SensorLayout& layout) {
  return std::visit(overloaded{
                        [](const UniformLayout&) { return std::string_view("uniform"); },
                        [](const ClusteredLayout&) { return std::string_view("clustered"); },
                        [](const PeriodicLayout&) { return std::string_view("periodic"); },
                    },
                    layout);
}

int total_sensors(const SensorLayout& layout) {
  return std::visit(
      overloaded{
          [](const UniformLayout& l) { return l.count; },
          [](const ClusteredLayout& l) { return l.cluster_size * l.cluster_count; },
          [](const PeriodicLayout& l) { return l.sensors_per_period() * l.period_count; },
      },
      layout);
}

Eigen::VectorXd positions(const SensorLayout& layout) {
  validate(layout);
  Eigen::VectorXd x(total_sensors(layout));
  std::visit(overloaded{
                 [&](const UniformLayout& l) {
                   for (int i = 0; i < l.count; ++i) x(i) = i * l.spacing;
                 },
                 [&](const ClusteredLayout& l) {
                   for (int k = 0; k < l.cluster_count; ++k)
                     x.segment(k * l.cluster_size, l.cluster_size).setConstant(k * l.period);
                 },
                 [&](const PeriodicLayout& l) {
                   const int m = l.sensors_per_period();
                   const double period = l.period();
                   for (int k = 0; k < l.period_count; ++k) {
                     double within = 0.0;
                     for (int j = 0; j < m; ++j) {
                       x(k * m + j) = k * period + within;
                       within += l.offsets[j];
                     }
                   }
                 },
             },
             layout);
  return x;
}

PeriodicLayout as_periodic(const ClusteredLayout& layout) {
  PeriodicLayout p;
  p.offsets.assign(layout.cluster_size, 0.0);
  p.offsets.back() = layout.period;
  p.period_count = layout.cluster_count;
  return p;
}

Eigen::VectorXd gap_correlations(const FieldParams& params, const SensorLayout& layout) {
  const Eigen::VectorXd x = positions(layout);
  Eigen::VectorXd a(std::max<Eigen::Index>(x.size() - 1, 0));
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a(i) = correlation_from_spacing(params, x(i + 1) - x(i)).value();
  return a;
}

Eigen::VectorXd sample_observations(const FieldParams& params, const SensorLayout& layout,
                                    Hypothesis hypothesis, std::uint64_t seed) {
  params.validate();
  const Eigen::VectorXd a = gap_correlations(params, layout);
  const Eigen::Index n = a.size() + 1;
  auto gen = make_stream(seed, {static_cast<std::uint64_t>(hypothesis)});
  std::normal_distribution<double> normal;

  const double noise_sd = std::sqrt(params.noise_variance);
  const double pi0 = params.stationary_variance;
  Eigen::VectorXd y(n);
  if (hypothesis == Hypothesis::H0) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) = noise_sd * normal(gen);
    return y;
  }
  // Draw order per sample: field innovation, then measurement noise.
  double s = std::sqrt(pi0) * normal(gen);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) {
      const double ai = a(i - 1);
      s = ai * s + std::sqrt(std::max(0.0, pi0 * (1.0 - ai * ai))) * normal(gen);
    }
    y(i) = s + noise_sd * normal(gen);
  }
  return y;
}

}  // namespace corrdet
