#include <doctest.h>

#include <cmath>
#include <random>

#include "corrdet/detector.hpp"
#include "oracles.hpp"

using namespace corrdet;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("innovations LLR equals the dense-covariance LLR") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    FieldParams p = make_field_params(std::pow(10.0, 3 * u(rng) - 1), std::pow(10.0, 2 * u(rng) - 1), 1.0);
    SensorLayout layout;
    switch (t % 3) {
      case 0: layout = UniformLayout{0.05 + u(rng), 1 + t % 12}; break;
      case 1: layout = ClusteredLayout{1 + t % 4, 1 + t % 3, 0.05 + u(rng)}; break;
      default: layout = PeriodicLayout{{0.0, u(rng), 0.1 * u(rng)}, 1 + t % 4}; break;
    }
    Eigen::VectorXd y = sample_observations(p, layout, t % 2 ? Hypothesis::H1 : Hypothesis::H0, t);
    const double fast = llr_innovations(p, layout, y);
    const double ref = oracle::direct_llr(to_std(positions(layout)), p.diffusion_rate,
                                          p.stationary_variance, p.noise_variance, y);
    CHECK(std::abs(fast - ref) < 1e-8 * std::max(1.0, std::abs(ref)));
    CHECK(std::abs(llr_direct(p, layout, y) - ref) < 1e-8 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("LLR of perfectly correlated readings") {
  FieldParams p = make_field_params(0.0, 2.0, 1.0);
  SensorLayout layout = UniformLayout{1.0, 6};
  Eigen::VectorXd y = sample_observations(p, layout, Hypothesis::H1, 3);
  const double ref = oracle::direct_llr(to_std(positions(layout)), 0.0, 2.0, 1.0, y);
  CHECK(llr_innovations(p, layout, y) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("fused simulation matches sample then filter") {
  FieldParams p = make_field_params(2.0, 1.0, 0.5);
  SensorLayout layout = ClusteredLayout{2, 7, 0.3};
  InnovationsFilter filter(p, layout);
  CHECK(filter.size() == 14);
  for (std::uint64_t seed : {1u, 2u, 99u})
    for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
      const double fused = filter.simulate_llr(h, seed);
      const double two_step = filter.llr(sample_observations(p, layout, h, seed));
      CHECK(fused == doctest::Approx(two_step).epsilon(1e-12));
    }
  CHECK(filter.llr(Eigen::VectorXd::Zero(14)) == doctest::Approx(filter.log_normalizer()));
}

TEST_CASE("layout families") {
  CHECK(total_sensors(uniform_family(0.1)(7)) == 7);
  CHECK(total_sensors(clustered_family(3, 1.0)(12)) == 12);
  CHECK_THROWS_AS(clustered_family(3, 1.0)(10), InvalidArgument);
  CHECK(total_sensors(periodic_family({0.0, 0.5})(8)) == 8);
  Eigen::VectorXd x = positions(colocated_family()(5));
  CHECK(x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("miss probability estimate and false alarm control") {
  FieldParams p = make_field_params(1.0, 1.0, 1.0);
  MonteCarloOptions mc;
  mc.trials = 20000;
  mc.seed = 5;
  DetectionEstimate e = estimate_miss_probability(p, uniform_family(1.0), 0.1, {4, 8, 16, 32}, mc);
  REQUIRE(e.miss_prob.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) CHECK(e.miss_prob[i].estimate < e.miss_prob[i - 1].estimate);
  const double fa = empirical_false_alarm(p, UniformLayout{1.0, 16}, e.threshold_per_n[2], 20000, 77);
  // binomial sd at 0.1 with 2e4 trials is 0.0021
  CHECK(std::abs(fa - 0.1) < 0.01);
  for (const MissEstimate& m : e.miss_prob) {
    CHECK(m.estimate == doctest::Approx(double(m.misses) / 20000));
    CHECK(m.ci_half_width ==
          doctest::Approx(1.96 * std::sqrt(m.estimate * (1 - m.estimate) / 20000)));
  }
  CHECK_THROWS_AS(estimate_miss_probability(p, uniform_family(1.0), 0.1, {4}, MonteCarloOptions{100}),
                  InvalidArgument);
}

TEST_CASE("Monte Carlo is reproducible and independent of the thread count") {
  FieldParams p = make_field_params(1.0, 1.0, 1.0);
  MonteCarloOptions one;
  one.trials = 10000;
  one.seed = 9;
  one.threads = 1;
  MonteCarloOptions four = one;
  four.threads = 4;
  DetectionEstimate a = estimate_miss_probability(p, uniform_family(0.5), 0.05, {5, 10}, one);
  DetectionEstimate b = estimate_miss_probability(p, uniform_family(0.5), 0.05, {5, 10}, four);
  CHECK(a.threshold_per_n == b.threshold_per_n);
  CHECK(a.miss_prob[1].misses == b.miss_prob[1].misses);
  MonteCarloOptions other = one;
  other.seed = 10;
  DetectionEstimate c = estimate_miss_probability(p, uniform_family(0.5), 0.05, {5, 10}, other);
  CHECK(a.threshold_per_n != c.threshold_per_n);
}

TEST_CASE("zero misses give a one-sided bound") {
  FieldParams p = make_field_params(1000.0, 100.0, 1.0);
  MonteCarloOptions mc;
  mc.trials = 10000;
  DetectionEstimate e = estimate_miss_probability(p, uniform_family(1.0), 0.2, {40}, mc);
  REQUIRE(e.miss_prob[0].misses == 0);
  CHECK(e.miss_prob[0].one_sided);
  CHECK(e.miss_prob[0].ci_half_width == doctest::Approx(3.0 / 10000));
  CHECK_FALSE(e.fit.valid);
}

TEST_CASE("validation grid") {
  ValidationOptions v;
  std::vector<int> poly = default_validation_grid(0.0, v);
  CHECK(poly.front() == 16);
  CHECK(poly.back() == 4096);
  v.granularity = 3;
  std::vector<int> g = default_validation_grid(0.1, v);
  CHECK(g.size() >= 8);
  for (int n : g) CHECK(n % 3 == 0);
  CHECK(g.back() <= 300);
}

TEST_CASE("thread cap from the environment") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
