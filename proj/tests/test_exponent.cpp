#include <doctest.h>

#include <cmath>
#include <random>

#include "corrdet/exponent.hpp"
#include "oracles.hpp"

using namespace corrdet;

TEST_CASE("scalar Riccati fixed point matches the quadratic root") {
  for (double a : {0.0, 0.1, 0.5, 0.9, 0.999}) {
    for (double s2 : {0.01, 1.0, 10.0}) {
      FieldParams p = make_field_params(1.0, 1.3, s2);
      ScalarInnovations s = scalar_riccati_fixed_point(p, CorrelationCoefficient(a));
      const double ref = oracle::scalar_riccati_root(a, 1.3, s2);
      CHECK(std::abs(s.p - ref) <= 1e-12 * std::max(1.0, ref));
      CHECK(s.r_e == doctest::Approx(s2 + s.p));
      CHECK(std::abs(a - s.gain) < 1.0);
    }
  }
}

TEST_CASE("scalar exponent equals the written-out formula") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const double a = 0.98 * u(rng);
    const double s2 = std::pow(10.0, 4 * u(rng) - 2);
    FieldParams p = make_field_params(1.0, 1.0, s2);
    const double k = scalar_exponent_at(p, CorrelationCoefficient(a)).exponent_per_sensor;
    CHECK(k == doctest::Approx(oracle::uniform_exponent(a, 1.0, s2)).epsilon(1e-10));
  }
}

TEST_CASE("scalar exponent at a = 0 is the Gaussian divergence") {
  for (double snr : {0.1, 1.0, 10.0, 100.0}) {
    FieldParams p = make_field_params(1.0, snr, 1.0);
    ExponentResult r = scalar_exponent_at(p, CorrelationCoefficient(0.0));
    CHECK(std::abs(r.exponent_per_sensor - oracle::gaussian_kl(snr, 1.0)) < 1e-12);
  }
}

TEST_CASE("exponent equals the KL rate of the exact covariance") {
  struct Case {
    double rate, snr;
    std::vector<double> offsets;
  };
  const std::vector<Case> cases{{1.0, 10.0, {0.5}},
                                {3.0, 0.5, {0.2}},
                                {1.0, 0.5, {0.0, 1.0}},
                                {10.0, 10.0, {0.01, 0.02}},
                                {5.0, 10.0, {0.0, 0.015, 0.015}},
                                {2.0, 2.0, {0.1, 0.0, 0.3, 0.05}}};
  for (const Case& c : cases) {
    CAPTURE(c.rate);
    CAPTURE(c.snr);
    FieldParams p = make_field_params(c.rate, c.snr, 1.0);
    ExponentResult r = vector_exponent(p, PeriodicLayout{c.offsets, 1});
    const int periods = 400 / static_cast<int>(c.offsets.size());
    const double ref = oracle::kl_rate(c.offsets, c.rate, c.snr, 1.0, periods);
    CHECK(r.exponent_per_sensor == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("perfect correlation gives a zero exponent") {
  FieldParams p = make_field_params(0.0, 1.0, 1.0);
  ExponentResult r = exponent(p, UniformLayout{1.0, 10});
  CHECK(r.exponent_per_sensor == 0.0);
  CHECK(r.method == ExponentMethod::PerfectCorrelation);
  FieldParams q = make_field_params(2.0, 1.0, 1.0);
  CHECK(scalar_exponent_at(q, CorrelationCoefficient(1.0)).exponent_per_sensor == 0.0);
  CHECK_THROWS_AS(vector_exponent(p, PeriodicLayout{{0.5, 0.5}, 1}), SingularRegimeError);
}

TEST_CASE("vector Riccati matches structure-preserving doubling") {
  FieldParams p = make_field_params(4.0, 3.0, 0.7);
  const std::vector<double> offsets{0.02, 0.0, 0.1};
  StateSpace<double> ss = build_periodic_state_space(p, offsets);
  RiccatiSolution<double> sol = vector_riccati_solve(ss, 0.7);
  Eigen::MatrixXd ref = oracle::sda_riccati(ss.feedback, ss.driving_cov(), 0.7);
  CHECK((sol.p - ref).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sol.closed_loop_radius < 1.0);

  LyapunovSolution<double> lyap = vector_lyapunov_solve(ss, sol, 0.7);
  Eigen::MatrixXd f = ss.feedback - sol.gain;
  Eigen::MatrixXd series = oracle::lyapunov_series(f, sol.gain * sol.gain.transpose());
  CHECK((lyap.p_tilde - series).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("discrete Lyapunov solver against the series") {
  Eigen::MatrixXd f(3, 3);
  f << 0.5, 0.1, 0.0, -0.2, 0.3, 0.4, 0.0, 0.1, -0.6;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
  c(0, 2) = c(2, 0) = 0.3;
  Eigen::MatrixXd x = solve_discrete_lyapunov<double>(f, c);
  CHECK((x - oracle::lyapunov_series(f, c)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("M = 1 periodic layout reduces to the scalar exponent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double rate = std::pow(10.0, 3 * u(rng) - 1);
    const double d = std::pow(10.0, 2 * u(rng) - 2);
    FieldParams p = make_field_params(rate, std::pow(10.0, 3 * u(rng) - 1.5), 1.0);
    const double ks = scalar_exponent(p, d).exponent_per_sensor;
    const double kv = vector_exponent(p, PeriodicLayout{{d}, 1}).exponent_per_sensor;
    CHECK(std::abs(ks - kv) < 1e-10);
  }
}

TEST_CASE("clustering identity") {
  FieldParams p = make_field_params(2.0, 0.5, 1.0);
  for (int m : {2, 3, 5}) {
    ClusteredLayout c{m, 1, 0.4};
    ExponentResult k = clustering_exponent(p, c);
    ExponentResult v = vector_exponent(p, as_periodic(c));
    CHECK(k.exponent_per_sensor == doctest::Approx(v.exponent_per_sensor).epsilon(1e-9));
    CHECK(k.sensors_per_block == m);
    CHECK(k.exponent_per_block == doctest::Approx(m * k.exponent_per_sensor));
    FieldParams boosted = make_field_params(2.0, 0.5, 1.0 / m);
    CHECK(k.exponent_per_sensor ==
          doctest::Approx(scalar_exponent(boosted, 0.4).exponent_per_sensor / m));
  }
}

TEST_CASE("dispatch by layout kind") {
  FieldParams p = make_field_params(1.0, 10.0, 1.0);
  CHECK(exponent(p, UniformLayout{0.5, 3}).method == ExponentMethod::Scalar);
  CHECK(exponent(p, ClusteredLayout{2, 3, 0.5}).method == ExponentMethod::Clustering);
  ExponentResult per = exponent(p, PeriodicLayout{{0.5}, 4});
  CHECK(per.method == ExponentMethod::Vector);
  CHECK(per.exponent_per_sensor ==
        doctest::Approx(exponent(p, UniformLayout{0.5, 4}).exponent_per_sensor).epsilon(1e-12));
  REQUIRE(per.config_echo.has_value());
  CHECK(kind_name(*per.config_echo) == "periodic");
}

TEST_CASE("clamp_exponent") {
  CHECK(clamp_exponent(0.25) == 0.25);
  CHECK(clamp_exponent(-1e-14) == 0.0);
  CHECK_THROWS_AS(clamp_exponent(-1e-6), NumericFailure);
}

TEST_CASE("exponent is non-negative and finite over a random grid") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    FieldParams p = make_field_params(std::pow(10.0, 3 * u(rng) - 1), 1.0, std::pow(10.0, 3 * u(rng) - 1.5));
    std::vector<double> offsets{u(rng) * 0.1, u(rng) * 0.1, u(rng) * 0.1};
    ExponentResult r = vector_exponent(p, PeriodicLayout{offsets, 1});
    CHECK(std::isfinite(r.exponent_per_sensor));
    CHECK(r.exponent_per_sensor >= 0.0);
  }
}

TEST_CASE("float instantiation of the scalar solver") {
  BasicFieldParams<float> p{1.0f, 1.0f, 0.5f};
  BasicScalarInnovations<float> s =
      scalar_riccati_fixed_point(p, BasicCorrelationCoefficient<float>(0.6f), SolverOptions{1e-7, 1e-5, 1e-5});
  CHECK(s.p == doctest::Approx(oracle::scalar_riccati_root(0.6, 1.0, 0.5)).epsilon(1e-5));
}
