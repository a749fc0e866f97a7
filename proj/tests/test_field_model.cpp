#include <doctest.h>

#include <cmath>

#include "corrdet/field_model.hpp"
#include "corrdet/state_space.hpp"
#include "oracles.hpp"

using namespace corrdet;

TEST_CASE("field params validation") {
  CHECK_NOTHROW(make_field_params(0.0, 1.0, 1.0));
  CHECK_THROWS_AS(make_field_params(-1.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_field_params(1.0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_field_params(1.0, 1.0, -2.0), InvalidArgument);
  CHECK_THROWS_AS(make_field_params(std::nan(""), 1.0, 1.0), InvalidArgument);
  FieldParams p = field_params_from_snr_db(2.0, 10.0, 3.0);
  CHECK(p.snr() == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(p.stationary_variance == 3.0);
  CHECK(linear_to_db(db_to_linear(-3.0)) == doctest::Approx(-3.0));
}

TEST_CASE("correlation from spacing") {
  FieldParams p = make_field_params(2.0, 1.0, 1.0);
  CHECK(correlation_from_spacing(p, 0.5).value() == doctest::Approx(std::exp(-1.0)));
  CHECK(correlation_from_spacing(p, 0.0).value() == 1.0);
  CHECK(correlation_from_spacing(p, HUGE_VAL).value() == 0.0);
  CHECK_THROWS_AS(correlation_from_spacing(p, -0.1), InvalidArgument);
  FieldParams still = make_field_params(0.0, 1.0, 1.0);
  CHECK(correlation_from_spacing(still, HUGE_VAL).value() == 1.0);
  CHECK_THROWS_AS(CorrelationCoefficient(1.5), InvalidArgument);
  CHECK_THROWS_AS(CorrelationCoefficient(-0.1), InvalidArgument);
}

TEST_CASE("layout validation and positions") {
  CHECK_THROWS_AS(validate(UniformLayout{-1.0, 3}), InvalidArgument);
  CHECK_THROWS_AS(validate(UniformLayout{1.0, 0}), InvalidArgument);
  CHECK_THROWS_AS(validate(ClusteredLayout{0, 1, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(ClusteredLayout{2, 1, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(PeriodicLayout{{}, 1}), InvalidArgument);
  CHECK_THROWS_AS(validate(PeriodicLayout{{0.0, 0.0}, 1}), InvalidArgument);
  CHECK_THROWS_AS(validate(PeriodicLayout{{0.5, -0.1}, 1}), InvalidArgument);

  Eigen::VectorXd x = positions(UniformLayout{0.5, 4});
  CHECK(x.size() == 4);
  CHECK(x(3) == doctest::Approx(1.5));

  x = positions(ClusteredLayout{3, 2, 2.0});
  REQUIRE(x.size() == 6);
  CHECK(x(2) == 0.0);
  CHECK(x(3) == 2.0);
  CHECK(x(5) == 2.0);

  x = positions(PeriodicLayout{{0.1, 0.2, 0.7}, 2});
  REQUIRE(x.size() == 6);
  const std::vector<double> expect = oracle::periodic_positions({0.1, 0.2, 0.7}, 2);
  for (int i = 0; i < 6; ++i) CHECK(x(i) == doctest::Approx(expect[i]));

  PeriodicLayout as = as_periodic(ClusteredLayout{3, 4, 0.5});
  CHECK(as.offsets == std::vector<double>{0.0, 0.0, 0.5});
  CHECK(as.period_count == 4);
  CHECK(total_sensors(as) == 12);
  CHECK(kind_name(SensorLayout{as}) == "periodic");
}

TEST_CASE("signal covariance is the OU autocorrelation") {
  FieldParams p = make_field_params(1.7, 2.5, 1.0);
  SensorLayout layout = PeriodicLayout{{0.1, 0.0, 0.45}, 3};
  Eigen::MatrixXd c = signal_covariance(p, layout);
  Eigen::MatrixXd ref = oracle::ou_covariance(oracle::periodic_positions({0.1, 0.0, 0.45}, 3), 1.7, 2.5);
  CHECK((c - ref).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(c.isApprox(c.transpose()));

  Eigen::MatrixXf cf = signal_covariance(p.cast<float>(), layout);
  CHECK((cf.cast<double>() - ref).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("sampled H1 readings reproduce the OU covariance") {
  FieldParams p = make_field_params(2.0, 1.5, 0.5);
  SensorLayout layout = UniformLayout{0.3, 5};
  Eigen::MatrixXd ref = signal_covariance(p, layout);
  ref.diagonal().array() += 0.5;
  const int trials = 200000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd y = sample_observations(p, layout, Hypothesis::H1, 1000 + t);
    acc += y * y.transpose();
  }
  acc /= trials;
  // entry standard error is about sqrt(2) * 2 / sqrt(trials) ~ 0.0063
  CHECK((acc - ref).cwiseAbs().maxCoeff() < 0.03);

  Eigen::VectorXd h0_var = Eigen::VectorXd::Zero(5);
  for (int t = 0; t < trials; ++t)
    h0_var += sample_observations(p, layout, Hypothesis::H0, 7 + t).cwiseAbs2();
  h0_var /= trials;
  CHECK((h0_var.array() - 0.5).abs().maxCoeff() < 0.01);
}

TEST_CASE("sampling is deterministic in the seed") {
  FieldParams p = make_field_params(1.0, 1.0, 1.0);
  SensorLayout layout = ClusteredLayout{2, 5, 1.0};
  Eigen::VectorXd a = sample_observations(p, layout, Hypothesis::H1, 42);
  Eigen::VectorXd b = sample_observations(p, layout, Hypothesis::H1, 42);
  Eigen::VectorXd c = sample_observations(p, layout, Hypothesis::H1, 43);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("gap correlations") {
  FieldParams p = make_field_params(1.0, 1.0, 1.0);
  Eigen::VectorXd g = gap_correlations(p, PeriodicLayout{{0.0, 0.5}, 2});
  REQUIRE(g.size() == 3);
  CHECK(g(0) == 1.0);
  CHECK(g(1) == doctest::Approx(std::exp(-0.5)));
  CHECK(g(2) == 1.0);
}

TEST_CASE("periodic state space satisfies the stationarity identity") {
  FieldParams p = make_field_params(3.0, 2.0, 1.0);
  const std::vector<double> offsets{0.05, 0.0, 0.2, 0.1};
  StateSpace<double> ss = build_periodic_state_space(p, offsets);
  CHECK(ss.dim() == 4);
  CHECK(ss.lyapunov_residual() < 1e-14);
  Eigen::MatrixXd c0 = oracle::ou_covariance(oracle::periodic_positions(offsets, 1), 3.0, 2.0);
  CHECK((ss.initial_cov - c0).cwiseAbs().maxCoeff() < 1e-15);
  // only the last column of the feedback is nonzero
  CHECK(ss.feedback.leftCols(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ss.spectral_radius() == doctest::Approx(std::exp(-3.0 * 0.35)));
  // one period ahead: Cov(s_{k+1}, s_k) = A C0
  std::vector<double> two = oracle::periodic_positions(offsets, 2);
  Eigen::MatrixXd c_full = oracle::ou_covariance(two, 3.0, 2.0);
  CHECK((c_full.block(4, 0, 4, 4) - ss.feedback * ss.initial_cov).cwiseAbs().maxCoeff() < 1e-14);
}
