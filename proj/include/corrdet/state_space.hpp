#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "corrdet/errors.hpp"
#include "corrdet/field_model.hpp"

namespace corrdet {

/// Vector Gauss-Markov model of one period of an arbitrary periodic layout:
///   s_{k+1} = feedback * s_k + input * u_k,   u_k ~ N(0, process_cov),
///   s_1 ~ N(0, initial_cov).
/// Only the last column of `feedback` is nonzero.
template <typename Scalar>
struct StateSpace {
  MatrixX<Scalar> feedback;
  MatrixX<Scalar> input;
  MatrixX<Scalar> process_cov;
  MatrixX<Scalar> initial_cov;

  Eigen::Index dim() const { return feedback.rows(); }

  // input * process_cov * input^T
  MatrixX<Scalar> driving_cov() const { return input * process_cov * input.transpose(); }

  // The single nonzero eigenvalue of `feedback` is its bottom-right entry.
  Scalar spectral_radius() const {
    using std::abs;
    return abs(feedback(dim() - 1, dim() - 1));
  }

  // max |C0 - A C0 A^T - B Q B^T|
  Scalar lyapunov_residual() const {
    return (initial_cov - feedback * initial_cov * feedback.transpose() - driving_cov())
        .cwiseAbs()
        .maxCoeff();
  }
};

/// Builds (A, B, Q, C0) for M sensors with consecutive gaps `offsets`
/// (offsets.back() closes the period).
///
/// Column M of A holds e^{-A(D_M + D_1 + ... + D_{i-1})}; B is lower
/// triangular with B(i, j) = e^{-A(D_j + ... + D_{i-1})}; Q is
/// Pi0 diag(1 - e^{-2A D_M}, 1 - e^{-2A D_1}, ..., 1 - e^{-2A D_{M-1}});
/// C0(i, j) = Pi0 e^{-A |x_i - x_j|}.  The stationarity identity
/// C0 = A C0 A^T + B Q B^T is checked before returning.
template <typename Scalar>
StateSpace<Scalar> build_periodic_state_space(const BasicFieldParams<Scalar>& params,
                                              const std::vector<double>& offsets) {
  using std::abs;
  using std::exp;
  params.validate();
  validate(SensorLayout{PeriodicLayout{offsets, 1}});

  const Eigen::Index m = static_cast<Eigen::Index>(offsets.size());
  const Scalar rate = params.diffusion_rate;
  const Scalar pi0 = params.stationary_variance;
  auto corr = [&](Scalar distance) { return exp(-rate * distance); };

  // within[i] = x_{i+1} - x_1
  std::vector<Scalar> within(m, Scalar(0));
  for (Eigen::Index i = 1; i < m; ++i) within[i] = within[i - 1] + Scalar(offsets[i - 1]);
  const Scalar last_gap = Scalar(offsets[m - 1]);

  StateSpace<Scalar> ss;
  ss.feedback = MatrixX<Scalar>::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) ss.feedback(i, m - 1) = corr(last_gap + within[i]);

  ss.input = MatrixX<Scalar>::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) ss.input(i, j) = corr(within[i] - within[j]);

  ss.process_cov = MatrixX<Scalar>::Zero(m, m);
  ss.process_cov(0, 0) = pi0 * (Scalar(1) - corr(Scalar(2) * last_gap));
  for (Eigen::Index i = 1; i < m; ++i)
    ss.process_cov(i, i) = pi0 * (Scalar(1) - corr(Scalar(2) * Scalar(offsets[i - 1])));

  ss.initial_cov.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      ss.initial_cov(i, j) = pi0 * corr(abs(within[i] - within[j]));

  const Scalar residual = ss.lyapunov_residual();
  if (!(residual <= Scalar(1e-10) * pi0))
    throw InternalConsistencyError("periodic state space violates C0 = A C0 A^T + B Q B^T");
  return ss;
}

}  // namespace corrdet
