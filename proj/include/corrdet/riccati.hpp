#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "corrdet/errors.hpp"
#include "corrdet/field_model.hpp"
#include "corrdet/state_space.hpp"

namespace corrdet {

// Fixed-point iteration controls.  Iteration stops once the step falls below
// `tolerance` (relative to the problem scale) or stops shrinking; the answer
// is accepted only if the final step is below `acceptance`.
// The scalar solver accepts at `scalar_acceptance`, the matrix solver at
// `acceptance`.
struct SolverOptions {
  double tolerance = 1e-15;
  double acceptance = 1e-10;
  double scalar_acceptance = 1e-12;
  long max_iterations = 2'000'000;
  int stall_window = 50;
};

namespace detail {

// Tracks convergence of a monotone-ish fixed-point iteration.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(const SolverOptions& opts, double scale) : opts_(opts), scale_(scale) {}

  // Returns true when iteration should stop.
  bool update(double step) {
    ++iterations_;
    last_ = step;
    if (iterations_ % 1000 == 1) history_.push_back(step);
    if (step <= opts_.tolerance * scale_) return true;
    if (step < best_) {
      best_ = step;
      since_best_ = 0;
    } else if (++since_best_ >= opts_.stall_window && best_ <= opts_.acceptance * scale_) {
      return true;
    }
    return iterations_ >= opts_.max_iterations;
  }

  bool accepted() const { return last_ <= opts_.acceptance * scale_ || best_ <= opts_.tolerance * scale_; }
  long iterations() const { return iterations_; }
  double residual() const { return last_; }

  [[noreturn]] void fail(const char* what) {
    history_.push_back(last_);
    throw NumericFailure(what, last_, history_);
  }

 private:
  SolverOptions opts_;
  double scale_;
  long iterations_ = 0;
  double last_ = std::numeric_limits<double>::infinity();
  double best_ = std::numeric_limits<double>::infinity();
  int since_best_ = 0;
  std::vector<double> history_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar model s_{i+1} = a s_i + u_i, y_i = s_i + w_i.

template <typename Scalar>
struct BasicScalarInnovations {
  Scalar p;          // steady-state one-step prediction error variance (H1 filter)
  Scalar r_e;        // innovations variance under H1, noise_variance + p
  Scalar p_tilde;    // normalized prediction error of the H1 filter fed H0 data
  Scalar r_e_tilde;  // innovations variance under H0, noise_variance (1 + p_tilde)
  Scalar gain;       // prediction gain a p / r_e
  long iterations = 0;
  double residual = 0;
};

using ScalarInnovations = BasicScalarInnovations<double>;

/// Steady state of the scalar prediction Riccati recursion
///   p <- a^2 p + Pi0 (1 - a^2) - a^2 p^2 / (sigma^2 + p),
/// iterated from p = Pi0 (1 - a^2), plus the matching H0 innovations variance
/// from p_tilde = (a - g)^2 p_tilde + g^2.
template <typename Scalar>
BasicScalarInnovations<Scalar> scalar_riccati_fixed_point(
    const BasicFieldParams<Scalar>& params, BasicCorrelationCoefficient<Scalar> corr,
    const SolverOptions& opts = {}) {
  using std::abs;
  params.validate();
  const Scalar a = corr.value();
  const Scalar a2 = a * a;
  const Scalar pi0 = params.stationary_variance;
  const Scalar s2 = params.noise_variance;
  const Scalar q = pi0 * (Scalar(1) - a2);

  SolverOptions scalar_opts = opts;
  scalar_opts.acceptance = opts.scalar_acceptance;
  detail::ConvergenceMonitor monitor(scalar_opts, double(pi0));
  Scalar p = q;
  for (;;) {
    // a^2 p - a^2 p^2 / (s2 + p) == a^2 p s2 / (s2 + p)
    const Scalar next = q + a2 * p * s2 / (s2 + p);
    const Scalar step = abs(next - p);
    p = next;
    if (monitor.update(double(step))) break;
  }
  if (!monitor.accepted()) monitor.fail("scalar Riccati iteration did not converge");

  BasicScalarInnovations<Scalar> out;
  out.p = p;
  out.r_e = s2 + p;
  out.gain = a * p / out.r_e;
  const Scalar closed = a - out.gain;
  // a = 1 forces p = 0 and g = 0; the H0-driven filter then never moves.
  out.p_tilde = out.gain == Scalar(0) ? Scalar(0)
                                      : out.gain * out.gain / (Scalar(1) - closed * closed);
  out.r_e_tilde = s2 * (Scalar(1) + out.p_tilde);
  out.iterations = monitor.iterations();
  out.residual = monitor.residual();
  return out;
}

// ---------------------------------------------------------------------------
// Vector model of a periodic layout.

template <typename Scalar>
struct RiccatiSolution {
  MatrixX<Scalar> p;            // stabilizing solution
  MatrixX<Scalar> r_e;          // noise_variance I + P
  MatrixX<Scalar> gain;         // K_p = A P R_e^{-1}
  Scalar closed_loop_radius{};  // spectral radius of A - K_p
  long iterations = 0;
  double residual = 0;
};

template <typename Scalar>
Scalar spectral_radius(const MatrixX<Scalar>& m) {
  if (m.size() == 0) return Scalar(0);
  Eigen::EigenSolver<MatrixX<Scalar>> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Scalar>
Scalar min_eigenvalue(const MatrixX<Scalar>& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// One step of the prediction Riccati map for observation matrix I.
template <typename Scalar>
MatrixX<Scalar> riccati_map(const StateSpace<Scalar>& ss, const MatrixX<Scalar>& bqb,
                            const MatrixX<Scalar>& p, Scalar noise_variance) {
  const Eigen::Index m = ss.dim();
  const MatrixX<Scalar> r_e = noise_variance * MatrixX<Scalar>::Identity(m, m) + p;
  // P - P R_e^{-1} P
  const MatrixX<Scalar> filtered = p - p * r_e.llt().solve(p);
  MatrixX<Scalar> next = ss.feedback * filtered * ss.feedback.transpose() + bqb;
  return (next + next.transpose()) / Scalar(2);
}

/// Stabilizing solution of P = A P A^T + B Q B^T - A P R_e^{-1} P A^T with
/// R_e = sigma^2 I + P, by fixed-point iteration from P = B Q B^T.
template <typename Scalar>
RiccatiSolution<Scalar> vector_riccati_solve(const StateSpace<Scalar>& ss, Scalar noise_variance,
                                             const SolverOptions& opts = {}) {
  if (!(noise_variance > Scalar(0))) throw InvalidArgument("noise_variance must be > 0");
  if (!(ss.spectral_radius() < Scalar(1)))
    throw SingularRegimeError(
        "feedback spectral radius is 1 (zero diffusion or zero period): no stabilizing "
        "Riccati solution");

  const Eigen::Index m = ss.dim();
  const MatrixX<Scalar> bqb = ss.driving_cov();
  const double scale = std::max(double(bqb.cwiseAbs().maxCoeff()),
                                double(ss.initial_cov.cwiseAbs().maxCoeff()));
  detail::ConvergenceMonitor monitor(opts, scale);

  MatrixX<Scalar> p = bqb;
  for (;;) {
    MatrixX<Scalar> next = riccati_map(ss, bqb, p, noise_variance);
    const double step = double((next - p).cwiseAbs().maxCoeff());
    p = std::move(next);
    if (monitor.update(step)) break;
  }
  if (!monitor.accepted()) monitor.fail("vector Riccati iteration did not converge");

  RiccatiSolution<Scalar> sol;
  sol.p = p;
  sol.r_e = noise_variance * MatrixX<Scalar>::Identity(m, m) + p;
  // K_p = A P R_e^{-1}; R_e symmetric so solve R_e X = P A^T and transpose.
  sol.gain = sol.r_e.llt().solve(p * ss.feedback.transpose()).transpose();
  sol.closed_loop_radius = spectral_radius<Scalar>(ss.feedback - sol.gain);
  sol.iterations = monitor.iterations();
  sol.residual = monitor.residual();

  const double norm_p = std::max(double(p.cwiseAbs().maxCoeff()), scale);
  if (!(double(min_eigenvalue<Scalar>(p)) >= -1e-10 * norm_p))
    throw NumericFailure("Riccati solution is not positive semidefinite", sol.residual);
  if (!(sol.closed_loop_radius < Scalar(1)))
    throw NumericFailure("Riccati solution is not stabilizing", sol.residual);
  return sol;
}

template <typename Scalar>
struct LyapunovSolution {
  MatrixX<Scalar> p_tilde;    // normalized H0 prediction error covariance
  MatrixX<Scalar> r_e_tilde;  // noise_variance (I + P~)
  double residual = 0;
};

/// Solves X = F X F^T + C for stable F through the Kronecker (vec) form
/// (I - F (x) F) vec(X) = vec(C).  Cost is O(M^6); M is the number of
/// sensors per period.
template <typename Scalar>
MatrixX<Scalar> solve_discrete_lyapunov(const MatrixX<Scalar>& f, const MatrixX<Scalar>& c) {
  const Eigen::Index m = f.rows();
  const Eigen::Index mm = m * m;
  MatrixX<Scalar> lhs = MatrixX<Scalar>::Identity(mm, mm);
  // vec(F X F^T) = (F (x) F) vec(X) with column-major vec.
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index l = 0; l < m; ++l) lhs(i + j * m, k + l * m) -= f(i, k) * f(j, l);
  const VectorX<Scalar> rhs = Eigen::Map<const VectorX<Scalar>>(c.data(), mm);
  const VectorX<Scalar> x = lhs.fullPivLu().solve(rhs);
  MatrixX<Scalar> out = Eigen::Map<const MatrixX<Scalar>>(x.data(), m, m);
  return (out + out.transpose()) / Scalar(2);
}

/// P~ = (A - K_p) P~ (A - K_p)^T + K_p K_p^T and R~_e = sigma^2 (I + P~).
template <typename Scalar>
LyapunovSolution<Scalar> vector_lyapunov_solve(const StateSpace<Scalar>& ss,
                                               const RiccatiSolution<Scalar>& riccati,
                                               Scalar noise_variance) {
  const Eigen::Index m = ss.dim();
  const MatrixX<Scalar> f = ss.feedback - riccati.gain;
  if (!(spectral_radius<Scalar>(f) < Scalar(1)))
    throw NumericFailure("closed loop A - K_p is not stable", 0.0);
  const MatrixX<Scalar> kk = riccati.gain * riccati.gain.transpose();

  LyapunovSolution<Scalar> sol;
  sol.p_tilde = solve_discrete_lyapunov<Scalar>(f, kk);
  sol.residual =
      double((sol.p_tilde - f * sol.p_tilde * f.transpose() - kk).cwiseAbs().maxCoeff());
  const double scale = std::max(double(kk.cwiseAbs().maxCoeff()),
                                std::numeric_limits<double>::min());
  if (!(sol.residual <= 1e-10 * scale))
    throw NumericFailure("Lyapunov solve residual too large", sol.residual);
  const double norm_pt = std::max(double(sol.p_tilde.cwiseAbs().maxCoeff()), scale);
  if (!(double(min_eigenvalue<Scalar>(sol.p_tilde)) >= -1e-10 * norm_pt))
    throw NumericFailure("Lyapunov solution is not positive semidefinite", sol.residual);
  sol.r_e_tilde = noise_variance * (MatrixX<Scalar>::Identity(m, m) + sol.p_tilde);
  return sol;
}

/// -1/2 log(sigma^{2m} / det R_e) + 1/2 tr(R_e^{-1} R~_e) - m/2, natural log.
template <typename Scalar>
Scalar innovations_exponent(const MatrixX<Scalar>& r_e, const MatrixX<Scalar>& r_e_tilde,
                            Scalar noise_variance) {
  using std::log;
  const Eigen::Index m = r_e.rows();
  Eigen::LLT<MatrixX<Scalar>> llt(r_e);
  if (llt.info() != Eigen::Success)
    throw NumericFailure("innovations covariance is not positive definite", 0.0);
  Scalar log_det = 0;
  for (Eigen::Index i = 0; i < m; ++i) log_det += Scalar(2) * log(llt.matrixL()(i, i));
  const Scalar trace = llt.solve(r_e_tilde).trace();
  return Scalar(0.5) * (log_det - Scalar(m) * log(noise_variance)) + Scalar(0.5) * trace -
         Scalar(0.5) * Scalar(m);
}

}  // namespace corrdet
