#ifndef MOMENTEST_LEVENBERG_MARQUARDT_HPP
#define MOMENTEST_LEVENBERG_MARQUARDT_HPP

// Damped Gauss-Newton with Marquardt's diagonal scaling.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "momentest/error.hpp"

namespace momentest::estimate {

struct LmOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double lambda_max = 1e16;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  int iterations = 0;
  double residual_norm = 0;  // infinity norm
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Converged when the residual infinity norm is <= tol, or when an undamped
/// first trial step is below tol * (1 + |x|). Running out of iterations
/// returns the best iterate with converged = false. Throws
/// Error{SingularSystem} when the damped normal matrix cannot be factored
/// even at lambda_max.
inline LmResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian,
                                    Eigen::VectorXd x0, const LmOptions& opts = {}) {
  LmResult out;
  out.x = std::move(x0);
  out.residual = residual(out.x);
  if (!out.residual.allFinite())
    throw Error(ErrorKind::InvalidArgument, "residual is not finite at the starting point");
  double cost = out.residual.squaredNorm();
  double lambda = opts.lambda0;

  for (out.iterations = 0; out.iterations < opts.max_iter; ++out.iterations) {
    out.residual_norm = out.residual.lpNorm<Eigen::Infinity>();
    if (out.residual_norm <= opts.tol) {
      out.converged = true;
      return out;
    }
    const Eigen::MatrixXd jac = jacobian(out.x);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * out.residual;
    Eigen::VectorXd diag = a.diagonal();
    const double floor = std::max(diag.maxCoeff(), 1.0) * 1e-15;
    for (Eigen::Index i = 0; i < diag.size(); ++i) diag(i) = std::max(diag(i), floor);

    bool accepted = false;
    for (bool first = true;; first = false) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * diag;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd step;
      bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
      if (solved) {
        step = ldlt.solve(-g);
        solved = step.allFinite();
      }
      if (!solved) {
        if (lambda >= opts.lambda_max)
          throw Error(ErrorKind::SingularSystem,
                      "damped normal matrix is singular at lambda = " + std::to_string(lambda));
        lambda = std::min(lambda * opts.lambda_up, opts.lambda_max);
        continue;
      }
      const bool small_step = step.norm() <= opts.tol * (1.0 + out.x.norm());
      const Eigen::VectorXd trial = out.x + step;
      const Eigen::VectorXd r = residual(trial);
      const double trial_cost = r.allFinite() ? r.squaredNorm() : INFINITY;
      if (trial_cost < cost) {
        out.x = trial;
        out.residual = r;
        cost = trial_cost;
        lambda = std::max(lambda / opts.lambda_down, 1e-300);
        accepted = true;
      }
      if (first && small_step) {
        ++out.iterations;
        out.residual_norm = out.residual.lpNorm<Eigen::Infinity>();
        out.converged = true;
        return out;
      }
      if (accepted) break;
      if (lambda >= opts.lambda_max) {
        out.residual_norm = out.residual.lpNorm<Eigen::Infinity>();
        return out;
      }
      lambda = std::min(lambda * opts.lambda_up, opts.lambda_max);
    }
  }
  out.residual_norm = out.residual.lpNorm<Eigen::Infinity>();
  out.converged = out.residual_norm <= opts.tol;
  return out;
}

}  // namespace momentest::estimate

#endif
