/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace imucal {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-12;   // infinity norm of J^T r
  double parameter_tolerance = 1e-10;  // relative step size
  // Relative cost reduction below which an accepted step counts as
  // converged (MINPACK's ftol, roughly sqrt(machine epsilon)). On noisy
  // problems the finite-difference Jacobian otherwise keeps finding
  // microscopic descent directions along near-flat valleys forever.
  double cost_tolerance = 1e-8;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 0.1;
  double max_damping = 1e14;
  double jacobian_step = 1e-7;  // central differences, scaled per parameter
};

struct LmResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // sum of squared residuals at x
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;  // cost after each accepted step
};

/// Central-difference Jacobian with per-parameter step h_i = step * max(1, |x_i|).
Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x, double step);

/// Levenberg-Marquardt with multiplicative damping on diag(J^T J). Only
/// strictly improving steps are accepted, so cost_trace is non-increasing.
/// Throws Errc::diverged on damping overflow or when the iteration limit is
/// reached without meeting either tolerance.
LmResult lm_minimize(const ResidualFn& fn, Eigen::VectorXd x0, const LmOptions& opts = {});

}  // namespace imucal
