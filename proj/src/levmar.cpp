/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/levmar.hpp"

#include <cmath>

#include "imucal/error.hpp"

namespace imucal {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd probe = x;
  Eigen::MatrixXd jac;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const Eigen::VectorXd hi = fn(probe);
    probe(i) = x(i) - h;
    const Eigen::VectorXd lo = fn(probe);
    probe(i) = x(i);
    if (jac.size() == 0) jac.resize(hi.size(), n);
    jac.col(i) = (hi - lo) / (2.0 * h);
  }
  return jac;
}

LmResult lm_minimize(const ResidualFn& fn, Eigen::VectorXd x0, const LmOptions& opts) {
  LmResult res;
  res.x = std::move(x0);

  Eigen::VectorXd r = fn(res.x);
  res.cost = r.squaredNorm();
  res.cost_trace.push_back(res.cost);

  double lambda = opts.initial_damping;

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const Eigen::MatrixXd jac = numeric_jacobian(fn, res.x, opts.jacobian_step);
    const Eigen::VectorXd gradient = jac.transpose() * r;
    if (gradient.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) {
      res.converged = true;
      return res;
    }

    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd diag = normal.diagonal().cwiseMax(1e-12);

    // Retry with stronger damping until a step improves the cost.
    while (true) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += lambda * diag;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      bool usable = ldlt.info() == Eigen::Success;
      Eigen::VectorXd delta;
      if (usable) {
        delta = ldlt.solve(-gradient);
        usable = delta.allFinite();
      }

      if (usable && delta.norm() < opts.parameter_tolerance * (res.x.norm() + opts.parameter_tolerance)) {
        res.converged = true;
        return res;
      }

      if (usable) {
        const Eigen::VectorXd x_new = res.x + delta;
        const Eigen::VectorXd r_new = fn(x_new);
        const double cost_new = r_new.squaredNorm();
        if (std::isfinite(cost_new) && cost_new < res.cost) {
          const double reduction = res.cost - cost_new;
          res.x = x_new;
          r = r_new;
          res.cost = cost_new;
          res.cost_trace.push_back(res.cost);
          lambda = std::max(lambda * opts.damping_decrease, 1e-12);
          if (reduction <= opts.cost_tolerance * cost_new) {
            res.converged = true;
            return res;
          }
          break;
        }
      }

      lambda *= opts.damping_increase;
      if (lambda > opts.max_damping)
        raise(Errc::diverged, "damping overflow in Levenberg-Marquardt");
    }
  }

  raise(Errc::diverged, "iteration limit reached without meeting tolerances");
}

}  // namespace imucal
