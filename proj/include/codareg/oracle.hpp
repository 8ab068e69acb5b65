#pragma once

#include <Eigen/Dense>
#include <vector>

#include "codareg/errors.hpp"
#include "codareg/optim.hpp"

namespace codareg {

/// Verification oracle for the constrained least squares solvers: minimizes
/// rss + penalty * sum_B (sum beta_B)^2 by generic quasi-Newton from the
/// (minimum-norm) unconstrained OLS start. Deliberately shares no machinery
/// with the KKT and alr solvers it cross-checks; used by tests and the
/// `check` subcommand, not by the fitting pipeline.
inline VectorXd oracle_constrained_ls(const MatrixXd& X, const VectorXd& y,
                                      const std::vector<std::vector<int>>& blocks,
                                      double penalty = 1e10) {
  const MatrixXd XtX = X.transpose() * X;
  const VectorXd Xty = X.transpose() * y;
  const double yty = y.squaredNorm();

  const auto f = [&](const VectorXd& b) {
    double v = yty - 2.0 * Xty.dot(b) + b.dot(XtX * b);
    for (const auto& block : blocks) {
      double s = 0.0;
      for (int c : block) s += b[c];
      v += penalty * s * s;
    }
    return v;
  };
  const auto g = [&](const VectorXd& b) {
    VectorXd grad = 2.0 * (XtX * b - Xty);
    for (const auto& block : blocks) {
      double s = 0.0;
      for (int c : block) s += b[c];
      for (int c : block) grad[c] += 2.0 * penalty * s;
    }
    return grad;
  };

  const VectorXd start =
      X.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
  OptimOptions opts;
  opts.grad_tol = 1e-7 * (1.0 + Xty.lpNorm<Eigen::Infinity>());
  opts.max_iter = 5000;
  const OptimResult res = minimize_bfgs(f, g, start, opts);
  if (!res.converged)
    throw NonConvergence("penalty oracle gradient " +
                         std::to_string(res.grad.lpNorm<Eigen::Infinity>()));
  return res.x;
}

}  // namespace codareg
