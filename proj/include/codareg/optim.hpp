#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <limits>

namespace codareg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct OptimOptions {
  double grad_tol = 1e-8;  // convergence on the max-norm of the gradient
  int max_iter = 500;
  int max_linesearch = 60;
};

struct OptimResult {
  VectorXd x;
  double f = std::numeric_limits<double>::quiet_NaN();
  VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

/// BFGS with an interpolating Armijo line search. The first trial step in a
/// search direction is refined by exact quadratic interpolation, so on
/// quadratic objectives the search is effectively exact and BFGS terminates
/// in a handful of iterations even under severe ill-conditioning (the
/// penalty-method oracle runs at lambda = 1e10).
inline OptimResult minimize_bfgs(const std::function<double(const VectorXd&)>& f,
                                 const std::function<VectorXd(const VectorXd&)>& grad,
                                 VectorXd x0, const OptimOptions& opts = {}) {
  const int dim = static_cast<int>(x0.size());
  OptimResult res;
  res.x = std::move(x0);
  res.f = f(res.x);
  res.grad = grad(res.x);

  MatrixXd H = MatrixXd::Identity(dim, dim);  // inverse Hessian approximation
  bool scaled = false;
  const double c1 = 1e-4;

  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    if (res.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      return res;
    }
    VectorXd d = -(H * res.grad);
    double dphi0 = res.grad.dot(d);
    if (!(dphi0 < 0.0)) {  // not a descent direction: reset to steepest descent
      H.setIdentity();
      scaled = false;
      d = -res.grad;
      dphi0 = res.grad.dot(d);
    }

    // Line search.
    double alpha = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_new = res.x + alpha * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.f + c1 * alpha * dphi0) {
        accepted = true;
        break;
      }
      double a_next;
      if (std::isfinite(f_new)) {
        // Minimizer of the quadratic through phi(0), phi'(0), phi(alpha);
        // exact when the objective is quadratic along d.
        const double denom = 2.0 * (f_new - res.f - dphi0 * alpha);
        a_next = denom > 0.0 ? -dphi0 * alpha * alpha / denom : 0.5 * alpha;
      } else {
        a_next = 0.5 * alpha;
      }
      alpha = std::min(0.9 * alpha, std::max(1e-4 * alpha, a_next));
      if (alpha < 1e-20) break;
    }
    if (!accepted) {
      return res;  // stuck; caller inspects converged/grad
    }

    const VectorXd g_new = grad(x_new);
    const VectorXd s = x_new - res.x;
    const VectorXd yv = g_new - res.grad;
    const double sy = s.dot(yv);
    res.x = std::move(x_new);
    res.f = f_new;
    res.grad = g_new;

    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        H *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const VectorXd Hy = H * yv;
      // BFGS inverse update: H <- (I - rho s y')H(I - rho y s') + rho s s'
      H -= rho * (Hy * s.transpose() + s * Hy.transpose());
      H += (rho * rho * yv.dot(Hy) + rho) * (s * s.transpose());
    }
  }
  res.iterations = opts.max_iter;
  res.converged = res.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol;
  return res;
}

}  // namespace codareg
