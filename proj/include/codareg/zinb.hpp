#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <vector>

#include "codareg/bayes_fit.hpp"
#include "codareg/design.hpp"
#include "codareg/errors.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/optim.hpp"
#include "codareg/rng.hpp"

namespace codareg {

/// Parameters of the zero-inflated negative binomial model: linear
/// predictor coefficients, log of the NB dispersion theta, and the logit of
/// the structural-zero probability pi (scalar, as in the
/// zeroinflatednbinomial1 family the case study fits).
struct ZinbParams {
  VectorXd beta;
  double log_theta = 0.0;
  double logit_pi = -2.0;

  double theta() const { return std::exp(log_theta); }
  double pi() const { return 1.0 / (1.0 + std::exp(-logit_pi)); }
};

struct ZinbConfig {
  int restarts = 5;
  int max_iter = 500;
  double grad_tol = 1e-6;
  double accept_tol = 1e-5;  // NonConvergence if the best gradient exceeds this
};

namespace detail {

inline double log_add(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Log-likelihood in the mean-dispersion parameterization
/// (Var = mu + mu^2/theta). mu/(theta+mu) and theta/(theta+mu) are computed
/// as logistic transforms of eta - u so nothing overflows.
inline double zinb_loglik_raw(const VectorXd& eta, const VectorXd& y, double u,
                              double v) {
  const double theta = std::exp(u);
  const double log_pi = -std::log1p(std::exp(-v));
  const double log_1mpi = -std::log1p(std::exp(v));
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double lse = log_add(u, eta[i]);  // log(theta + mu)
    const double lognb0 = theta * (u - lse);
    if (y[i] == 0.0) {
      ll += log_add(log_pi, log_1mpi + lognb0);
    } else {
      ll += log_1mpi + std::lgamma(y[i] + theta) - std::lgamma(theta) -
            std::lgamma(y[i] + 1.0) + lognb0 + y[i] * (eta[i] - lse);
    }
  }
  return ll;
}

/// Analytic gradient in (eta, u = log theta, v = logit pi); the eta part is
/// returned per observation for the chain rule into beta.
inline void zinb_grad_raw(const VectorXd& eta, const VectorXd& y, double u, double v,
                          VectorXd& d_eta, double& d_u, double& d_v) {
  const double theta = std::exp(u);
  const double pi = sigmoid(v);
  const double log_pi = -std::log1p(std::exp(-v));
  const double log_1mpi = -std::log1p(std::exp(v));
  const double dig_theta = boost::math::digamma(theta);
  d_eta.resize(y.size());
  d_u = 0.0;
  d_v = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double lse = log_add(u, eta[i]);
    const double mu_frac = sigmoid(eta[i] - u);     // mu/(theta+mu)
    const double theta_frac = sigmoid(u - eta[i]);  // theta/(theta+mu)
    if (y[i] == 0.0) {
      const double lognb0 = theta * (u - lse);
      const double la = log_pi;
      const double lb = log_1mpi + lognb0;
      const double ll0 = log_add(la, lb);
      const double w0 = std::exp(lb - ll0);     // (1-pi) f_NB(0) / L0
      const double wpi = std::exp(la - ll0);    // pi / L0
      d_eta[i] = -w0 * theta * mu_frac;
      d_u += w0 * theta * ((u - lse) + mu_frac);
      d_v += wpi * (1.0 - pi) * (1.0 - std::exp(lognb0));
    } else {
      d_eta[i] = y[i] - (y[i] + theta) * mu_frac;
      d_u += theta * (boost::math::digamma(y[i] + theta) - dig_theta + (u - lse) +
                      1.0 - (theta_frac + y[i] * std::exp(-lse)));
      d_v += -pi;
    }
  }
}

inline void validate_counts(const VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) throw NegativeCount(i);
    if (std::floor(y[i]) != y[i]) throw NonIntegerCount(i);
  }
}

}  // namespace detail

inline double zinb_loglik(const ZinbParams& params, const DesignMatrix& X,
                          const VectorXd& y) {
  detail::validate_counts(y);
  const VectorXd eta = linear_predictor(X, params.beta);
  return detail::zinb_loglik_raw(eta, y, params.log_theta, params.logit_pi);
}

/// Gradient of zinb_loglik in (beta, log_theta, logit_pi), length p+2.
inline VectorXd zinb_loglik_grad(const ZinbParams& params, const DesignMatrix& X,
                                 const VectorXd& y) {
  detail::validate_counts(y);
  const VectorXd eta = linear_predictor(X, params.beta);
  VectorXd d_eta;
  double d_u, d_v;
  detail::zinb_grad_raw(eta, y, params.log_theta, params.logit_pi, d_eta, d_u, d_v);
  VectorXd g(params.beta.size() + 2);
  g.head(params.beta.size()) = X.values.transpose() * d_eta;
  g[params.beta.size()] = d_u;
  g[params.beta.size() + 1] = d_v;
  return g;
}

struct GlmFit {
  ZinbParams params;
  double loglik = 0.0;
  MatrixXd hessian;     // of the optimized objective, in optimized coordinates
  MatrixXd approx_cov;  // Laplace covariance mapped to the full p+2 parameters
  bool converged = false;
  int iterations = 0;
  ConstraintMode constraint = ConstraintMode::soft;
  DesignInfo design;
};

namespace detail {

struct ZinbProblem {
  const MatrixXd* X;
  const VectorXd* offset;  // nullable
  const VectorXd* y;
  MatrixXd T;              // full-beta <- reduced-beta map (identity if soft)
  std::vector<std::vector<int>> blocks;
  std::vector<double> soft_var;  // per block; empty in hard mode
  int p_full;

  VectorXd eta(const VectorXd& w) const {
    const VectorXd beta = T * w.head(T.cols());
    VectorXd e = (*X) * beta;
    if (offset) e += *offset;
    return e;
  }

  double objective(const VectorXd& w) const {  // negative penalized loglik
    const double u = w[w.size() - 2], v = w[w.size() - 1];
    double f = -zinb_loglik_raw(eta(w), *y, u, v);
    if (!soft_var.empty()) {
      const VectorXd beta = T * w.head(T.cols());
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        double s = 0.0;
        for (int c : blocks[b]) s += beta[c];
        f += s * s / (2.0 * soft_var[b]);
      }
    }
    return f;
  }

  VectorXd gradient(const VectorXd& w) const {
    const double u = w[w.size() - 2], v = w[w.size() - 1];
    const VectorXd beta = T * w.head(T.cols());
    VectorXd d_eta;
    double d_u, d_v;
    zinb_grad_raw(eta(w), *y, u, v, d_eta, d_u, d_v);
    VectorXd g_beta = -(X->transpose() * d_eta);
    if (!soft_var.empty()) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        double s = 0.0;
        for (int c : blocks[b]) s += beta[c];
        for (int c : blocks[b]) g_beta[c] += s / soft_var[b];
      }
    }
    VectorXd g(w.size());
    g.head(T.cols()) = T.transpose() * g_beta;
    g[w.size() - 2] = -d_u;
    g[w.size() - 1] = -d_v;
    return g;
  }
};

inline MatrixXd fd_hessian(const ZinbProblem& prob, const VectorXd& w) {
  const auto dim = w.size();
  MatrixXd H(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double h = 1e-5 * (1.0 + std::abs(w[j]));
    VectorXd wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    H.col(j) = (prob.gradient(wp) - prob.gradient(wm)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace detail

/// Maximum likelihood for the ZINB model with zero-sum blocks enforced
/// either exactly (reduced coordinates) or through the Gaussian soft
/// penalty. Quasi-Newton with perturbed restarts; the winner is the best
/// (loglik, restart index) pair. The reported Hessian is of the optimized
/// objective: with the total column present the unreduced, unpenalized
/// Hessian is singular along the constraint directions.
inline GlmFit fit_zinb(const Dataset& data, const ModelSpec& spec,
                       ConstraintMode constraint, std::uint64_t seed,
                       const ZinbConfig& cfg = {}) {
  if (constraint == ConstraintMode::none)
    throw Error(ErrorCode::config, "fit_zinb requires a soft or hard constraint mode");
  const DesignMatrix dm = build_design(data, spec);
  const VectorXd y = count_response(data);
  const int p = dm.p();

  detail::ZinbProblem prob;
  prob.X = &dm.values;
  prob.offset = dm.offset ? &*dm.offset : nullptr;
  prob.y = &y;
  prob.blocks = dm.info.constraint_blocks;
  prob.p_full = p;
  if (constraint == ConstraintMode::hard) {
    prob.T = constraint_nullspace(p, dm.info.constraint_blocks);
  } else {
    prob.T = MatrixXd::Identity(p, p);
    for (const auto& block : dm.info.constraint_blocks)
      prob.soft_var.push_back(0.001 * static_cast<double>(block.size()));
  }
  const auto p_red = prob.T.cols();

  // Moment-based starts: constrained LS on log(y + 0.5) for beta, method of
  // moments for theta, the excess-zero fraction for pi.
  VectorXd pseudo = (y.array() + 0.5).log();
  if (dm.offset) pseudo -= *dm.offset;
  const auto start_ls = detail::constrained_ls(dm.values, pseudo, dm.info.constraint_blocks);
  const double ybar = y.mean();
  const double yvar = (y.array() - ybar).square().sum() / std::max<double>(1.0, y.size() - 1);
  const double theta0 =
      std::min(50.0, std::max(0.05, ybar * ybar / std::max(yvar - ybar, 0.1 * ybar)));
  VectorXd mu0 = (dm.values * start_ls.coef);
  if (dm.offset) mu0 += *dm.offset;
  double p0_nb = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    p0_nb += std::exp(theta0 * (std::log(theta0) -
                                detail::log_add(std::log(theta0), mu0[i])));
  p0_nb /= static_cast<double>(y.size());
  const double p0_obs = (y.array() == 0.0).count() / static_cast<double>(y.size());
  const double pi0 =
      std::min(0.8, std::max(0.01, (p0_obs - p0_nb) / std::max(1e-6, 1.0 - p0_nb)));

  VectorXd w0(p_red + 2);
  w0.head(p_red) = prob.T.transpose() * start_ls.coef;
  w0[p_red] = std::log(theta0);
  w0[p_red + 1] = std::log(pi0 / (1.0 - pi0));

  const auto obj = [&prob](const VectorXd& w) { return prob.objective(w); };
  const auto grd = [&prob](const VectorXd& w) { return prob.gradient(w); };

  OptimOptions opts;
  opts.grad_tol = cfg.grad_tol;
  opts.max_iter = cfg.max_iter;

  bool have_best = false;
  OptimResult best;
  for (int r = 0; r < cfg.restarts; ++r) {
    VectorXd w = w0;
    if (r > 0) {
      Rng rng = Rng::stream(seed, r);
      for (Eigen::Index j = 0; j < w.size(); ++j)
        w[j] += 0.25 * (1.0 + std::abs(w[j])) * rng.normal();
    }
    OptimResult res = minimize_bfgs(obj, grd, w, opts);
    if (!std::isfinite(res.f)) continue;
    if (!have_best || res.f < best.f) {
      best = std::move(res);
      have_best = true;
    }
  }
  if (!have_best || best.grad.lpNorm<Eigen::Infinity>() > cfg.accept_tol)
    throw NonConvergence("zinb gradient norm " +
                         std::to_string(have_best ? best.grad.lpNorm<Eigen::Infinity>()
                                                  : std::nan("")) +
                         " after restarts");

  const MatrixXd H_obj = detail::fd_hessian(prob, best.x);  // of -loglik: PD wanted
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H_obj);
  const double floor = 1e-8 * H_obj.norm();
  if (eig.eigenvalues().minCoeff() < -floor)
    throw NonConvergence("reported optimum is not a local maximum");

  MatrixXd cov_red = eig.eigenvectors() *
                     eig.eigenvalues().cwiseMax(floor).cwiseInverse().asDiagonal() *
                     eig.eigenvectors().transpose();
  MatrixXd J = MatrixXd::Zero(p + 2, p_red + 2);
  J.topLeftCorner(p, p_red) = prob.T;
  J(p, p_red) = 1.0;
  J(p + 1, p_red + 1) = 1.0;

  GlmFit fit;
  fit.params.beta = prob.T * best.x.head(p_red);
  fit.params.log_theta = best.x[p_red];
  fit.params.logit_pi = best.x[p_red + 1];
  fit.loglik = detail::zinb_loglik_raw(prob.eta(best.x), y, fit.params.log_theta,
                                       fit.params.logit_pi);
  fit.hessian = -H_obj;  // loglik curvature
  fit.approx_cov = J * cov_red * J.transpose();
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  fit.constraint = constraint;
  fit.design = dm.info;
  return fit;
}

/// Laplace-approximation summary of the linear predictor coefficients, in
/// the same shape the Bayesian backends produce.
inline PosteriorSummary to_posterior_summary(const GlmFit& fit) {
  const auto p = fit.params.beta.size();
  PosteriorSummary out;
  out.mode = SummaryMode::analytic;
  out.design = fit.design;
  out.mean = fit.params.beta;
  out.covariance = fit.approx_cov.topLeftCorner(p, p);
  out.sd = out.covariance.diagonal().array().sqrt();
  out.sign_prob.resize(p);
  boost::math::normal_distribution<double> N(0.0, 1.0);
  for (Eigen::Index c = 0; c < p; ++c) {
    const double s = out.sd[c];
    const double ppos =
        s > 0.0 ? boost::math::cdf(N, out.mean[c] / s) : (out.mean[c] > 0.0 ? 1.0 : 0.5);
    out.sign_prob[c] = std::max(ppos, 1.0 - ppos);
  }
  return out;
}

}  // namespace codareg
