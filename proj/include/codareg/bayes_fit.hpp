#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <optional>
#include <vector>

#include "codareg/design.hpp"
#include "codareg/errors.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/rng.hpp"

namespace codareg {

enum class ConstraintMode { soft, hard, none };

/// Priors for the Bayesian Gaussian linear model. The soft constraint puts
/// sum(beta_B) ~ N(0, soft_variance) on each zero-sum block; by default the
/// variance is 0.001 * block size. The constraint variance is fixed, never
/// scaled by the residual variance: the constraint strength must not depend
/// on noise.
struct PriorSpec {
  double coef_prior_precision = 1e-4;       // tau0 on non-intercept coefficients
  double intercept_prior_precision = 0.0;   // flat by default
  ConstraintMode constraint_mode = ConstraintMode::soft;
  std::optional<double> soft_variance;      // default 0.001 * block size
  double noise_shape = 0.01;                // inverse-gamma a0
  double noise_rate = 0.01;                 // inverse-gamma b0

  double block_soft_variance(std::size_t block_size) const {
    return soft_variance ? *soft_variance : 0.001 * static_cast<double>(block_size);
  }
};

struct GibbsConfig {
  int chains = 4;
  int draws = 5000;   // kept draws per chain
  int burnin = 1000;
  bool keep_samples = true;
};

enum class SummaryMode { analytic, sampled };

/// Posterior summaries per design coefficient. sign_prob is
/// max(P(beta > 0), P(beta < 0)), the evidence summary the reports print.
/// The covariance (analytic, or estimated from pooled draws) backs the
/// uncertainty of coefficient sums in the elasticity report.
struct PosteriorSummary {
  VectorXd mean;
  VectorXd sd;
  VectorXd sign_prob;
  MatrixXd covariance;
  std::optional<MatrixXd> samples;  // pooled draws, s x p, chain-major
  SummaryMode mode = SummaryMode::sampled;
  DesignInfo design;
};

inline double sign_probability(const PosteriorSummary& post, Role role, int part = -1) {
  return post.sign_prob[post.design.require(role, part)];
}

namespace detail {

inline VectorXd prior_precision_diag(const DesignInfo& info, const PriorSpec& prior) {
  VectorXd d(info.p());
  for (int c = 0; c < info.p(); ++c)
    d[c] = info.columns[c].role == Role::intercept ? prior.intercept_prior_precision
                                                   : prior.coef_prior_precision;
  return d;
}

inline void summarize_draws(PosteriorSummary& out, const MatrixXd& draws) {
  const auto s = static_cast<double>(draws.rows());
  out.mean = draws.colwise().mean();
  MatrixXd centered = draws.rowwise() - out.mean.transpose();
  out.covariance = centered.transpose() * centered / (s - 1.0);
  out.sd = out.covariance.diagonal().array().sqrt();
  out.sign_prob.resize(draws.cols());
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    const double pos = (draws.col(c).array() > 0.0).count() / s;
    out.sign_prob[c] = std::max(pos, 1.0 - pos);
  }
}

}  // namespace detail

/// Gaussian linear model with the soft zero-sum constraint, fitted by a
/// two-block Gibbs sampler (beta | sigma2, then sigma2 | beta). Each
/// constraint block contributes a pseudo-observation: response 0, design
/// row = block indicator, noise variance fixed at the block's soft
/// variance. Conditional on sigma2 the coefficient precision is
/// tau0*I + X'X/sigma2 + sum_B c_B c_B'/s_B.
inline PosteriorSummary fit_bayes_soft(const DesignMatrix& X, const VectorXd& y,
                                       const PriorSpec& prior, std::uint64_t seed,
                                       const GibbsConfig& cfg = {}) {
  if (prior.constraint_mode != ConstraintMode::soft) throw NotSoftMode();
  const Eigen::Index n = X.n();
  const int p = X.p();
  if (y.size() != n) throw DimensionMismatch("y length vs design rows");

  MatrixXd prec_fixed = detail::prior_precision_diag(X.info, prior).asDiagonal();
  for (const auto& block : X.info.constraint_blocks) {
    const double s = prior.block_soft_variance(block.size());
    for (int a : block)
      for (int b : block) prec_fixed(a, b) += 1.0 / s;
  }
  const MatrixXd XtX = X.values.transpose() * X.values;
  const VectorXd Xty = X.values.transpose() * y;
  const double a_n = prior.noise_shape + 0.5 * static_cast<double>(n);

  const int total = cfg.chains * cfg.draws;
  MatrixXd draws(total, p);
  int row = 0;
  for (int chain = 0; chain < cfg.chains; ++chain) {
    Rng rng = Rng::stream(seed, chain);
    double sigma2 = (y.array() - y.mean()).square().sum() / std::max<double>(1.0, n - 1);
    if (!(sigma2 > 0.0)) sigma2 = 1.0;
    VectorXd beta = VectorXd::Zero(p);
    for (int it = 0; it < cfg.burnin + cfg.draws; ++it) {
      MatrixXd A = prec_fixed + XtX / sigma2;
      Eigen::LLT<MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) throw SamplerDivergence("precision not PD");
      beta = llt.solve(Xty / sigma2);
      VectorXd z(p);
      for (int j = 0; j < p; ++j) z[j] = rng.normal();
      beta += llt.matrixL().transpose().solve(z);
      const double rss = (y - X.values * beta).squaredNorm();
      sigma2 = rng.inverse_gamma(a_n, prior.noise_rate + 0.5 * rss);
      if (!beta.allFinite() || !std::isfinite(sigma2))
        throw SamplerDivergence("chain " + std::to_string(chain));
      if (it >= cfg.burnin) draws.row(row++) = beta.transpose();
    }
  }

  PosteriorSummary out;
  detail::summarize_draws(out, draws);
  out.mode = SummaryMode::sampled;
  out.design = X.info;
  if (cfg.keep_samples) out.samples = std::move(draws);
  return out;
}

/// Exact-constraint variant: each block is reparameterized onto the
/// orthonormal complement of its ones vector, where the Normal-Inverse-Gamma
/// model is conjugate and the posterior is analytic. Mapped back, block sums
/// are zero by construction and the implied prior covariance is singular.
inline PosteriorSummary fit_bayes_hard(const DesignMatrix& X, const VectorXd& y,
                                       const PriorSpec& prior, std::uint64_t seed = 0,
                                       int sample_draws = 0) {
  if (prior.constraint_mode != ConstraintMode::hard) throw NotHardMode();
  const Eigen::Index n = X.n();
  const int p = X.p();
  if (y.size() != n) throw DimensionMismatch("y length vs design rows");

  const MatrixXd T = constraint_nullspace(p, X.info.constraint_blocks);
  const MatrixXd Z = X.values * T;
  detail::check_rank(Z, n);
  const MatrixXd P0 =
      T.transpose() * detail::prior_precision_diag(X.info, prior).asDiagonal() * T;

  const MatrixXd Pn = P0 + Z.transpose() * Z;
  Eigen::LLT<MatrixXd> llt(Pn);
  if (llt.info() != Eigen::Success) throw RankDeficient("posterior precision not PD");
  const VectorXd mn = llt.solve(Z.transpose() * y);
  const double a_n = prior.noise_shape + 0.5 * static_cast<double>(n);
  const double b_n =
      prior.noise_rate + 0.5 * (y.squaredNorm() - mn.dot(Pn * mn));

  const MatrixXd Sred = llt.solve(MatrixXd::Identity(Pn.rows(), Pn.cols()));
  const MatrixXd scale_full = T * Sred * T.transpose();  // times b_n/a_n = t scale

  PosteriorSummary out;
  out.mode = SummaryMode::analytic;
  out.design = X.info;
  out.mean = T * mn;
  out.covariance = (b_n / (a_n - 1.0)) * scale_full;
  out.sd = out.covariance.diagonal().array().sqrt();
  out.sign_prob.resize(p);
  boost::math::students_t_distribution<double> tdist(2.0 * a_n);
  for (int c = 0; c < p; ++c) {
    const double s = std::sqrt((b_n / a_n) * scale_full(c, c));
    const double ppos = s > 0.0 ? boost::math::cdf(tdist, out.mean[c] / s)
                                : (out.mean[c] > 0.0 ? 1.0 : 0.5);
    out.sign_prob[c] = std::max(ppos, 1.0 - ppos);
  }

  if (sample_draws > 0) {
    Rng rng = Rng::stream(seed, 0);
    MatrixXd draws(sample_draws, p);
    for (int s = 0; s < sample_draws; ++s) {
      const double sigma2 = rng.inverse_gamma(a_n, b_n);
      VectorXd z(mn.size());
      for (Eigen::Index j = 0; j < mn.size(); ++j) z[j] = rng.normal();
      const VectorXd bred = mn + std::sqrt(sigma2) * llt.matrixU().solve(z);
      draws.row(s) = (T * bred).transpose();
    }
    out.samples = std::move(draws);
  }
  return out;
}

/// Split-Rhat over equal-length chains laid out chain-major in `samples`;
/// returns the max across coefficients. Diagnostic only.
inline double max_split_rhat(const MatrixXd& samples, int chains) {
  const int per_chain = static_cast<int>(samples.rows()) / chains;
  const int half = per_chain / 2;
  const int m = 2 * chains;
  double worst = 0.0;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    double grand = 0.0;
    std::vector<double> means(m), vars(m);
    for (int h = 0; h < m; ++h) {
      const auto seg = samples.col(c).segment((h / 2) * per_chain + (h % 2) * half, half);
      means[h] = seg.mean();
      vars[h] = (seg.array() - means[h]).square().sum() / (half - 1);
      grand += means[h];
    }
    grand /= m;
    double B = 0.0, W = 0.0;
    for (int h = 0; h < m; ++h) {
      B += (means[h] - grand) * (means[h] - grand);
      W += vars[h];
    }
    B *= static_cast<double>(half) / (m - 1);
    W /= m;
    const double var_plus = (half - 1.0) / half * W + B / half;
    worst = std::max(worst, std::sqrt(var_plus / W));
  }
  return worst;
}

}  // namespace codareg
