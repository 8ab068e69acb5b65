#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "codareg/design.hpp"
#include "codareg/errors.hpp"

namespace codareg {

/// Orthonormal basis of the zero-sum subspace of R^m (the complement of the
/// ones vector), as Helmert-style columns. Internal machinery for hard
/// constraints; not a user-facing coordinate choice.
inline MatrixXd zero_sum_basis(int m) {
  MatrixXd H = MatrixXd::Zero(m, m - 1);
  for (int k = 1; k < m; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) H(i, k - 1) = s;
    H(k, k - 1) = -s * k;
  }
  return H;
}

/// Basis N of the subspace satisfying all zero-sum block constraints:
/// p x (p - #blocks), orthonormal columns. Unconstrained coordinates come
/// first in their column order, then each block's reduced coordinates.
inline MatrixXd constraint_nullspace(int p, const std::vector<std::vector<int>>& blocks) {
  std::vector<bool> in_block(p, false);
  int reduced = p;
  for (const auto& b : blocks) {
    reduced -= 1;
    for (int c : b) in_block[c] = true;
  }
  MatrixXd N = MatrixXd::Zero(p, reduced);
  int col = 0;
  for (int c = 0; c < p; ++c)
    if (!in_block[c]) N(c, col++) = 1.0;
  for (const auto& b : blocks) {
    const int m = static_cast<int>(b.size());
    const MatrixXd H = zero_sum_basis(m);
    for (int k = 0; k < m - 1; ++k, ++col)
      for (int i = 0; i < m; ++i) N(b[i], col) = H(i, k);
  }
  return N;
}

struct FreqFit {
  VectorXd coefficients;
  MatrixXd covariance;
  double sigma2_hat = 0.0;
  double rss = 0.0;
  int df_resid = 0;
  DesignInfo design;
};

struct TestResult {
  double statistic = 0.0;
  double df_num = 0.0;  // df_den unused for t tests
  double df_den = 0.0;
  double p_value = 1.0;
  std::string hypothesis;
};

namespace detail {

struct CoreFit {
  VectorXd coef;
  MatrixXd cov_unscaled;  // covariance / sigma2
  double rss = 0.0;
  int df = 0;
};

inline void check_rank(const MatrixXd& Z, Eigen::Index n) {
  if (n <= Z.cols()) throw RankDeficient("n must exceed the free parameter count");
  Eigen::JacobiSVD<MatrixXd> svd(Z);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] < 1e-10 * sv[0])
    throw RankDeficient("singular value ratio below 1e-10");
}

/// Least squares under zero-sum blocks via the KKT system
/// [[X'X, C'], [C, 0]]. The (1,1) block of the inverse is the unscaled
/// covariance of the constrained estimator; its block rows sum to zero, so
/// the constraint propagates to the covariance.
inline CoreFit constrained_ls(const MatrixXd& X, const VectorXd& y,
                              const std::vector<std::vector<int>>& blocks) {
  const Eigen::Index n = X.rows();
  const int p = static_cast<int>(X.cols());
  const int k = static_cast<int>(blocks.size());
  if (y.size() != n) throw DimensionMismatch("y length vs design rows");

  check_rank(X * constraint_nullspace(p, blocks), n);

  MatrixXd K = MatrixXd::Zero(p + k, p + k);
  K.topLeftCorner(p, p) = X.transpose() * X;
  for (int b = 0; b < k; ++b)
    for (int c : blocks[b]) K(p + b, c) = K(c, p + b) = 1.0;
  Eigen::FullPivLU<MatrixXd> lu(K);
  if (!lu.isInvertible()) throw RankDeficient("KKT system singular");

  VectorXd rhs = VectorXd::Zero(p + k);
  rhs.head(p) = X.transpose() * y;
  const VectorXd sol = lu.solve(rhs);

  MatrixXd eye = MatrixXd::Zero(p + k, p);
  eye.topLeftCorner(p, p).setIdentity();
  const MatrixXd Binv = lu.solve(eye);

  CoreFit out;
  out.coef = sol.head(p);
  out.cov_unscaled = 0.5 * (Binv.topRows(p) + Binv.topRows(p).transpose());
  out.rss = (y - X * out.coef).squaredNorm();
  out.df = static_cast<int>(n) - (p - k);
  return out;
}

}  // namespace detail

/// Constrained least squares for the log-contrast family: minimizes
/// ||y - X beta||^2 subject to each constraint block summing to zero.
inline FreqFit fit_constrained_ols(const DesignMatrix& X, const VectorXd& y) {
  auto core = detail::constrained_ls(X.values, y, X.info.constraint_blocks);
  FreqFit fit;
  fit.coefficients = std::move(core.coef);
  fit.sigma2_hat = core.rss / core.df;
  fit.covariance = fit.sigma2_hat * core.cov_unscaled;
  fit.rss = core.rss;
  fit.df_resid = core.df;
  fit.design = X.info;
  return fit;
}

/// The alr route to the same estimate: each zero-sum block is
/// reparameterized against a reference part, ordinary least squares is run
/// on the reduced columns, and the D-1 free coefficients are mapped back
/// with beta_ref = -sum(others). Returns the same constrained scale as
/// fit_constrained_ols; the reference choice does not matter.
inline FreqFit fit_alr_ols(const Dataset& data, const ModelSpec& spec, int ref_index) {
  const DesignMatrix dm = build_design(data, spec);
  const int D = dm.info.D;
  if (ref_index < 0 || ref_index >= D) throw RefIndexOutOfRange(ref_index, D);
  const int p = dm.p();
  const Eigen::Index n = dm.n();
  const VectorXd y = response_vector(data, spec, dm.offset);

  // Reduced columns: drop each block's reference column, subtract it from
  // the block's other columns. M maps reduced coefficients back to full.
  std::vector<int> ref_cols;
  for (const auto& block : dm.info.constraint_blocks) ref_cols.push_back(block[ref_index]);
  const auto is_ref = [&](int c) {
    return std::find(ref_cols.begin(), ref_cols.end(), c) != ref_cols.end();
  };
  const auto block_of = [&](int c) -> int {
    for (std::size_t b = 0; b < dm.info.constraint_blocks.size(); ++b)
      for (int m : dm.info.constraint_blocks[b])
        if (m == c) return static_cast<int>(b);
    return -1;
  };

  const int p_red = p - static_cast<int>(ref_cols.size());
  MatrixXd Z(n, p_red);
  MatrixXd M = MatrixXd::Zero(p, p_red);
  int rc = 0;
  for (int c = 0; c < p; ++c) {
    if (is_ref(c)) continue;
    const int b = block_of(c);
    if (b >= 0) {
      Z.col(rc) = dm.values.col(c) - dm.values.col(ref_cols[b]);
      M(c, rc) = 1.0;
      M(ref_cols[b], rc) = -1.0;
    } else {
      Z.col(rc) = dm.values.col(c);
      M(c, rc) = 1.0;
    }
    ++rc;
  }

  detail::check_rank(Z, n);
  Eigen::BDCSVD<MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd alpha = svd.solve(y);
  const VectorXd inv_s2 = svd.singularValues().array().square().inverse();
  const MatrixXd ZtZinv =
      svd.matrixV() * inv_s2.asDiagonal() * svd.matrixV().transpose();

  FreqFit fit;
  fit.coefficients = M * alpha;
  fit.rss = (y - Z * alpha).squaredNorm();
  fit.df_resid = static_cast<int>(n) - p_red;
  fit.sigma2_hat = fit.rss / fit.df_resid;
  fit.covariance = fit.sigma2_hat * (M * ZtZinv * M.transpose());
  fit.design = dm.info;
  return fit;
}

enum class TestBlock { comp, interaction, all_interactions };

/// Joint F test for a coefficient block: refit with the block's columns
/// removed (remaining constraints intact) and compare residual sums of
/// squares. A zero-sum block of size D contributes D-1 free parameters.
inline TestResult f_test_block(const FreqFit& fit, const VectorXd& y,
                               const DesignMatrix& X, TestBlock which) {
  const DesignInfo& info = X.info;
  std::vector<int> drop;
  std::string name;
  switch (which) {
    case TestBlock::comp:
      for (int c = 0; c < info.p(); ++c)
        if (info.columns[c].role == Role::comp) drop.push_back(c);
      name = "H0: all compositional coefficients = 0";
      break;
    case TestBlock::interaction:
      for (int c = 0; c < info.p(); ++c)
        if (info.columns[c].role == Role::interaction) drop.push_back(c);
      name = "H0: all compositional interaction coefficients = 0";
      break;
    case TestBlock::all_interactions:
      for (int c = 0; c < info.p(); ++c)
        if (info.columns[c].role == Role::interaction ||
            info.columns[c].role == Role::total_interaction)
          drop.push_back(c);
      name = "H0: all interaction coefficients = 0";
      break;
  }
  if (drop.empty()) throw UnknownBlock("requested block has no columns in this design");

  // Free parameters removed: a dropped zero-sum block of size m counts m-1,
  // a dropped unconstrained column counts 1.
  const auto in_some_block = [&](int c) {
    for (const auto& block : info.constraint_blocks)
      if (std::find(block.begin(), block.end(), c) != block.end()) return true;
    return false;
  };
  int q = 0;
  std::vector<std::vector<int>> kept_blocks;
  for (const auto& block : info.constraint_blocks) {
    if (std::find(drop.begin(), drop.end(), block[0]) != drop.end())
      q += static_cast<int>(block.size()) - 1;
    else
      kept_blocks.push_back(block);
  }
  for (int c : drop)
    if (!in_some_block(c)) ++q;
  std::vector<int> keep;
  for (int c = 0; c < info.p(); ++c)
    if (std::find(drop.begin(), drop.end(), c) == drop.end()) keep.push_back(c);

  MatrixXd Xr(X.n(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) Xr.col(i) = X.values.col(keep[i]);
  std::vector<std::vector<int>> blocks_r;
  for (const auto& block : kept_blocks) {
    std::vector<int> remapped;
    for (int c : block)
      remapped.push_back(static_cast<int>(
          std::find(keep.begin(), keep.end(), c) - keep.begin()));
    blocks_r.push_back(remapped);
  }
  const auto restricted = detail::constrained_ls(Xr, y, blocks_r);

  TestResult t;
  t.statistic = ((restricted.rss - fit.rss) / q) / (fit.rss / fit.df_resid);
  t.df_num = q;
  t.df_den = fit.df_resid;
  t.hypothesis = name;
  boost::math::fisher_f_distribution<double> F(t.df_num, t.df_den);
  t.p_value = boost::math::cdf(boost::math::complement(F, std::max(0.0, t.statistic)));
  return t;
}

/// Wald t test for a single coefficient. For zero-sum block members the
/// standard error comes from the constrained covariance diagonal, which
/// depends on the constraint; the paper leaves that reference unstated.
inline TestResult t_test_coef(const FreqFit& fit, Role role, int part = -1) {
  const int i = fit.design.require(role, part);
  TestResult t;
  const double se = std::sqrt(fit.covariance(i, i));
  t.statistic = fit.coefficients[i] / se;
  t.df_num = fit.df_resid;
  t.df_den = 0;
  t.hypothesis = "H0: " + fit.design.columns[i].name + " = 0";
  boost::math::students_t_distribution<double> T(fit.df_resid);
  t.p_value = 2.0 * boost::math::cdf(T, -std::abs(t.statistic));
  return t;
}

}  // namespace codareg
