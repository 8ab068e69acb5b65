#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "codareg/composition.hpp"
#include "codareg/dataset.hpp"
#include "codareg/errors.hpp"

namespace codareg {

using Eigen::MatrixXd;

enum class ModeratorKind { none, numeric, binary };
enum class ResponseTransform { identity, log };

/// Declarative description of which model family to build: log-contrast
/// only, with a total, with a moderator, or the full moderated-total model.
struct ModelSpec {
  LogBase log_base = LogBase::two();
  bool include_total = false;
  ModeratorKind moderator = ModeratorKind::none;
  bool center_covariates = true;
  ResponseTransform response_transform = ResponseTransform::identity;
  std::optional<std::string> offset_column;  // presence enables the offset
  std::vector<std::string> part_names;

  bool has_moderator() const { return moderator != ModeratorKind::none; }
  bool has_offset() const { return offset_column.has_value(); }
};

enum class Role { intercept, comp, moderator, interaction, total, total_interaction };

struct Column {
  Role role;
  int part = -1;  // part index for comp/interaction columns
  std::string name;
};

inline std::string coef_name(Role role, int part, const std::vector<std::string>& part_names) {
  auto pname = [&](int j) {
    return (j >= 0 && j < static_cast<int>(part_names.size()))
               ? part_names[j]
               : "x" + std::to_string(j + 1);
  };
  switch (role) {
    case Role::intercept: return "beta_0";
    case Role::comp: return "beta[" + pname(part) + "]";
    case Role::moderator: return "beta_z";
    case Role::interaction: return "beta_i[" + pname(part) + "]";
    case Role::total: return "beta_t";
    case Role::total_interaction: return "beta_ti";
  }
  return "?";
}

/// Column metadata of a built design: roles, zero-sum constraint blocks and
/// the centers that were subtracted. Fits carry this so that coefficient
/// indices stay meaningful without the data.
struct DesignInfo {
  std::vector<Column> columns;
  std::vector<std::vector<int>> constraint_blocks;
  VectorXd centers;
  std::vector<std::string> part_names;
  bool has_offset = false;
  int D = 0;

  int p() const { return static_cast<int>(columns.size()); }

  int find(Role role, int part = -1) const {
    for (int i = 0; i < p(); ++i)
      if (columns[i].role == role && (part < 0 || columns[i].part == part)) return i;
    return -1;
  }

  int require(Role role, int part = -1) const {
    const int i = find(role, part);
    if (i < 0) throw UnknownColumn(coef_name(role, part, part_names));
    return i;
  }

  bool has(Role role) const { return find(role) >= 0; }
};

struct DesignMatrix {
  MatrixXd values;  // n x p
  DesignInfo info;
  std::optional<VectorXd> offset;  // log_b of offset values

  Eigen::Index n() const { return values.rows(); }
  int p() const { return static_cast<int>(values.cols()); }
};

namespace detail {

inline DesignMatrix assemble_design(const Dataset& data, const ModelSpec& spec,
                                    const VectorXd* frozen_centers) {
  data.check_consistent();
  const auto n = static_cast<Eigen::Index>(data.n());
  const int D = data.D();
  if (n == 0 || D < 2) throw Error(ErrorCode::invalid_data, "empty dataset");

  // Raw base columns.
  MatrixXd logs(n, D);
  VectorXd zcol(n), tcol(n);
  const bool want_z = spec.has_moderator();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = data.rows[i];
    for (int j = 0; j < D; ++j) logs(i, j) = spec.log_base.log(r.comp[j]);
    tcol[i] = logs.row(i).sum();
    if (want_z) {
      if (!r.moderator) throw MissingModerator(i);
      zcol[i] = *r.moderator;
      if (spec.moderator == ModeratorKind::binary && zcol[i] != 0.0 && zcol[i] != 1.0)
        throw InvalidModerator(i);
    }
  }

  // Column order is a public contract: intercept, comp(1..D), moderator,
  // interaction(1..D), total, total_interaction, as enabled.
  DesignInfo info;
  info.part_names = spec.part_names;
  info.D = D;
  info.columns.push_back({Role::intercept, -1, coef_name(Role::intercept, -1, spec.part_names)});
  for (int j = 0; j < D; ++j)
    info.columns.push_back({Role::comp, j, coef_name(Role::comp, j, spec.part_names)});
  if (want_z)
    info.columns.push_back({Role::moderator, -1, coef_name(Role::moderator, -1, spec.part_names)});
  if (want_z)
    for (int j = 0; j < D; ++j)
      info.columns.push_back({Role::interaction, j, coef_name(Role::interaction, j, spec.part_names)});
  if (spec.include_total)
    info.columns.push_back({Role::total, -1, coef_name(Role::total, -1, spec.part_names)});
  if (spec.include_total && want_z)
    info.columns.push_back({Role::total_interaction, -1,
                            coef_name(Role::total_interaction, -1, spec.part_names)});
  const int p = info.p();

  // Centers. Base columns are centered before interaction products are
  // formed; a binary moderator stays on its 0/1 coding so beta_z reads as
  // the level-0 -> 1 effect. Interaction columns are never re-centered.
  info.centers = VectorXd::Zero(p);
  if (frozen_centers) {
    if (frozen_centers->size() != p)
      throw DimensionMismatch("frozen centers have wrong length");
    info.centers = *frozen_centers;
  } else if (spec.center_covariates) {
    for (int c = 0; c < p; ++c) {
      const Column& col = info.columns[c];
      if (col.role == Role::comp) info.centers[c] = logs.col(col.part).mean();
      else if (col.role == Role::total) info.centers[c] = tcol.mean();
      else if (col.role == Role::moderator && spec.moderator == ModeratorKind::numeric)
        info.centers[c] = zcol.mean();
    }
  }

  MatrixXd X(n, p);
  VectorXd zused = zcol;
  if (want_z) {
    const int zc = info.find(Role::moderator);
    zused = zcol.array() - info.centers[zc];
  }
  for (int c = 0; c < p; ++c) {
    const Column& col = info.columns[c];
    switch (col.role) {
      case Role::intercept: X.col(c).setOnes(); break;
      case Role::comp: X.col(c) = logs.col(col.part).array() - info.centers[c]; break;
      case Role::moderator: X.col(c) = zused; break;
      case Role::interaction: {
        const int base = info.require(Role::comp, col.part);
        X.col(c) = zused.array() * X.col(base).array();
        break;
      }
      case Role::total: X.col(c) = tcol.array() - info.centers[c]; break;
      case Role::total_interaction: {
        const int base = info.require(Role::total);
        X.col(c) = zused.array() * X.col(base).array();
        break;
      }
    }
  }

  std::vector<int> comp_block, inter_block;
  for (int c = 0; c < p; ++c) {
    if (info.columns[c].role == Role::comp) comp_block.push_back(c);
    if (info.columns[c].role == Role::interaction) inter_block.push_back(c);
  }
  info.constraint_blocks.push_back(comp_block);
  if (!inter_block.empty()) info.constraint_blocks.push_back(inter_block);

  DesignMatrix dm;
  dm.values = std::move(X);
  if (spec.has_offset()) {
    VectorXd off(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = data.rows[i];
      if (!r.offset || !(*r.offset > 0.0)) throw MissingOffset(i);
      off[i] = spec.log_base.log(*r.offset);
    }
    dm.offset = std::move(off);
    info.has_offset = true;
  }
  dm.info = std::move(info);
  return dm;
}

}  // namespace detail

/// Build the design for `spec`, computing centers from `data`.
inline DesignMatrix build_design(const Dataset& data, const ModelSpec& spec) {
  return detail::assemble_design(data, spec, nullptr);
}

/// Build a design for new data reusing the centers stored in `info`
/// (prediction must not re-center).
inline DesignMatrix apply_design(const Dataset& data, const ModelSpec& spec,
                                 const DesignInfo& info) {
  return detail::assemble_design(data, spec, &info.centers);
}

/// The response on the model scale: identity, or log_b with positivity
/// checked. A configured offset enters the linear predictor with a fixed
/// unit coefficient, so it is subtracted here for the Gaussian backends.
inline VectorXd response_vector(const Dataset& data, const ModelSpec& spec,
                                const std::optional<VectorXd>& offset = std::nullopt) {
  VectorXd y(static_cast<Eigen::Index>(data.n()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = data.rows[i].response;
    if (spec.response_transform == ResponseTransform::log) {
      if (!(v > 0.0))
        throw Error(ErrorCode::invalid_data,
                    "log response requires strictly positive values (row " +
                        std::to_string(i) + ")");
      y[i] = spec.log_base.log(v);
    } else {
      y[i] = v;
    }
  }
  if (offset) {
    if (offset->size() != y.size()) throw DimensionMismatch("offset length");
    y -= *offset;
  }
  return y;
}

/// Validated nonnegative integer counts for the ZINB backend.
inline VectorXd count_response(const Dataset& data) {
  VectorXd y(static_cast<Eigen::Index>(data.n()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = data.rows[i].response;
    if (v < 0.0) throw NegativeCount(i);
    if (std::floor(v) != v) throw NonIntegerCount(i);
    y[i] = v;
  }
  return y;
}

inline VectorXd linear_predictor(const DesignMatrix& X, const VectorXd& coef) {
  if (coef.size() != X.values.cols()) throw DimensionMismatch("coefficient length");
  VectorXd eta = X.values * coef;
  if (X.offset) eta += *X.offset;
  return eta;
}

/// Split an unconstrained log-part coefficient vector gamma into the
/// zero-sum compositional part and the constant total part:
/// beta_t = mean(gamma), beta_j = gamma_j - beta_t.
inline std::pair<VectorXd, double> decompose_total(const VectorXd& gamma) {
  if (gamma.size() < 2) throw TooFewParts(static_cast<int>(gamma.size()));
  const double beta_t = gamma.mean();
  return {gamma.array() - beta_t, beta_t};
}

/// Inverse of decompose_total: gamma_j = beta_j + beta_t. Requires the
/// compositional block to sum to zero.
inline VectorXd recompose_total(const VectorXd& beta, double beta_t) {
  const double s = beta.sum();
  if (std::abs(s) > 1e-8) throw NotZeroSum(s);
  return beta.array() + beta_t;
}

}  // namespace codareg
