#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "codareg/design.hpp"
#include "codareg/rng.hpp"

namespace codareg {

enum class SynthFamily { linear, zinb };

/// Generator settings for synthetic datasets following the moderated-total
/// model families: Gaussian on the (possibly log) response scale, or
/// zero-inflated negative binomial counts.
struct SynthSpec {
  int n = 200;
  ModelSpec model;                 // log base, total/moderator switches, transform
  SynthFamily family = SynthFamily::linear;
  double beta0 = 0.0;
  VectorXd beta;                   // compositional block, recentred if needed
  std::optional<VectorXd> beta_i;  // interaction block, recentred if needed
  double beta_t = 0.0;
  double beta_z = 0.0;
  double beta_ti = 0.0;
  double sigma2 = 1.0;             // linear family
  double theta = 1.5;              // zinb family
  double pi = 0.2;
  VectorXd part_log_mean;          // length D
  double part_log_sd = 0.5;
  double binary_rate = 0.16;       // share of moderator-on days
  std::optional<std::pair<double, double>> offset_log;  // (mean, sd) of log offset
  std::uint64_t seed = 0;

  int D() const { return static_cast<int>(part_log_mean.size()); }
};

/// Every generating parameter, recorded next to the dataset. Coefficients
/// are also laid out in design column order so tests can compare fits
/// directly.
struct SynthTruth {
  VectorXd coef;  // design order
  std::vector<std::string> coef_names;
  double beta0 = 0.0, beta_t = 0.0, beta_z = 0.0, beta_ti = 0.0;
  VectorXd beta;
  std::optional<VectorXd> beta_i;
  double sigma2 = 0.0, theta = 0.0, pi = 0.0;
  bool recentred = false;  // input blocks were not zero-sum and were shifted
  std::uint64_t seed = 0;
};

/// Draw covariates (log-normal parts, Bernoulli/normal moderator), build the
/// design exactly as the fitting side will, and generate the response from
/// the requested family on the linear predictor.
inline std::pair<Dataset, SynthTruth> synth_generate(const SynthSpec& spec) {
  const int D = spec.D();
  if (D < 2) throw TooFewParts(D);
  if (spec.beta.size() != D) throw DimensionMismatch("beta length vs D");
  Rng rng(spec.seed);

  SynthTruth truth;
  truth.seed = spec.seed;
  truth.beta0 = spec.beta0;
  truth.beta_t = spec.beta_t;
  truth.beta_z = spec.beta_z;
  truth.beta_ti = spec.beta_ti;
  truth.beta = spec.beta;
  if (std::abs(truth.beta.sum()) > 1e-12) {
    truth.beta = truth.beta.array() - truth.beta.mean();
    truth.recentred = true;
  }
  if (spec.model.has_moderator()) {
    VectorXd bi = spec.beta_i.value_or(VectorXd::Zero(D));
    if (bi.size() != D) throw DimensionMismatch("beta_i length vs D");
    if (std::abs(bi.sum()) > 1e-12) {
      bi = bi.array() - bi.mean();
      truth.recentred = true;
    }
    truth.beta_i = bi;
  }

  Dataset data;
  data.rows.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    VectorXd parts(D);
    for (int j = 0; j < D; ++j)
      parts[j] = std::exp(rng.normal(spec.part_log_mean[j], spec.part_log_sd));
    Observation obs{Composition(parts)};
    if (spec.model.moderator == ModeratorKind::binary)
      obs.moderator = rng.bernoulli(spec.binary_rate) ? 1.0 : 0.0;
    else if (spec.model.moderator == ModeratorKind::numeric)
      obs.moderator = rng.normal();
    if (spec.offset_log)
      obs.offset = std::exp(rng.normal(spec.offset_log->first, spec.offset_log->second));
    obs.response = 1.0;  // placeholder until the predictor is known
    data.rows.push_back(std::move(obs));
  }

  const DesignMatrix dm = build_design(data, spec.model);
  VectorXd coef = VectorXd::Zero(dm.p());
  for (int c = 0; c < dm.p(); ++c) {
    const Column& col = dm.info.columns[c];
    switch (col.role) {
      case Role::intercept: coef[c] = spec.beta0; break;
      case Role::comp: coef[c] = truth.beta[col.part]; break;
      case Role::moderator: coef[c] = spec.beta_z; break;
      case Role::interaction: coef[c] = (*truth.beta_i)[col.part]; break;
      case Role::total: coef[c] = spec.beta_t; break;
      case Role::total_interaction: coef[c] = spec.beta_ti; break;
    }
  }
  truth.coef = coef;
  for (const auto& col : dm.info.columns) truth.coef_names.push_back(col.name);

  const VectorXd eta = linear_predictor(dm, coef);
  if (spec.family == SynthFamily::linear) {
    truth.sigma2 = spec.sigma2;
    const double sd = std::sqrt(spec.sigma2);
    for (int i = 0; i < spec.n; ++i) {
      const double val = eta[i] + (sd > 0.0 ? rng.normal(0.0, sd) : 0.0);
      data.rows[i].response =
          spec.model.response_transform == ResponseTransform::log
              ? spec.model.log_base.exp(val)
              : val;
    }
  } else {
    truth.theta = spec.theta;
    truth.pi = spec.pi;
    for (int i = 0; i < spec.n; ++i) {
      const double mu = std::exp(eta[i]);
      const bool structural_zero = rng.bernoulli(spec.pi);
      data.rows[i].response =
          structural_zero ? 0.0
                          : static_cast<double>(rng.negative_binomial(mu, spec.theta));
    }
  }
  return {std::move(data), std::move(truth)};
}

}  // namespace codareg
