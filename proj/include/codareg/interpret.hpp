#pragma once

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codareg/bayes_fit.hpp"
#include "codareg/design.hpp"
#include "codareg/errors.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/zinb.hpp"

namespace codareg {

/// Coefficient means, covariance and roles, extracted uniformly from any of
/// the fit result types so the interpretation layer has one code path.
struct CoefView {
  VectorXd mean;
  std::optional<MatrixXd> cov;
  DesignInfo design;
  bool bayesian = false;   // sign probabilities are meaningful
  bool glm_log_link = false;
};

inline CoefView coef_view(const FreqFit& f) {
  return {f.coefficients, f.covariance, f.design, false, false};
}
inline CoefView coef_view(const PosteriorSummary& s) {
  return {s.mean, s.covariance, s.design, true, false};
}
inline CoefView coef_view(const GlmFit& g) {
  const auto p = g.params.beta.size();
  return {g.params.beta, MatrixXd(g.approx_cov.topLeftCorner(p, p)), g.design, true,
          true};
}

struct PartEffect {
  std::string part;
  double beta = 0.0;        // compositional share of the elasticity
  double elasticity = 0.0;  // beta_j + beta_t
  double factor_1pct = 1.0; // exact response factor for a 1% bump of the part
  std::optional<double> sd;
  std::optional<double> sign_prob;
  bool supported = false;
  std::optional<double> beta_i;               // interaction share
  std::optional<double> moderated;            // beta_j + beta_t + beta_i_j + beta_ti
  std::optional<double> moderated_factor_1pct;
  std::optional<double> sd_moderated;
  std::optional<double> sign_prob_moderated;
  bool supported_moderated = false;
};

/// Per-part elasticities with their compositional/total decomposition, the
/// per-1% total effect and the moderator semi-elasticity factor. Only
/// meaningful on the log-response scale.
struct ElasticityReport {
  double log_base = 2.0;
  int D = 0;
  bool has_total = false;
  bool has_moderator = false;
  double beta_t = 0.0;
  double scaled_total = 0.0;  // D * beta_t: per-1% total interpretation
  std::optional<double> sd_total, sign_prob_total;
  std::optional<double> beta_z, moderator_factor, sd_z, sign_prob_z;
  std::optional<double> beta_ti, sd_ti, sign_prob_ti;
  double support_threshold = 0.90;
  std::vector<PartEffect> parts;
};

namespace detail {

inline std::optional<double> sd_of_sum(const std::optional<MatrixXd>& cov,
                                       const std::vector<int>& idx) {
  if (!cov) return std::nullopt;
  double v = 0.0;
  for (int a : idx)
    for (int b : idx) v += (*cov)(a, b);
  return v > 0.0 ? std::optional<double>(std::sqrt(v)) : std::optional<double>(0.0);
}

inline std::optional<double> normal_sign_prob(double mean, std::optional<double> sd) {
  if (!sd) return std::nullopt;
  if (!(*sd > 0.0)) return mean == 0.0 ? 0.5 : 1.0;
  boost::math::normal_distribution<double> N(0.0, 1.0);
  const double ppos = boost::math::cdf(N, mean / *sd);
  return std::max(ppos, 1.0 - ppos);
}

}  // namespace detail

inline ElasticityReport elasticity_report(const CoefView& view, const ModelSpec& spec,
                                          double support_threshold = 0.90) {
  if (view.glm_log_link) {
    if (!spec.log_base.is_natural())
      throw NotLogScale(
          "a log-link GLM uses the natural logarithm; covariates must use the "
          "natural base for coefficients to read as elasticities");
  } else if (spec.response_transform != ResponseTransform::log) {
    throw NotLogScale(
        "identity-response coefficients are level effects, not elasticities");
  }

  const DesignInfo& d = view.design;
  ElasticityReport rep;
  rep.log_base = spec.log_base.value();
  rep.D = d.D;
  rep.support_threshold = support_threshold;
  rep.has_total = d.has(Role::total);
  rep.has_moderator = d.has(Role::moderator);

  const int i_t = d.find(Role::total);
  const int i_z = d.find(Role::moderator);
  const int i_ti = d.find(Role::total_interaction);
  rep.beta_t = i_t >= 0 ? view.mean[i_t] : 0.0;
  rep.scaled_total = d.D * rep.beta_t;
  if (i_t >= 0) {
    rep.sd_total = detail::sd_of_sum(view.cov, {i_t});
    if (view.bayesian) rep.sign_prob_total = detail::normal_sign_prob(rep.beta_t, rep.sd_total);
  }
  if (i_z >= 0) {
    rep.beta_z = view.mean[i_z];
    rep.moderator_factor = spec.log_base.exp(*rep.beta_z);
    rep.sd_z = detail::sd_of_sum(view.cov, {i_z});
    if (view.bayesian) rep.sign_prob_z = detail::normal_sign_prob(*rep.beta_z, rep.sd_z);
  }
  if (i_ti >= 0) {
    rep.beta_ti = view.mean[i_ti];
    rep.sd_ti = detail::sd_of_sum(view.cov, {i_ti});
    if (view.bayesian) rep.sign_prob_ti = detail::normal_sign_prob(*rep.beta_ti, rep.sd_ti);
  }

  for (int j = 0; j < d.D; ++j) {
    PartEffect pe;
    pe.part = (j < static_cast<int>(d.part_names.size())) ? d.part_names[j]
                                                          : "x" + std::to_string(j + 1);
    const int i_b = d.require(Role::comp, j);
    pe.beta = view.mean[i_b];
    std::vector<int> main_idx{i_b};
    if (i_t >= 0) main_idx.push_back(i_t);
    pe.elasticity = pe.beta + rep.beta_t;
    pe.factor_1pct = std::pow(1.01, pe.elasticity);
    pe.sd = detail::sd_of_sum(view.cov, main_idx);
    if (view.bayesian) pe.sign_prob = detail::normal_sign_prob(pe.elasticity, pe.sd);
    pe.supported = pe.sign_prob && *pe.sign_prob > support_threshold;

    if (rep.has_moderator) {
      const int i_ij = d.require(Role::interaction, j);
      pe.beta_i = view.mean[i_ij];
      std::vector<int> mod_idx = main_idx;
      mod_idx.push_back(i_ij);
      if (i_ti >= 0) mod_idx.push_back(i_ti);
      pe.moderated =
          pe.elasticity + *pe.beta_i + (i_ti >= 0 ? view.mean[i_ti] : 0.0);
      pe.moderated_factor_1pct = std::pow(1.01, *pe.moderated);
      pe.sd_moderated = detail::sd_of_sum(view.cov, mod_idx);
      if (view.bayesian)
        pe.sign_prob_moderated = detail::normal_sign_prob(*pe.moderated, pe.sd_moderated);
      pe.supported_moderated =
          pe.sign_prob_moderated && *pe.sign_prob_moderated > support_threshold;
    }
    rep.parts.push_back(std::move(pe));
  }
  return rep;
}

inline ElasticityReport elasticity_report(const FreqFit& fit, const ModelSpec& spec,
                                          double threshold = 0.90) {
  return elasticity_report(coef_view(fit), spec, threshold);
}
inline ElasticityReport elasticity_report(const PosteriorSummary& fit,
                                          const ModelSpec& spec, double threshold = 0.90) {
  return elasticity_report(coef_view(fit), spec, threshold);
}
inline ElasticityReport elasticity_report(const GlmFit& fit, const ModelSpec& spec,
                                          double threshold = 0.90) {
  return elasticity_report(coef_view(fit), spec, threshold);
}

struct ModeratedCoefficients {
  VectorXd comp;                // beta_j + z * beta_i_j, sums to zero
  std::optional<double> total;  // beta_t + z * beta_ti
};

/// Log-contrast coefficients at moderator level z: beta_j + z*beta_i_j, and
/// the total coefficient beta_t + z*beta_ti when a total is present.
inline ModeratedCoefficients moderated_coefficients(const CoefView& view, double z) {
  const DesignInfo& d = view.design;
  if (!d.has(Role::moderator)) throw NoModerator();
  ModeratedCoefficients out;
  out.comp.resize(d.D);
  for (int j = 0; j < d.D; ++j)
    out.comp[j] = view.mean[d.require(Role::comp, j)] +
                  z * view.mean[d.require(Role::interaction, j)];
  const int i_t = d.find(Role::total);
  if (i_t >= 0) {
    const int i_ti = d.find(Role::total_interaction);
    out.total = view.mean[i_t] + (i_ti >= 0 ? z * view.mean[i_ti] : 0.0);
  }
  return out;
}

inline ModeratedCoefficients moderated_coefficients(const FreqFit& f, double z) {
  return moderated_coefficients(coef_view(f), z);
}
inline ModeratedCoefficients moderated_coefficients(const PosteriorSummary& f, double z) {
  return moderated_coefficients(coef_view(f), z);
}
inline ModeratedCoefficients moderated_coefficients(const GlmFit& f, double z) {
  return moderated_coefficients(coef_view(f), z);
}

struct DoublingEffect {
  double coefficient_sum = 0.0;  // beta_j + beta_t
  double response_change = 0.0;  // level change (identity response)
  std::optional<double> factor;  // response factor 2^(beta_j+beta_t) on log scale
};

/// Effect of doubling part j while holding the other parts' absolute values
/// fixed. On a log-response model the response is multiplied by
/// 2^(beta_j + beta_t) whatever the base; on an identity-response base-2
/// model the level changes by beta_j + beta_t.
inline DoublingEffect doubling_effect(const CoefView& view, const ModelSpec& spec,
                                      int part_index) {
  const DesignInfo& d = view.design;
  DoublingEffect out;
  const int i_t = d.find(Role::total);
  out.coefficient_sum = view.mean[d.require(Role::comp, part_index)] +
                        (i_t >= 0 ? view.mean[i_t] : 0.0);
  const double log_b_2 = std::log(2.0) / std::log(spec.log_base.value());
  out.response_change = out.coefficient_sum * log_b_2;
  if (spec.response_transform == ResponseTransform::log || view.glm_log_link)
    out.factor = std::pow(2.0, out.coefficient_sum);
  return out;
}

inline DoublingEffect doubling_effect(const FreqFit& f, const ModelSpec& spec, int j) {
  return doubling_effect(coef_view(f), spec, j);
}
inline DoublingEffect doubling_effect(const PosteriorSummary& f, const ModelSpec& spec,
                                      int j) {
  return doubling_effect(coef_view(f), spec, j);
}
inline DoublingEffect doubling_effect(const GlmFit& f, const ModelSpec& spec, int j) {
  return doubling_effect(coef_view(f), spec, j);
}

// -- rendering ----------------------------------------------------------------

namespace detail {

inline std::string fmt3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& x) {
  return x ? fmt3(*x) : "";
}

inline void pad_to(std::string& s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
}

}  // namespace detail

/// Aligned plain-text rendering, 3 decimals.
inline std::string render_text(const ElasticityReport& rep) {
  std::string out;
  out += "Elasticity report (log base " + detail::fmt3(rep.log_base) +
         ", D=" + std::to_string(rep.D) + ")\n";
  if (rep.has_total) {
    out += "total effect: beta_t = " + detail::fmt3(rep.beta_t) +
           "; a 1% rise of total multiplies effects via D*beta_t = " +
           detail::fmt3(rep.scaled_total) + "%";
    if (rep.sign_prob_total) out += " [prob " + detail::fmt_opt(rep.sign_prob_total) + "]";
    out += "\n";
  }
  if (rep.beta_z) {
    out += "moderator effect: beta_z = " + detail::fmt3(*rep.beta_z) +
           "; response factor " + detail::fmt3(*rep.moderator_factor);
    if (rep.sign_prob_z) out += " [prob " + detail::fmt_opt(rep.sign_prob_z) + "]";
    out += "\n";
  }
  if (rep.beta_ti)
    out += "total x moderator: beta_ti = " + detail::fmt3(*rep.beta_ti) +
           (rep.sign_prob_ti ? " [prob " + detail::fmt_opt(rep.sign_prob_ti) + "]" : "") +
           "\n";

  const bool mod = rep.has_moderator;
  out += "\npart          beta  elast.  1%fac.";
  if (rep.parts.size() && rep.parts[0].sd) out += "      sd";
  if (rep.parts.size() && rep.parts[0].sign_prob) out += "    prob  sup";
  if (mod) {
    out += "  | beta_i  elast.z1  1%fac.";
    if (rep.parts.size() && rep.parts[0].sd_moderated) out += "      sd";
    if (rep.parts.size() && rep.parts[0].sign_prob_moderated) out += "    prob  sup";
  }
  out += "\n";
  for (const auto& pe : rep.parts) {
    std::string name = pe.part;
    if (name.size() < 10) name.append(10 - name.size(), ' ');
    std::string b = detail::fmt3(pe.beta), e = detail::fmt3(pe.elasticity),
                f = detail::fmt3(pe.factor_1pct);
    detail::pad_to(b, 8);
    detail::pad_to(e, 7);
    detail::pad_to(f, 7);
    out += name + b + e + f;
    if (pe.sd) {
      std::string s = detail::fmt_opt(pe.sd);
      detail::pad_to(s, 8);
      out += s;
    }
    if (pe.sign_prob) {
      std::string s = detail::fmt_opt(pe.sign_prob);
      detail::pad_to(s, 8);
      out += s + (pe.supported ? "    *" : "     ");
    }
    if (mod) {
      std::string bi = detail::fmt_opt(pe.beta_i), m = detail::fmt_opt(pe.moderated),
                  mf = detail::fmt_opt(pe.moderated_factor_1pct);
      detail::pad_to(bi, 8);
      detail::pad_to(m, 9);
      detail::pad_to(mf, 8);
      out += "  |" + bi + m + mf;
      if (pe.sd_moderated) {
        std::string s = detail::fmt_opt(pe.sd_moderated);
        detail::pad_to(s, 8);
        out += s;
      }
      if (pe.sign_prob_moderated) {
        std::string s = detail::fmt_opt(pe.sign_prob_moderated);
        detail::pad_to(s, 8);
        out += s + (pe.supported_moderated ? "    *" : "     ");
      }
    }
    out += "\n";
  }
  out += "\n('1%fac.' is the exact response factor for a 1% part increase; the\n"
         "elasticity column is its first-order percentage equivalent. '*' marks\n"
         "effects with sign probability above " +
         detail::fmt3(rep.support_threshold) + ".)\n";
  return out;
}

/// Machine-readable rendering with a stable schema.
inline nlohmann::ordered_json to_json(const ElasticityReport& rep) {
  nlohmann::ordered_json j;
  j["log_base"] = rep.log_base;
  j["D"] = rep.D;
  j["has_total"] = rep.has_total;
  j["has_moderator"] = rep.has_moderator;
  j["support_threshold"] = rep.support_threshold;
  j["total"] = {{"beta_t", rep.beta_t}, {"scaled_per_1pct", rep.scaled_total}};
  if (rep.sd_total) j["total"]["sd"] = *rep.sd_total;
  if (rep.sign_prob_total) j["total"]["sign_prob"] = *rep.sign_prob_total;
  if (rep.beta_z) {
    j["moderator"] = {{"beta_z", *rep.beta_z}, {"factor", *rep.moderator_factor}};
    if (rep.sd_z) j["moderator"]["sd"] = *rep.sd_z;
    if (rep.sign_prob_z) j["moderator"]["sign_prob"] = *rep.sign_prob_z;
  }
  if (rep.beta_ti) {
    j["total_interaction"] = {{"beta_ti", *rep.beta_ti}};
    if (rep.sd_ti) j["total_interaction"]["sd"] = *rep.sd_ti;
    if (rep.sign_prob_ti) j["total_interaction"]["sign_prob"] = *rep.sign_prob_ti;
  }
  j["parts"] = nlohmann::ordered_json::array();
  for (const auto& pe : rep.parts) {
    nlohmann::ordered_json p;
    p["part"] = pe.part;
    p["beta"] = pe.beta;
    p["elasticity"] = pe.elasticity;
    p["factor_1pct"] = pe.factor_1pct;
    if (pe.sd) p["sd"] = *pe.sd;
    if (pe.sign_prob) p["sign_prob"] = *pe.sign_prob;
    p["supported"] = pe.supported;
    if (pe.beta_i) {
      p["beta_i"] = *pe.beta_i;
      p["moderated_elasticity"] = *pe.moderated;
      p["moderated_factor_1pct"] = *pe.moderated_factor_1pct;
      if (pe.sd_moderated) p["moderated_sd"] = *pe.sd_moderated;
      if (pe.sign_prob_moderated) p["moderated_sign_prob"] = *pe.sign_prob_moderated;
      p["moderated_supported"] = pe.supported_moderated;
    }
    j["parts"].push_back(std::move(p));
  }
  return j;
}

}  // namespace codareg
