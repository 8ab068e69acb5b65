#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "codareg/bayes_fit.hpp"
#include "codareg/csv.hpp"
#include "codareg/design.hpp"
#include "codareg/errors.hpp"
#include "codareg/zinb.hpp"

namespace codareg {

enum class Backend { freq, bayes_soft, bayes_hard, zinb };

inline std::string backend_name(Backend b) {
  switch (b) {
    case Backend::freq: return "freq";
    case Backend::bayes_soft: return "bayes_soft";
    case Backend::bayes_hard: return "bayes_hard";
    case Backend::zinb: return "zinb";
  }
  return "?";
}

/// Everything a pipeline run needs: input location, column mapping, model
/// shape, backend and its tunables. Parsed from a single JSON file; every
/// field has a default except the input path, the column mapping and the
/// backend.
struct RunConfig {
  std::string input;
  ColumnMapping columns;
  ModelSpec model;
  int lag = 0;
  Backend backend = Backend::freq;
  PriorSpec prior;
  GibbsConfig sampler;
  ZinbConfig zinb;
  ConstraintMode zinb_constraint = ConstraintMode::soft;
  double support_threshold = 0.90;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

namespace detail {

using nlohmann::json;

inline const json& need(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("missing required field '" + ctx + key + "'");
  return j.at(key);
}

inline std::string need_string(const json& j, const std::string& key,
                               const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_string()) throw ConfigError("'" + ctx + key + "' must be a string");
  return v.get<std::string>();
}

inline double opt_number(const json& j, const std::string& key, double fallback,
                         const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError("'" + ctx + key + "' must be a number");
  return j.at(key).get<double>();
}

inline int opt_int(const json& j, const std::string& key, int fallback,
                   const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw ConfigError("'" + ctx + key + "' must be an integer");
  return j.at(key).get<int>();
}

inline bool opt_bool(const json& j, const std::string& key, bool fallback,
                     const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError("'" + ctx + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

inline LogBase parse_log_base(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "2") return LogBase::two();
    if (s == "e") return LogBase::natural();
    if (s == "10") return LogBase::ten();
    throw ConfigError("log_base string must be one of \"2\", \"e\", \"10\"");
  }
  if (v.is_number()) {
    const double b = v.get<double>();
    if (!(b > 1.0)) throw ConfigError("log_base must be > 1");
    return LogBase(b);
  }
  throw ConfigError("log_base must be a number or one of \"2\", \"e\", \"10\"");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::need;
  RunConfig cfg;
  cfg.input = detail::need_string(j, "input", "");

  const auto& cols = need(j, "columns", "");
  if (!need(cols, "parts", "columns.").is_array() || cols.at("parts").size() < 2)
    throw ConfigError("'columns.parts' must list at least 2 part column names");
  for (const auto& p : cols.at("parts")) {
    if (!p.is_string()) throw ConfigError("'columns.parts' entries must be strings");
    cfg.columns.parts.push_back(p.get<std::string>());
  }
  for (std::size_t a = 0; a < cfg.columns.parts.size(); ++a)
    for (std::size_t b = a + 1; b < cfg.columns.parts.size(); ++b)
      if (cfg.columns.parts[a] == cfg.columns.parts[b])
        throw ConfigError("part names must be distinct ('" + cfg.columns.parts[a] + "')");
  cfg.columns.response = detail::need_string(cols, "response", "columns.");
  if (cols.contains("moderator"))
    cfg.columns.moderator = detail::need_string(cols, "moderator", "columns.");
  if (cols.contains("offset"))
    cfg.columns.offset = detail::need_string(cols, "offset", "columns.");
  if (cols.contains("group"))
    cfg.columns.group = detail::need_string(cols, "group", "columns.");
  if (cols.contains("time")) cfg.columns.time = detail::need_string(cols, "time", "columns.");

  const auto& model = need(j, "model", "");
  cfg.model.log_base =
      model.contains("log_base") ? detail::parse_log_base(model.at("log_base")) : LogBase::two();
  cfg.model.include_total = detail::opt_bool(model, "include_total", false, "model.");
  const auto mod = model.contains("moderator")
                       ? detail::need_string(model, "moderator", "model.")
                       : std::string("none");
  if (mod == "none") cfg.model.moderator = ModeratorKind::none;
  else if (mod == "numeric") cfg.model.moderator = ModeratorKind::numeric;
  else if (mod == "binary") cfg.model.moderator = ModeratorKind::binary;
  else throw ConfigError("model.moderator must be one of none|numeric|binary");
  cfg.model.center_covariates = detail::opt_bool(model, "center", true, "model.");
  const auto rt = model.contains("response_transform")
                      ? detail::need_string(model, "response_transform", "model.")
                      : std::string("identity");
  if (rt == "identity") cfg.model.response_transform = ResponseTransform::identity;
  else if (rt == "log") cfg.model.response_transform = ResponseTransform::log;
  else throw ConfigError("model.response_transform must be identity|log");
  cfg.model.offset_column = cfg.columns.offset;
  cfg.model.part_names = cfg.columns.parts;

  cfg.lag = detail::opt_int(j, "lag", 0, "");
  if (cfg.lag < 0) throw ConfigError("lag must be >= 0");
  if (cfg.lag > 0 && (!cfg.columns.group || !cfg.columns.time))
    throw ConfigError("lag > 0 requires 'columns.group' and 'columns.time'");

  const auto backend = detail::need_string(j, "backend", "");
  if (backend == "freq") cfg.backend = Backend::freq;
  else if (backend == "bayes_soft") cfg.backend = Backend::bayes_soft;
  else if (backend == "bayes_hard") cfg.backend = Backend::bayes_hard;
  else if (backend == "zinb") cfg.backend = Backend::zinb;
  else throw ConfigError("backend must be one of freq|bayes_soft|bayes_hard|zinb");

  if (cfg.model.has_moderator() && !cfg.columns.moderator)
    throw ConfigError("model.moderator is set but columns.moderator is not mapped");
  if (cfg.backend == Backend::zinb && cfg.model.response_transform != ResponseTransform::identity)
    throw ConfigError("zinb models counts; leave response_transform at identity");

  if (j.contains("prior")) {
    const auto& pr = j.at("prior");
    cfg.prior.coef_prior_precision =
        detail::opt_number(pr, "coef_precision", cfg.prior.coef_prior_precision, "prior.");
    cfg.prior.intercept_prior_precision = detail::opt_number(
        pr, "intercept_precision", cfg.prior.intercept_prior_precision, "prior.");
    if (pr.contains("soft_variance")) {
      const double sv = detail::opt_number(pr, "soft_variance", 0.0, "prior.");
      if (!(sv > 0.0)) throw ConfigError("prior.soft_variance must be > 0");
      cfg.prior.soft_variance = sv;
    }
    cfg.prior.noise_shape = detail::opt_number(pr, "noise_shape", cfg.prior.noise_shape, "prior.");
    cfg.prior.noise_rate = detail::opt_number(pr, "noise_rate", cfg.prior.noise_rate, "prior.");
  }
  cfg.prior.constraint_mode =
      cfg.backend == Backend::bayes_hard ? ConstraintMode::hard : ConstraintMode::soft;

  if (j.contains("sampler")) {
    const auto& sm = j.at("sampler");
    cfg.sampler.chains = detail::opt_int(sm, "chains", cfg.sampler.chains, "sampler.");
    cfg.sampler.draws = detail::opt_int(sm, "draws", cfg.sampler.draws, "sampler.");
    cfg.sampler.burnin = detail::opt_int(sm, "burnin", cfg.sampler.burnin, "sampler.");
    cfg.sampler.keep_samples =
        detail::opt_bool(sm, "keep_samples", cfg.sampler.keep_samples, "sampler.");
    if (cfg.sampler.chains < 1 || cfg.sampler.draws < 2 || cfg.sampler.burnin < 0)
      throw ConfigError("sampler settings out of range");
  }

  if (j.contains("zinb")) {
    const auto& z = j.at("zinb");
    const auto c = z.contains("constraint") ? detail::need_string(z, "constraint", "zinb.")
                                            : std::string("soft");
    if (c == "soft") cfg.zinb_constraint = ConstraintMode::soft;
    else if (c == "hard") cfg.zinb_constraint = ConstraintMode::hard;
    else throw ConfigError("zinb.constraint must be soft|hard");
    cfg.zinb.restarts = detail::opt_int(z, "restarts", cfg.zinb.restarts, "zinb.");
    cfg.zinb.max_iter = detail::opt_int(z, "max_iter", cfg.zinb.max_iter, "zinb.");
    cfg.zinb.grad_tol = detail::opt_number(z, "grad_tol", cfg.zinb.grad_tol, "zinb.");
  }

  cfg.support_threshold =
      detail::opt_number(j, "support_threshold", cfg.support_threshold, "");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("'seed' must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("out_dir")) cfg.out_dir = detail::need_string(j, "out_dir", "");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

/// The fully-resolved configuration: every tunable, defaults included, in a
/// stable key order. This is what the manifest records.
inline nlohmann::ordered_json resolved_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["input"] = cfg.input;
  j["columns"]["parts"] = cfg.columns.parts;
  j["columns"]["response"] = cfg.columns.response;
  j["columns"]["moderator"] = cfg.columns.moderator ? nlohmann::ordered_json(*cfg.columns.moderator)
                                                    : nlohmann::ordered_json(nullptr);
  j["columns"]["offset"] = cfg.columns.offset ? nlohmann::ordered_json(*cfg.columns.offset)
                                              : nlohmann::ordered_json(nullptr);
  j["columns"]["group"] = cfg.columns.group ? nlohmann::ordered_json(*cfg.columns.group)
                                            : nlohmann::ordered_json(nullptr);
  j["columns"]["time"] = cfg.columns.time ? nlohmann::ordered_json(*cfg.columns.time)
                                          : nlohmann::ordered_json(nullptr);
  j["model"]["log_base"] = cfg.model.log_base.value();
  j["model"]["include_total"] = cfg.model.include_total;
  j["model"]["moderator"] = cfg.model.moderator == ModeratorKind::none      ? "none"
                            : cfg.model.moderator == ModeratorKind::numeric ? "numeric"
                                                                            : "binary";
  j["model"]["center"] = cfg.model.center_covariates;
  j["model"]["response_transform"] =
      cfg.model.response_transform == ResponseTransform::log ? "log" : "identity";
  j["lag"] = cfg.lag;
  j["backend"] = backend_name(cfg.backend);
  j["prior"]["coef_precision"] = cfg.prior.coef_prior_precision;
  j["prior"]["intercept_precision"] = cfg.prior.intercept_prior_precision;
  j["prior"]["soft_variance"] = cfg.prior.soft_variance
                                    ? nlohmann::ordered_json(*cfg.prior.soft_variance)
                                    : nlohmann::ordered_json(nullptr);
  j["prior"]["soft_variance_default_rule"] = "0.001 * block size";
  j["prior"]["noise_shape"] = cfg.prior.noise_shape;
  j["prior"]["noise_rate"] = cfg.prior.noise_rate;
  j["sampler"]["chains"] = cfg.sampler.chains;
  j["sampler"]["draws"] = cfg.sampler.draws;
  j["sampler"]["burnin"] = cfg.sampler.burnin;
  j["sampler"]["keep_samples"] = cfg.sampler.keep_samples;
  j["zinb"]["constraint"] = cfg.zinb_constraint == ConstraintMode::hard ? "hard" : "soft";
  j["zinb"]["restarts"] = cfg.zinb.restarts;
  j["zinb"]["max_iter"] = cfg.zinb.max_iter;
  j["zinb"]["grad_tol"] = cfg.zinb.grad_tol;
  j["support_threshold"] = cfg.support_threshold;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  return j;
}

}  // namespace codareg
