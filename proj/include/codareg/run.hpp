#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codareg/bayes_fit.hpp"
#include "codareg/config.hpp"
#include "codareg/csv.hpp"
#include "codareg/design.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/interpret.hpp"
#include "codareg/version.hpp"
#include "codareg/zinb.hpp"

namespace codareg {

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
}

/// Table 1 presentation: 3 decimals, probabilities above 0.99 shown as >0.99.
inline std::string fmt_prob(double p) {
  if (p > 0.99) return ">0.99";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

}  // namespace detail

/// A fit reduced to what reports need; also the schema of fit.json so the
/// `report` subcommand can re-render without refitting.
struct FitRecord {
  std::string backend;
  ModelSpec model;
  DesignInfo design;
  VectorXd mean;
  MatrixXd covariance;
  VectorXd sd;
  std::optional<VectorXd> sign_prob;
  bool bayesian = false;
  bool glm_log_link = false;
  double support_threshold = 0.90;
  // backend extras (present where meaningful)
  std::optional<double> sigma2_hat, theta, pi, loglik;
  std::optional<int> df_resid;

  CoefView view() const {
    return {mean, covariance, design, bayesian, glm_log_link};
  }
};

namespace detail {

inline nlohmann::ordered_json model_to_json(const ModelSpec& m) {
  nlohmann::ordered_json j;
  j["log_base"] = m.log_base.value();
  j["include_total"] = m.include_total;
  j["moderator"] = m.moderator == ModeratorKind::none      ? "none"
                   : m.moderator == ModeratorKind::numeric ? "numeric"
                                                           : "binary";
  j["center"] = m.center_covariates;
  j["response_transform"] =
      m.response_transform == ResponseTransform::log ? "log" : "identity";
  j["offset_column"] =
      m.offset_column ? nlohmann::ordered_json(*m.offset_column) : nlohmann::ordered_json(nullptr);
  j["part_names"] = m.part_names;
  return j;
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  ModelSpec m;
  m.log_base = LogBase(j.at("log_base").get<double>());
  m.include_total = j.at("include_total").get<bool>();
  const auto mod = j.at("moderator").get<std::string>();
  m.moderator = mod == "none" ? ModeratorKind::none
               : mod == "numeric" ? ModeratorKind::numeric
                                  : ModeratorKind::binary;
  m.center_covariates = j.at("center").get<bool>();
  m.response_transform = j.at("response_transform").get<std::string>() == "log"
                             ? ResponseTransform::log
                             : ResponseTransform::identity;
  if (!j.at("offset_column").is_null())
    m.offset_column = j.at("offset_column").get<std::string>();
  m.part_names = j.at("part_names").get<std::vector<std::string>>();
  return m;
}

inline std::string role_name(Role r) {
  switch (r) {
    case Role::intercept: return "intercept";
    case Role::comp: return "comp";
    case Role::moderator: return "moderator";
    case Role::interaction: return "interaction";
    case Role::total: return "total";
    case Role::total_interaction: return "total_interaction";
  }
  return "?";
}

inline Role role_from_name(const std::string& s) {
  if (s == "intercept") return Role::intercept;
  if (s == "comp") return Role::comp;
  if (s == "moderator") return Role::moderator;
  if (s == "interaction") return Role::interaction;
  if (s == "total") return Role::total;
  if (s == "total_interaction") return Role::total_interaction;
  throw ConfigError("unknown column role '" + s + "'");
}

}  // namespace detail

inline nlohmann::ordered_json fit_record_to_json(const FitRecord& rec) {
  nlohmann::ordered_json j;
  j["codareg_version"] = kVersion;
  j["backend"] = rec.backend;
  j["model"] = detail::model_to_json(rec.model);
  j["D"] = rec.design.D;
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : rec.design.columns)
    j["columns"].push_back({{"role", detail::role_name(c.role)},
                            {"part", c.part},
                            {"name", c.name}});
  j["constraint_blocks"] = rec.design.constraint_blocks;
  j["centers"] = std::vector<double>(rec.design.centers.data(),
                                     rec.design.centers.data() + rec.design.centers.size());
  j["has_offset"] = rec.design.has_offset;
  j["coefficients"] = std::vector<double>(rec.mean.data(), rec.mean.data() + rec.mean.size());
  j["sd"] = std::vector<double>(rec.sd.data(), rec.sd.data() + rec.sd.size());
  if (rec.sign_prob)
    j["sign_prob"] =
        std::vector<double>(rec.sign_prob->data(), rec.sign_prob->data() + rec.sign_prob->size());
  j["covariance"] = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < rec.covariance.rows(); ++r) {
    std::vector<double> row(rec.covariance.cols());
    for (Eigen::Index c = 0; c < rec.covariance.cols(); ++c) row[c] = rec.covariance(r, c);
    j["covariance"].push_back(row);
  }
  j["bayesian"] = rec.bayesian;
  j["glm_log_link"] = rec.glm_log_link;
  j["support_threshold"] = rec.support_threshold;
  if (rec.sigma2_hat) j["sigma2_hat"] = *rec.sigma2_hat;
  if (rec.df_resid) j["df_resid"] = *rec.df_resid;
  if (rec.theta) j["theta"] = *rec.theta;
  if (rec.pi) j["pi"] = *rec.pi;
  if (rec.loglik) j["loglik"] = *rec.loglik;
  return j;
}

inline FitRecord fit_record_from_json(const nlohmann::json& j) {
  FitRecord rec;
  rec.backend = j.at("backend").get<std::string>();
  rec.model = detail::model_from_json(j.at("model"));
  rec.design.D = j.at("D").get<int>();
  for (const auto& c : j.at("columns"))
    rec.design.columns.push_back({detail::role_from_name(c.at("role").get<std::string>()),
                                  c.at("part").get<int>(),
                                  c.at("name").get<std::string>()});
  rec.design.constraint_blocks =
      j.at("constraint_blocks").get<std::vector<std::vector<int>>>();
  const auto centers = j.at("centers").get<std::vector<double>>();
  rec.design.centers = Eigen::Map<const VectorXd>(centers.data(), centers.size());
  rec.design.has_offset = j.at("has_offset").get<bool>();
  rec.design.part_names = rec.model.part_names;
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  rec.mean = Eigen::Map<const VectorXd>(coef.data(), coef.size());
  const auto sd = j.at("sd").get<std::vector<double>>();
  rec.sd = Eigen::Map<const VectorXd>(sd.data(), sd.size());
  if (j.contains("sign_prob")) {
    const auto sp = j.at("sign_prob").get<std::vector<double>>();
    rec.sign_prob = Eigen::Map<const VectorXd>(sp.data(), sp.size());
  }
  const auto cov = j.at("covariance").get<std::vector<std::vector<double>>>();
  rec.covariance.resize(cov.size(), cov.size());
  for (std::size_t r = 0; r < cov.size(); ++r)
    for (std::size_t c = 0; c < cov[r].size(); ++c) rec.covariance(r, c) = cov[r][c];
  rec.bayesian = j.at("bayesian").get<bool>();
  rec.glm_log_link = j.at("glm_log_link").get<bool>();
  rec.support_threshold = j.at("support_threshold").get<double>();
  if (j.contains("sigma2_hat")) rec.sigma2_hat = j.at("sigma2_hat").get<double>();
  if (j.contains("df_resid")) rec.df_resid = j.at("df_resid").get<int>();
  if (j.contains("theta")) rec.theta = j.at("theta").get<double>();
  if (j.contains("pi")) rec.pi = j.at("pi").get<double>();
  if (j.contains("loglik")) rec.loglik = j.at("loglik").get<double>();
  return rec;
}

/// Machine coefficient table: full precision, one row per coefficient.
inline std::string coefficients_csv(const FitRecord& rec) {
  std::string out = "name,mean,sd,sign_prob\n";
  for (int c = 0; c < rec.design.p(); ++c) {
    out += rec.design.columns[c].name + "," + detail::fmt17(rec.mean[c]) + "," +
           detail::fmt17(rec.sd[c]) + ",";
    if (rec.sign_prob) out += detail::fmt17((*rec.sign_prob)[c]);
    out += "\n";
  }
  return out;
}

/// Human coefficient table: mean plus one uncertainty column, three
/// decimals, mirroring the two-column presentation of the case study.
inline std::string coefficients_text(const FitRecord& rec) {
  std::size_t w = 11;
  for (const auto& c : rec.design.columns) w = std::max(w, c.name.size());
  const bool probs = rec.sign_prob.has_value();
  std::string head = "coefficient";
  head.append(w - head.size(), ' ');
  std::string out = head + "      mean" + (probs ? "    prob" : "      sd") + "\n";
  for (int c = 0; c < rec.design.p(); ++c) {
    std::string name = rec.design.columns[c].name;
    name.append(w - name.size(), ' ');
    char mean[32];
    std::snprintf(mean, sizeof(mean), "%10.3f", rec.mean[c]);
    std::string unc;
    if (probs) {
      unc = detail::fmt_prob((*rec.sign_prob)[c]);
      if (unc.size() < 8) unc.insert(0, 8 - unc.size(), ' ');
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%8.3f", rec.sd[c]);
      unc = buf;
    }
    out += name + mean + unc + "\n";
  }
  return out;
}

struct RunOutputs {
  std::filesystem::path out_dir;
  std::vector<std::string> files;
  std::optional<std::string> elasticity_skipped;
};

/// Execute a full pipeline: load, lag, design, fit, report. All outputs are
/// a pure function of (config, seed); nothing nondeterministic (clocks,
/// pointers, locales) may reach any output byte.
inline RunOutputs run(const RunConfig& cfg) {
  Dataset raw = load_csv(cfg.input, cfg.columns);
  const std::size_t rows_read = raw.rows.size() + raw.rows_dropped_missing;
  Dataset data = cfg.lag > 0 ? apply_lag(raw, cfg.lag) : std::move(raw);
  if (data.rows.empty()) throw Error(ErrorCode::invalid_data, "no usable rows after load/lag");

  const DesignMatrix dm = build_design(data, cfg.model);

  FitRecord rec;
  rec.backend = backend_name(cfg.backend);
  rec.model = cfg.model;
  rec.design = dm.info;
  rec.support_threshold = cfg.support_threshold;
  switch (cfg.backend) {
    case Backend::freq: {
      const VectorXd y = response_vector(data, cfg.model, dm.offset);
      const FreqFit fit = fit_constrained_ols(dm, y);
      rec.mean = fit.coefficients;
      rec.covariance = fit.covariance;
      rec.sd = fit.covariance.diagonal().array().sqrt();
      rec.sigma2_hat = fit.sigma2_hat;
      rec.df_resid = fit.df_resid;
      break;
    }
    case Backend::bayes_soft: {
      const VectorXd y = response_vector(data, cfg.model, dm.offset);
      PriorSpec prior = cfg.prior;
      prior.constraint_mode = ConstraintMode::soft;
      const PosteriorSummary post = fit_bayes_soft(dm, y, prior, cfg.seed, cfg.sampler);
      rec.mean = post.mean;
      rec.covariance = post.covariance;
      rec.sd = post.sd;
      rec.sign_prob = post.sign_prob;
      rec.bayesian = true;
      break;
    }
    case Backend::bayes_hard: {
      const VectorXd y = response_vector(data, cfg.model, dm.offset);
      PriorSpec prior = cfg.prior;
      prior.constraint_mode = ConstraintMode::hard;
      const PosteriorSummary post = fit_bayes_hard(dm, y, prior, cfg.seed);
      rec.mean = post.mean;
      rec.covariance = post.covariance;
      rec.sd = post.sd;
      rec.sign_prob = post.sign_prob;
      rec.bayesian = true;
      break;
    }
    case Backend::zinb: {
      const GlmFit fit = fit_zinb(data, cfg.model, cfg.zinb_constraint, cfg.seed, cfg.zinb);
      const PosteriorSummary post = to_posterior_summary(fit);
      rec.mean = post.mean;
      rec.covariance = post.covariance;
      rec.sd = post.sd;
      rec.sign_prob = post.sign_prob;
      rec.bayesian = true;
      rec.glm_log_link = true;
      rec.theta = fit.params.theta();
      rec.pi = fit.params.pi();
      rec.loglik = fit.loglik;
      break;
    }
  }

  RunOutputs out;
  out.out_dir = cfg.out_dir;
  std::filesystem::create_directories(out.out_dir);

  detail::write_file(out.out_dir / "coefficients.csv", coefficients_csv(rec));
  out.files.push_back("coefficients.csv");
  detail::write_file(out.out_dir / "coefficients.txt", coefficients_text(rec));
  out.files.push_back("coefficients.txt");
  detail::write_file(out.out_dir / "fit.json", fit_record_to_json(rec).dump(2) + "\n");
  out.files.push_back("fit.json");

  try {
    const ElasticityReport rep =
        elasticity_report(rec.view(), cfg.model, cfg.support_threshold);
    detail::write_file(out.out_dir / "elasticity.json", to_json(rep).dump(2) + "\n");
    out.files.push_back("elasticity.json");
    detail::write_file(out.out_dir / "elasticity.txt", render_text(rep));
    out.files.push_back("elasticity.txt");
  } catch (const NotLogScale& e) {
    out.elasticity_skipped = e.what();
  }

  nlohmann::ordered_json manifest;
  manifest["codareg_version"] = kVersion;
  const auto resolved = resolved_config_json(cfg);
  manifest["config"] = resolved;
  manifest["config_hash"] = detail::hex64(detail::fnv1a(resolved.dump()));
  manifest["seed"] = cfg.seed;
  manifest["data"]["rows_read"] = rows_read;
  manifest["data"]["rows_dropped_missing"] = data.rows_dropped_missing;
  manifest["data"]["rows_dropped_by_lag"] = data.rows_dropped_by_lag;
  manifest["data"]["rows_used"] = data.rows.size();
  manifest["data"]["D"] = dm.info.D;
  manifest["outputs"] = out.files;
  if (out.elasticity_skipped)
    manifest["elasticity_skipped"] = *out.elasticity_skipped;
  detail::write_file(out.out_dir / "manifest.json", manifest.dump(2) + "\n");
  out.files.push_back("manifest.json");
  return out;
}

/// Re-render reports from a stored fit.json without refitting.
inline RunOutputs run_report(const std::string& fit_path, const std::string& out_dir) {
  std::ifstream in(fit_path);
  if (!in) throw IoError("cannot open '" + fit_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in '" + fit_path + "': " + e.what());
  }
  const FitRecord rec = fit_record_from_json(j);

  RunOutputs out;
  out.out_dir = out_dir;
  std::filesystem::create_directories(out.out_dir);
  detail::write_file(out.out_dir / "coefficients.csv", coefficients_csv(rec));
  out.files.push_back("coefficients.csv");
  detail::write_file(out.out_dir / "coefficients.txt", coefficients_text(rec));
  out.files.push_back("coefficients.txt");
  try {
    const ElasticityReport rep =
        elasticity_report(rec.view(), rec.model, rec.support_threshold);
    detail::write_file(out.out_dir / "elasticity.json", to_json(rep).dump(2) + "\n");
    out.files.push_back("elasticity.json");
    detail::write_file(out.out_dir / "elasticity.txt", render_text(rep));
    out.files.push_back("elasticity.txt");
  } catch (const NotLogScale& e) {
    out.elasticity_skipped = e.what();
  }
  return out;
}

inline int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e))
    return static_cast<int>(err->code());
  return static_cast<int>(ErrorCode::generic);
}

}  // namespace codareg
