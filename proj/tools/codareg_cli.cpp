// Command-line front end: fit / synth / report / check.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "codareg/codareg.hpp"

namespace {

using namespace codareg;

SynthSpec parse_synth_spec(const nlohmann::json& j) {
  SynthSpec sp;
  sp.n = codareg::detail::opt_int(j, "n", sp.n, "");
  const auto& parts = codareg::detail::need(j, "parts", "");
  if (!parts.is_array() || parts.size() < 2)
    throw ConfigError("'parts' must list at least two part names");
  std::vector<std::string> names = parts.get<std::vector<std::string>>();
  const int D = static_cast<int>(names.size());
  sp.model.part_names = names;

  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("log_base")) sp.model.log_base = codareg::detail::parse_log_base(m.at("log_base"));
    sp.model.include_total = codareg::detail::opt_bool(m, "include_total", false, "model.");
    const auto mod = m.contains("moderator") ? m.at("moderator").get<std::string>()
                                             : std::string("none");
    sp.model.moderator = mod == "none"      ? ModeratorKind::none
                         : mod == "numeric" ? ModeratorKind::numeric
                                            : ModeratorKind::binary;
    sp.model.center_covariates = codareg::detail::opt_bool(m, "center", true, "model.");
    const auto rt = m.contains("response_transform")
                        ? m.at("response_transform").get<std::string>()
                        : std::string("identity");
    sp.model.response_transform =
        rt == "log" ? ResponseTransform::log : ResponseTransform::identity;
  }
  const auto family = j.contains("family") ? j.at("family").get<std::string>()
                                           : std::string("linear");
  if (family == "linear") sp.family = SynthFamily::linear;
  else if (family == "zinb") sp.family = SynthFamily::zinb;
  else throw ConfigError("family must be linear|zinb");

  const auto vec_field = [&](const char* key) -> std::optional<VectorXd> {
    if (!j.contains(key)) return std::nullopt;
    const auto v = j.at(key).get<std::vector<double>>();
    if (static_cast<int>(v.size()) != D)
      throw ConfigError(std::string("'") + key + "' must have one entry per part");
    return Eigen::Map<const VectorXd>(v.data(), v.size());
  };
  sp.beta = vec_field("beta").value_or(VectorXd::Zero(D));
  sp.beta_i = vec_field("beta_i");
  sp.beta0 = codareg::detail::opt_number(j, "beta0", sp.beta0, "");
  sp.beta_t = codareg::detail::opt_number(j, "beta_t", sp.beta_t, "");
  sp.beta_z = codareg::detail::opt_number(j, "beta_z", sp.beta_z, "");
  sp.beta_ti = codareg::detail::opt_number(j, "beta_ti", sp.beta_ti, "");
  sp.sigma2 = codareg::detail::opt_number(j, "sigma2", sp.sigma2, "");
  sp.theta = codareg::detail::opt_number(j, "theta", sp.theta, "");
  sp.pi = codareg::detail::opt_number(j, "pi", sp.pi, "");
  sp.part_log_mean = vec_field("part_log_mean").value_or(VectorXd::Ones(D));
  sp.part_log_sd = codareg::detail::opt_number(j, "part_log_sd", sp.part_log_sd, "");
  sp.binary_rate = codareg::detail::opt_number(j, "binary_rate", sp.binary_rate, "");
  if (j.contains("offset_log_mean") || j.contains("offset_log_sd"))
    sp.offset_log = {codareg::detail::opt_number(j, "offset_log_mean", 0.0, ""),
                     codareg::detail::opt_number(j, "offset_log_sd", 0.0, "")};
  if (j.contains("seed")) sp.seed = j.at("seed").get<std::uint64_t>();
  return sp;
}

int do_synth(const std::string& spec_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override) {
  std::ifstream in(spec_path);
  if (!in) throw IoError("cannot open '" + spec_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in '" + spec_path + "': " + e.what());
  }
  SynthSpec sp = parse_synth_spec(j);
  if (seed_override) sp.seed = *seed_override;
  const auto [data, truth] = synth_generate(sp);

  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_dataset_csv((dir / "data.csv").string(), data, sp.model.part_names);

  nlohmann::ordered_json t;
  t["codareg_version"] = kVersion;
  t["seed"] = truth.seed;
  t["recentred"] = truth.recentred;
  t["coef_names"] = truth.coef_names;
  t["coef"] = std::vector<double>(truth.coef.data(), truth.coef.data() + truth.coef.size());
  t["beta0"] = truth.beta0;
  t["beta"] = std::vector<double>(truth.beta.data(), truth.beta.data() + truth.beta.size());
  if (truth.beta_i)
    t["beta_i"] =
        std::vector<double>(truth.beta_i->data(), truth.beta_i->data() + truth.beta_i->size());
  t["beta_t"] = truth.beta_t;
  t["beta_z"] = truth.beta_z;
  t["beta_ti"] = truth.beta_ti;
  if (sp.family == SynthFamily::linear) t["sigma2"] = truth.sigma2;
  else {
    t["theta"] = truth.theta;
    t["pi"] = truth.pi;
  }
  std::ofstream tf(dir / "truth.json", std::ios::binary);
  tf << t.dump(2) << "\n";
  std::cout << "wrote " << (dir / "data.csv").string() << " ("
            << data.rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional regression with totals, moderation and elasticities"};
  app.require_subcommand(1);

  std::string config_path, out_dir, fit_path, spec_path, backend_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int instances = 20;

  auto* fit = app.add_subcommand("fit", "run the fitting pipeline from a JSON config");
  fit->add_option("--config", config_path, "JSON run configuration")->required();
  fit->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  fit->add_option("--out-dir", out_dir, "override the config output directory");
  fit->add_option("--backend", backend_override,
                  "override the config backend (freq|bayes_soft|bayes_hard|zinb)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset + truth record");
  synth->add_option("--spec", spec_path, "JSON generator spec")->required();
  synth->add_option("--out-dir", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "override the spec seed")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* report = app.add_subcommand("report", "re-render reports from a fit.json");
  report->add_option("--fit", fit_path, "fit.json produced by `fit`")->required();
  report->add_option("--out-dir", out_dir, "output directory")->required();

  auto* check = app.add_subcommand("check", "cross-validate the least-squares routes");
  check->add_option("--seed", seed, "instance seed");
  check->add_option("--instances", instances, "number of random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      codareg::RunConfig cfg = codareg::load_config(config_path);
      if (seed_set) cfg.seed = seed;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!backend_override.empty()) {
        if (backend_override == "freq") cfg.backend = codareg::Backend::freq;
        else if (backend_override == "bayes_soft") cfg.backend = codareg::Backend::bayes_soft;
        else if (backend_override == "bayes_hard") cfg.backend = codareg::Backend::bayes_hard;
        else if (backend_override == "zinb") cfg.backend = codareg::Backend::zinb;
        else throw codareg::ConfigError("unknown backend '" + backend_override + "'");
        cfg.prior.constraint_mode = cfg.backend == codareg::Backend::bayes_hard
                                        ? codareg::ConstraintMode::hard
                                        : codareg::ConstraintMode::soft;
      }
      const auto out = codareg::run(cfg);
      std::cout << "wrote " << out.files.size() << " files to " << out.out_dir.string()
                << "\n";
      if (out.elasticity_skipped)
        std::cout << "note: elasticity report skipped: " << *out.elasticity_skipped << "\n";
      return 0;
    }
    if (synth->parsed())
      return do_synth(spec_path, out_dir,
                      seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (report->parsed()) {
      const auto out = codareg::run_report(fit_path, out_dir);
      std::cout << "wrote " << out.files.size() << " files to " << out.out_dir.string()
                << "\n";
      return 0;
    }
    if (check->parsed()) {
      const auto summary = codareg::run_equivalence_check(seed, instances, std::cout);
      return summary.passed() ? 0 : static_cast<int>(codareg::ErrorCode::rank_deficient);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return codareg::exit_code_for(e);
  }
  return 0;
}
