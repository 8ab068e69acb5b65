#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "codareg/config.hpp"
#include "codareg/run.hpp"

using namespace codareg;
namespace fs = std::filesystem;

namespace {

const std::string kTestDir = CODAREG_TEST_DIR;
const std::string kCliPath = CODAREG_CLI_PATH;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig golden_config() {
  RunConfig cfg;
  cfg.input = kTestDir + "/golden/run_data.csv";
  cfg.columns.parts = {"a", "b", "c"};
  cfg.columns.response = "y";
  cfg.columns.moderator = "z";
  cfg.model.log_base = LogBase::two();
  cfg.model.include_total = true;
  cfg.model.moderator = ModeratorKind::binary;
  cfg.model.response_transform = ResponseTransform::log;
  cfg.model.part_names = cfg.columns.parts;
  cfg.backend = Backend::freq;
  cfg.seed = 31415;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("end-to-end run is deterministic and matches the frozen golden output") {
  RunConfig cfg = golden_config();
  const fs::path a = fresh_dir("codareg_run_a");
  const fs::path b = fresh_dir("codareg_run_b");

  cfg.out_dir = a.string();
  const RunOutputs ra = run(cfg);
  cfg.out_dir = b.string();
  const RunOutputs rb = run(cfg);

  REQUIRE(!ra.files.empty());
  for (const auto& f : ra.files) CHECK(slurp(a / f) == slurp(b / f));

  // Frozen golden bytes (config differs only in out_dir, which is excluded
  // from the comparison set below).
  const fs::path expected = fs::path(kTestDir) / "golden" / "expected_freq";
  for (const std::string f :
       {"coefficients.csv", "coefficients.txt", "elasticity.json", "elasticity.txt"})
    CHECK(slurp(a / f) == slurp(expected / f));
}

TEST_CASE("bayes backend: same seed, same bytes; different seed, different draws") {
  RunConfig cfg = golden_config();
  cfg.backend = Backend::bayes_soft;
  cfg.sampler.chains = 2;
  cfg.sampler.draws = 400;
  cfg.sampler.burnin = 100;
  cfg.sampler.keep_samples = false;

  const fs::path a = fresh_dir("codareg_bayes_a");
  const fs::path b = fresh_dir("codareg_bayes_b");
  cfg.out_dir = a.string();
  run(cfg);
  cfg.out_dir = b.string();
  run(cfg);
  for (const std::string f : {"coefficients.csv", "elasticity.json", "manifest.json"})
    CHECK(slurp(a / f) == slurp(b / f));

  const fs::path c = fresh_dir("codareg_bayes_c");
  cfg.seed = 999;
  cfg.out_dir = c.string();
  run(cfg);
  CHECK(slurp(a / "coefficients.csv") != slurp(c / "coefficients.csv"));
}

TEST_CASE("report verb re-renders identical reports from fit.json") {
  RunConfig cfg = golden_config();
  const fs::path a = fresh_dir("codareg_report_src");
  cfg.out_dir = a.string();
  run(cfg);

  const fs::path b = fresh_dir("codareg_report_out");
  const RunOutputs rep = run_report((a / "fit.json").string(), b.string());
  REQUIRE(!rep.elasticity_skipped);
  for (const std::string f :
       {"coefficients.csv", "coefficients.txt", "elasticity.json", "elasticity.txt"})
    CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("identity-response runs skip the elasticity report with a reason") {
  RunConfig cfg = golden_config();
  cfg.model.response_transform = ResponseTransform::identity;
  const fs::path dir = fresh_dir("codareg_identity");
  cfg.out_dir = dir.string();
  const RunOutputs out = run(cfg);
  REQUIRE(out.elasticity_skipped);
  CHECK(!fs::exists(dir / "elasticity.json"));
  const std::string manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find("elasticity_skipped") != std::string::npos);
}

TEST_CASE("error classes map to distinct exit codes") {
  RunConfig cfg = golden_config();
  cfg.columns.response = "mortality";  // not in the file
  try {
    run(cfg);
    FAIL("expected MissingColumn");
  } catch (const std::exception& e) {
    CHECK(exit_code_for(e) == static_cast<int>(ErrorCode::missing_column));
    CHECK(std::string(e.what()).find("mortality") != std::string::npos);
  }
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(ParseError(1, "c", "x")) == 4);
  CHECK(exit_code_for(RankDeficient("x")) == 6);
  CHECK(exit_code_for(NonConvergence("x")) == 7);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("manifest lists every tunable with its resolved default") {
  const auto j = resolved_config_json(golden_config());
  for (const std::string key :
       {"input", "columns", "model", "lag", "backend", "prior", "sampler", "zinb",
        "support_threshold", "seed", "out_dir"})
    CHECK(j.contains(key));
  CHECK(j["prior"].contains("coef_precision"));
  CHECK(j["prior"].contains("soft_variance"));
  CHECK(j["sampler"].contains("burnin"));
  CHECK(j["zinb"].contains("restarts"));
}

TEST_CASE("the installed CLI binary runs fit and check end to end") {
  const fs::path dir = fresh_dir("codareg_cli_out");

  nlohmann::ordered_json cfg;
  cfg["input"] = kTestDir + "/golden/run_data.csv";
  cfg["columns"] = {{"parts", {"a", "b", "c"}}, {"response", "y"}, {"moderator", "z"}};
  cfg["model"] = {{"log_base", "2"},
                  {"include_total", true},
                  {"moderator", "binary"},
                  {"response_transform", "log"}};
  cfg["backend"] = "freq";
  cfg["seed"] = 31415;
  cfg["out_dir"] = (dir / "out").string();
  const fs::path cfg_path = dir / "config.json";
  std::ofstream(cfg_path) << cfg.dump(2);

  CHECK(shell("\"" + kCliPath + "\" fit --config \"" + cfg_path.string() +
              "\" > /dev/null 2>&1") == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "elasticity.json"));

  CHECK(shell("\"" + kCliPath + "\" check --instances 3 --seed 11 > /dev/null 2>&1") == 0);

  // Unknown column in the config maps to the missing_column exit code.
  cfg["columns"]["response"] = "nope";
  std::ofstream(cfg_path) << cfg.dump(2);
  CHECK(shell("\"" + kCliPath + "\" fit --config \"" + cfg_path.string() +
              "\" > /dev/null 2>&1") == static_cast<int>(ErrorCode::missing_column));
}
