#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "codareg/csv.hpp"
#include "codareg/design.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/synth.hpp"

using namespace codareg;

namespace {

const std::string kGolden = std::string(CODAREG_TEST_DIR) + "/golden/sample5.csv";

ColumnMapping sample_mapping() {
  ColumnMapping map;
  map.parts = {"PM10", "NO2", "O3", "CO", "SO2"};
  map.response = "deaths";
  map.moderator = "heat";
  map.offset = "pop";
  map.group = "abs";
  map.time = "day";
  return map;
}

std::filesystem::path temp_csv(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("golden CSV loads with every mapped field") {
  const Dataset data = load_csv(kGolden, sample_mapping());
  REQUIRE(data.rows.size() == 3);
  CHECK(data.D() == 5);
  CHECK(data.rows[0].comp[0] == 18.4);
  CHECK(data.rows[1].comp[4] == 1.10);
  CHECK(data.rows[1].response == 5.0);
  CHECK(*data.rows[1].moderator == 1.0);
  CHECK(*data.rows[2].offset == 21450.0);
  CHECK(*data.rows[0].group == "A01");
  CHECK(*data.rows[2].time == 3);
  CHECK(data.rows_dropped_missing == 0);
}

TEST_CASE("column order in the file does not matter") {
  const Dataset base = load_csv(kGolden, sample_mapping());
  const auto shuffled = temp_csv(
      "codareg_shuffled.csv",
      "deaths,SO2,day,CO,abs,O3,heat,NO2,pop,PM10\n"
      "3,1.42,1,0.31,A01,64.2,0,21.7,21450,18.4\n"
      "5,1.10,2,0.28,A01,58.9,1,19.3,21450,22.1\n"
      "2,1.73,3,0.35,A01,71.3,0,24.6,21450,16.9\n");
  const Dataset data = load_csv(shuffled.string(), sample_mapping());
  REQUIRE(data.rows.size() == base.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    CHECK((data.rows[i].comp.parts() - base.rows[i].comp.parts())
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(data.rows[i].response == base.rows[i].response);
    CHECK(*data.rows[i].moderator == *base.rows[i].moderator);
    CHECK(*data.rows[i].time == *base.rows[i].time);
  }
}

TEST_CASE("loader errors name the offender") {
  SECTION("missing column") {
    ColumnMapping map = sample_mapping();
    map.response = "mortality";
    try {
      load_csv(kGolden, map);
      FAIL("expected MissingColumn");
    } catch (const MissingColumn& e) {
      CHECK(std::string(e.what()).find("mortality") != std::string::npos);
    }
  }
  SECTION("zero pollutant value names row and column") {
    const auto path = temp_csv("codareg_zero.csv",
                               "PM10,NO2,O3,CO,SO2,heat,deaths,pop,abs,day\n"
                               "18.4,21.7,64.2,0.31,1.42,0,3,100,A,1\n"
                               "18.4,0.0,64.2,0.31,1.42,0,3,100,A,2\n");
    try {
      load_csv(path.string(), sample_mapping());
      FAIL("expected NonPositivePart");
    } catch (const NonPositivePart& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("NO2") != std::string::npos);
    }
  }
  SECTION("parse error names row and column") {
    const auto path = temp_csv("codareg_bad.csv",
                               "PM10,NO2,O3,CO,SO2,heat,deaths,pop,abs,day\n"
                               "18.4,x,64.2,0.31,1.42,0,3,100,A,1\n");
    CHECK_THROWS_AS(load_csv(path.string(), sample_mapping()), ParseError);
  }
  SECTION("rows with missing mapped fields are dropped and counted") {
    const auto path = temp_csv("codareg_missing.csv",
                               "PM10,NO2,O3,CO,SO2,heat,deaths,pop,abs,day\n"
                               "18.4,21.7,64.2,0.31,1.42,0,3,100,A,1\n"
                               "18.4,,64.2,0.31,1.42,0,3,100,A,2\n"
                               "18.4,21.7,64.2,0.31,1.42,1,,100,A,3\n");
    const Dataset data = load_csv(path.string(), sample_mapping());
    CHECK(data.rows.size() == 1);
    CHECK(data.rows_dropped_missing == 2);
  }
}

TEST_CASE("synthetic generation is seed-deterministic") {
  SynthSpec sp;
  sp.n = 50;
  sp.model.include_total = true;
  sp.model.moderator = ModeratorKind::binary;
  sp.beta.resize(3);
  sp.beta << 0.2, -0.1, -0.1;
  VectorXd bi = VectorXd::Zero(3);
  sp.beta_i = bi;
  sp.part_log_mean = VectorXd::Constant(3, 1.0);
  sp.seed = 2020;
  const auto [a, ta] = synth_generate(sp);
  const auto [b, tb] = synth_generate(sp);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK((a.rows[i].comp.parts() - b.rows[i].comp.parts())
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(a.rows[i].response == b.rows[i].response);
  }
}

TEST_CASE("zero-noise synthesis sits exactly on the model surface") {
  SynthSpec sp;
  sp.n = 60;
  sp.model.include_total = true;
  sp.model.response_transform = ResponseTransform::log;
  sp.beta.resize(4);
  sp.beta << 0.3, -0.1, -0.1, -0.1;
  sp.beta_t = 0.2;
  sp.beta0 = 1.0;
  sp.sigma2 = 0.0;
  sp.part_log_mean = VectorXd::Constant(4, 1.0);
  sp.seed = 2021;
  const auto [data, truth] = synth_generate(sp);
  const DesignMatrix dm = build_design(data, sp.model);
  const FreqFit fit = fit_constrained_ols(dm, response_vector(data, sp.model));
  CHECK((fit.coefficients - truth.coef).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("binary moderator empirical rate matches the case-study share") {
  SynthSpec sp;
  sp.n = 10000;
  sp.model.moderator = ModeratorKind::binary;
  sp.beta = VectorXd::Zero(2);
  VectorXd bi = VectorXd::Zero(2);
  sp.beta_i = bi;
  sp.part_log_mean = VectorXd::Constant(2, 1.0);
  sp.seed = 2022;
  const auto [data, truth] = synth_generate(sp);
  double rate = 0.0;
  for (const auto& r : data.rows) rate += *r.moderator;
  rate /= static_cast<double>(data.rows.size());
  CHECK(rate >= 0.14);
  CHECK(rate <= 0.18);
}

TEST_CASE("non-zero-sum truth blocks are recentred and flagged") {
  SynthSpec sp;
  sp.n = 20;
  sp.beta.resize(3);
  sp.beta << 1.0, 1.0, 1.0;  // sums to 3: pure total leakage
  sp.part_log_mean = VectorXd::Constant(3, 1.0);
  sp.seed = 2023;
  const auto [data, truth] = synth_generate(sp);
  CHECK(truth.recentred);
  CHECK(std::abs(truth.beta.sum()) <= 1e-12);
}
