#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "codareg/check.hpp"
#include "codareg/design.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/oracle.hpp"
#include "codareg/rng.hpp"
#include "codareg/synth.hpp"

using namespace codareg;

TEST_CASE("penalty oracle agrees with the KKT solver on random instances") {
  std::ostringstream log;
  const CheckSummary summary = run_equivalence_check(/*seed=*/2024, /*instances=*/100, log);
  INFO(log.str());
  CHECK(summary.passed());
  CHECK(summary.worst_deviation <= 1e-6);
}

TEST_CASE("penalty oracle recovers the truth on noiseless data") {
  SynthSpec sp;
  sp.n = 80;
  sp.model.include_total = true;
  sp.beta.resize(4);
  sp.beta << 0.4, -0.1, -0.2, -0.1;
  sp.beta_t = 0.25;
  sp.beta0 = 1.5;
  sp.sigma2 = 0.0;
  sp.part_log_mean = VectorXd::Constant(4, 1.0);
  sp.seed = 5;
  const auto [data, truth] = synth_generate(sp);
  const DesignMatrix dm = build_design(data, sp.model);
  const VectorXd y = response_vector(data, sp.model);
  const VectorXd est = oracle_constrained_ls(dm.values, y, dm.info.constraint_blocks);
  CHECK((est - truth.coef).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("penalty oracle with no blocks is plain OLS") {
  Rng rng(77);
  const int n = 40, p = 4;
  MatrixXd X(n, p);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) X(i, j) = rng.normal();
    y[i] = rng.normal();
  }
  const VectorXd est = oracle_constrained_ls(X, y, {});
  const VectorXd ols = X.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
  CHECK((est - ols).lpNorm<Eigen::Infinity>() <= 1e-8);
}
