#pragma once

#include <ostream>
#include <string>

#include "codareg/design.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/oracle.hpp"
#include "codareg/rng.hpp"
#include "codareg/synth.hpp"

namespace codareg {

struct CheckSummary {
  int instances = 0;
  int failures = 0;
  double worst_deviation = 0.0;
  bool passed() const { return failures == 0; }
};

/// Cross-validate the three least-squares routes on random instances:
/// constrained-KKT, alr OLS for every reference part, and the penalty
/// oracle must agree coefficient-wise within `tol`.
inline CheckSummary run_equivalence_check(std::uint64_t seed, int instances,
                                          std::ostream& log, double tol = 1e-6,
                                          int n = 200) {
  static const int d_cycle[3] = {3, 5, 8};
  CheckSummary summary;
  for (int i = 0; i < instances; ++i) {
    const int D = d_cycle[i % 3];
    Rng setup = Rng::stream(seed, 1000 + i);

    SynthSpec sp;
    sp.n = n;
    sp.model.log_base = LogBase::two();
    sp.model.include_total = (i % 2) == 0;
    sp.model.moderator = (i % 3) == 0   ? ModeratorKind::none
                         : (i % 3) == 1 ? ModeratorKind::binary
                                        : ModeratorKind::numeric;
    sp.model.center_covariates = true;
    sp.model.response_transform = ResponseTransform::identity;
    sp.beta.resize(D);
    for (int j = 0; j < D; ++j) sp.beta[j] = setup.normal();
    if (sp.model.has_moderator()) {
      VectorXd bi(D);
      for (int j = 0; j < D; ++j) bi[j] = setup.normal();
      sp.beta_i = bi;
      sp.beta_z = setup.normal();
    }
    if (sp.model.include_total) {
      sp.beta_t = 0.5 * setup.normal();
      if (sp.model.has_moderator()) sp.beta_ti = 0.5 * setup.normal();
    }
    sp.beta0 = setup.normal();
    sp.sigma2 = 0.25;
    sp.part_log_mean.resize(D);
    for (int j = 0; j < D; ++j) sp.part_log_mean[j] = setup.uniform(0.0, 3.0);
    sp.part_log_sd = 0.6;
    sp.binary_rate = 0.4;
    sp.seed = splitmix64(seed + 17 * i + 1);

    const auto [data, truth] = synth_generate(sp);
    const DesignMatrix dm = build_design(data, sp.model);
    const VectorXd y = response_vector(data, sp.model);

    const FreqFit kkt = fit_constrained_ols(dm, y);
    const VectorXd oracle =
        oracle_constrained_ls(dm.values, y, dm.info.constraint_blocks);

    double dev = (kkt.coefficients - oracle).lpNorm<Eigen::Infinity>();
    for (int ref = 0; ref < D; ++ref) {
      const FreqFit alr = fit_alr_ols(data, sp.model, ref);
      dev = std::max(dev,
                     (kkt.coefficients - alr.coefficients).lpNorm<Eigen::Infinity>());
      dev = std::max(dev, (alr.coefficients - oracle).lpNorm<Eigen::Infinity>());
    }
    summary.worst_deviation = std::max(summary.worst_deviation, dev);
    ++summary.instances;
    if (!(dev <= tol)) {
      ++summary.failures;
      log << "instance " << i << " (D=" << D << "): max deviation " << dev
          << " exceeds " << tol << "\n";
    }
  }
  log << (summary.passed() ? "PASS" : "FAIL") << ": " << summary.instances
      << " instances, worst deviation " << summary.worst_deviation << "\n";
  return summary;
}

}  // namespace codareg
