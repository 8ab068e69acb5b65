#include <catch2/catch_amalgamated.hpp>

#include "codareg/design.hpp"
#include "codareg/rng.hpp"
#include "codareg/synth.hpp"

using namespace codareg;

namespace {

Dataset toy_dataset(int n, int D, ModeratorKind mod, std::uint64_t seed,
                    bool with_offset = false) {
  Rng rng(seed);
  Dataset data;
  for (int i = 0; i < n; ++i) {
    VectorXd parts(D);
    for (int j = 0; j < D; ++j) parts[j] = std::exp(rng.uniform(-1.0, 3.0));
    Observation obs{Composition(parts)};
    obs.response = rng.normal();
    if (mod == ModeratorKind::binary) obs.moderator = rng.bernoulli(0.4) ? 1.0 : 0.0;
    if (mod == ModeratorKind::numeric) obs.moderator = rng.uniform(-2.0, 5.0);
    if (with_offset) obs.offset = std::exp(rng.uniform(2.0, 4.0));
    data.rows.push_back(std::move(obs));
  }
  return data;
}

ModelSpec full_spec(int D) {
  ModelSpec spec;
  spec.include_total = true;
  spec.moderator = ModeratorKind::binary;
  for (int j = 0; j < D; ++j) spec.part_names.push_back("p" + std::to_string(j + 1));
  return spec;
}

}  // namespace

TEST_CASE("full moderated-total design has the case-study column layout") {
  const Dataset data = toy_dataset(40, 5, ModeratorKind::binary, 3);
  const DesignMatrix dm = build_design(data, full_spec(5));
  // intercept + 5 comp + moderator + 5 interactions + total + total:moderator
  CHECK(dm.p() == 14);
  REQUIRE(dm.info.constraint_blocks.size() == 2);
  CHECK(dm.info.constraint_blocks[0].size() == 5);
  CHECK(dm.info.constraint_blocks[1].size() == 5);
  CHECK(dm.info.columns[0].role == Role::intercept);
  CHECK(dm.info.columns[1].role == Role::comp);
  CHECK(dm.info.columns[6].role == Role::moderator);
  CHECK(dm.info.columns[7].role == Role::interaction);
  CHECK(dm.info.columns[12].role == Role::total);
  CHECK(dm.info.columns[13].role == Role::total_interaction);
  CHECK(dm.info.columns[1].name == "beta[p1]");
}

TEST_CASE("minimal log-contrast design") {
  ModelSpec spec;
  const Dataset data = toy_dataset(10, 2, ModeratorKind::none, 4);
  const DesignMatrix dm = build_design(data, spec);
  CHECK(dm.p() == 3);
  REQUIRE(dm.info.constraint_blocks.size() == 1);
  CHECK(dm.info.constraint_blocks[0] == std::vector<int>{1, 2});
}

TEST_CASE("centering zeroes column means and skips the binary moderator") {
  const Dataset data = toy_dataset(60, 4, ModeratorKind::binary, 5);
  ModelSpec spec = full_spec(4);
  const DesignMatrix dm = build_design(data, spec);
  for (int c = 0; c < dm.p(); ++c) {
    const Role role = dm.info.columns[c].role;
    if (role == Role::comp || role == Role::total)
      CHECK(std::abs(dm.values.col(c).mean()) <= 1e-10);
  }
  // Binary moderator keeps its 0/1 coding.
  const int zc = dm.info.require(Role::moderator);
  CHECK(dm.info.centers[zc] == 0.0);
  for (Eigen::Index i = 0; i < dm.n(); ++i) {
    const double z = dm.values(i, zc);
    CHECK((z == 0.0 || z == 1.0));
  }
  // Interaction columns are raw-z times centered base column.
  const int c1 = dm.info.require(Role::comp, 1);
  const int i1 = dm.info.require(Role::interaction, 1);
  for (Eigen::Index i = 0; i < dm.n(); ++i)
    CHECK(dm.values(i, i1) ==
          Catch::Approx(dm.values(i, zc) * dm.values(i, c1)).margin(1e-12));

  // Numeric moderators are centered.
  ModelSpec nspec = full_spec(4);
  nspec.moderator = ModeratorKind::numeric;
  const Dataset ndata = toy_dataset(60, 4, ModeratorKind::numeric, 6);
  const DesignMatrix ndm = build_design(ndata, nspec);
  CHECK(std::abs(ndm.values.col(ndm.info.require(Role::moderator)).mean()) <= 1e-10);

  // Constraint blocks do not depend on centering.
  ModelSpec uncentered = full_spec(4);
  uncentered.center_covariates = false;
  const DesignMatrix udm = build_design(data, uncentered);
  CHECK(udm.info.constraint_blocks == dm.info.constraint_blocks);
  CHECK(udm.info.centers.isZero(0.0));
}

TEST_CASE("design errors") {
  ModelSpec spec = full_spec(3);
  Dataset data = toy_dataset(10, 3, ModeratorKind::none, 7);
  CHECK_THROWS_AS(build_design(data, spec), MissingModerator);

  Dataset mixed = toy_dataset(5, 3, ModeratorKind::binary, 8);
  VectorXd parts(4);
  parts << 1.0, 2.0, 3.0, 4.0;
  Observation odd{Composition(parts)};
  odd.moderator = 1.0;
  mixed.rows.push_back(std::move(odd));
  CHECK_THROWS_AS(build_design(mixed, spec), InconsistentD);

  ModelSpec with_offset;
  with_offset.offset_column = "pop";
  Dataset no_offset = toy_dataset(5, 3, ModeratorKind::none, 9);
  CHECK_THROWS_AS(build_design(no_offset, with_offset), MissingOffset);

  ModelSpec binary = full_spec(3);
  Dataset bad_z = toy_dataset(5, 3, ModeratorKind::binary, 10);
  bad_z.rows[2].moderator = 0.5;
  CHECK_THROWS_AS(build_design(bad_z, binary), InvalidModerator);
}

TEST_CASE("apply_lag") {
  SECTION("lag 0 is the identity") {
    const Dataset data = toy_dataset(8, 3, ModeratorKind::none, 11);
    const Dataset lagged = apply_lag(data, 0);
    REQUIRE(lagged.rows.size() == data.rows.size());
    for (std::size_t i = 0; i < data.rows.size(); ++i)
      CHECK((lagged.rows[i].comp.parts() - data.rows[i].comp.parts())
                .lpNorm<Eigen::Infinity>() == 0.0);
  }

  SECTION("single group, times 1..10, lag 4 keeps 6 rows with shifted covariates") {
    Dataset data;
    for (int t = 1; t <= 10; ++t) {
      VectorXd parts(2);
      parts << t, 2.0 * t;
      Observation obs{Composition(parts)};
      obs.response = 100.0 + t;
      obs.group = "g";
      obs.time = t;
      data.rows.push_back(std::move(obs));
    }
    const Dataset lagged = apply_lag(data, 4);
    REQUIRE(lagged.rows.size() == 6);
    CHECK(lagged.rows_dropped_by_lag == 4);
    // First usable row is time 5 with covariates from time 1.
    CHECK(lagged.rows[0].response == 105.0);
    CHECK(lagged.rows[0].comp[0] == 1.0);
    CHECK(lagged.rows[5].response == 110.0);
    CHECK(lagged.rows[5].comp[0] == 6.0);
  }

  SECTION("two groups of lengths 5 and 3, lag 4 keeps exactly one row") {
    // Enumerated by hand: only (group a, time 5) has a source at time 1.
    Dataset data;
    const auto add = [&](const std::string& g, int t) {
      VectorXd parts(2);
      parts << t + 0.5, 1.0;
      Observation obs{Composition(parts)};
      obs.response = t;
      obs.group = g;
      obs.time = t;
      data.rows.push_back(std::move(obs));
    };
    for (int t = 1; t <= 5; ++t) add("a", t);
    for (int t = 1; t <= 3; ++t) add("b", t);
    const Dataset lagged = apply_lag(data, 4);
    REQUIRE(lagged.rows.size() == 1);
    CHECK(lagged.rows_dropped_by_lag == 7);
    CHECK(*lagged.rows[0].group == "a");
    CHECK(lagged.rows[0].response == 5.0);
    CHECK(lagged.rows[0].comp[0] == 1.5);
  }

  SECTION("missing keys") {
    Dataset data = toy_dataset(4, 2, ModeratorKind::none, 12);
    CHECK_THROWS_AS(apply_lag(data, 4), MissingTimeKeys);
    CHECK_THROWS_AS(apply_lag(data, -1), Error);
  }
}

TEST_CASE("decompose_total and recompose_total") {
  SECTION("pure total effect") {
    const auto [beta, beta_t] = decompose_total(VectorXd::Constant(4, 0.3));
    CHECK(beta_t == Catch::Approx(0.3).margin(1e-15));
    CHECK(beta.lpNorm<Eigen::Infinity>() <= 1e-15);
  }
  SECTION("pure compositional effect") {
    VectorXd gamma(2);
    gamma << 1.0, -1.0;
    const auto [beta, beta_t] = decompose_total(gamma);
    CHECK(beta_t == 0.0);
    CHECK(beta[0] == 1.0);
    CHECK(beta[1] == -1.0);
  }
  SECTION("case-study posterior means split back into beta_j and beta_t") {
    VectorXd table_beta(5);
    table_beta << -0.002, 0.010, -0.001, -0.006, -0.001;
    const double table_beta_t = 0.006;
    const VectorXd gamma = table_beta.array() + table_beta_t;
    const auto [beta, beta_t] = decompose_total(gamma);
    CHECK(std::abs(beta_t - table_beta_t) <= 1e-12);
    CHECK((beta - table_beta).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(std::abs(beta.sum()) <= 1e-12);
    CHECK((recompose_total(beta, beta_t) - gamma).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SECTION("round trip on random vectors") {
    Rng rng(13);
    for (int rep = 0; rep < 50; ++rep) {
      VectorXd gamma(5);
      for (int j = 0; j < 5; ++j) gamma[j] = rng.normal();
      const auto [beta, beta_t] = decompose_total(gamma);
      CHECK(std::abs(beta.sum()) <= 1e-12);
      CHECK((recompose_total(beta, beta_t) - gamma).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
  SECTION("recompose examples and zero-sum guard") {
    const VectorXd all_t = recompose_total(VectorXd::Zero(5), 0.006);
    CHECK((all_t.array() == 0.006).all());
    VectorXd b(2);
    b << 0.5, -0.5;
    const VectorXd g = recompose_total(b, 1.0);
    CHECK(g[0] == Catch::Approx(1.5).margin(1e-15));
    CHECK(g[1] == Catch::Approx(0.5).margin(1e-15));
    VectorXd bad(2);
    bad << 0.5, 0.5;
    CHECK_THROWS_AS(recompose_total(bad, 1.0), NotZeroSum);
  }
}

TEST_CASE("permutation equivariance of the built design") {
  const int D = 4;
  const Dataset data = toy_dataset(30, D, ModeratorKind::binary, 14);
  ModelSpec spec = full_spec(D);
  const DesignMatrix base = build_design(data, spec);

  const std::vector<int> perm{2, 0, 3, 1};
  Dataset permuted;
  for (const auto& r : data.rows) {
    VectorXd parts(D);
    for (int j = 0; j < D; ++j) parts[j] = r.comp[perm[j]];
    Observation obs{Composition(parts)};
    obs.response = r.response;
    obs.moderator = r.moderator;
    permuted.rows.push_back(std::move(obs));
  }
  ModelSpec pspec = spec;
  for (int j = 0; j < D; ++j) pspec.part_names[j] = spec.part_names[perm[j]];
  const DesignMatrix pdm = build_design(permuted, pspec);

  const auto identical = [](const VectorXd& a, const VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() == 0.0;
  };
  for (int j = 0; j < D; ++j) {
    CHECK(identical(pdm.values.col(pdm.info.require(Role::comp, j)),
                    base.values.col(base.info.require(Role::comp, perm[j]))));
    CHECK(identical(pdm.values.col(pdm.info.require(Role::interaction, j)),
                    base.values.col(base.info.require(Role::interaction, perm[j]))));
  }
  for (const Role role : {Role::intercept, Role::moderator, Role::total,
                          Role::total_interaction})
    CHECK(identical(pdm.values.col(pdm.info.require(role)),
                    base.values.col(base.info.require(role))));
}

TEST_CASE("apply_design reuses stored centers for new data") {
  const Dataset data = toy_dataset(50, 3, ModeratorKind::none, 15);
  ModelSpec spec;
  spec.include_total = true;
  const DesignMatrix built = build_design(data, spec);

  Dataset fresh = toy_dataset(5, 3, ModeratorKind::none, 16);
  const DesignMatrix applied = apply_design(fresh, spec, built.info);
  CHECK((applied.info.centers - built.info.centers).lpNorm<Eigen::Infinity>() == 0.0);
  // A row built by hand: log2 parts minus the stored center.
  const int c0 = built.info.require(Role::comp, 0);
  const double expect = std::log2(fresh.rows[0].comp[0]) - built.info.centers[c0];
  CHECK(applied.values(0, c0) == Catch::Approx(expect).margin(1e-12));
}
