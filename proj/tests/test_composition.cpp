#include <catch2/catch_amalgamated.hpp>

#include "codareg/composition.hpp"
#include "codareg/rng.hpp"

using namespace codareg;

namespace {

// Independent summation oracle: pairwise (tree) reduction of natural logs.
double pairwise_log_sum(const std::vector<double>& xs, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::log(xs[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_log_sum(xs, lo, mid) + pairwise_log_sum(xs, mid, hi);
}

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("validate_composition accepts positive vectors and reports offenders") {
  const Composition c = validate_composition(vec({1.0, 2.0, 3.0}));
  CHECK(c.size() == 3);

  CHECK_THROWS_AS(validate_composition(vec({1.0, 0.0})), NonPositivePart);
  try {
    validate_composition(vec({1.0, 0.0}));
  } catch (const NonPositivePart& e) {
    CHECK(e.index == 1);
  }
  CHECK_THROWS_AS(validate_composition(vec({-1.0, 2.0})), NonPositivePart);

  VectorXd one(1);
  one << 5.0;
  CHECK_THROWS_AS(validate_composition(one), TooFewParts);
}

TEST_CASE("multiplicative total") {
  CHECK(multiplicative_total(Composition(VectorXd::Ones(5)), LogBase::two()) == 0.0);
  CHECK(multiplicative_total(validate_composition(vec({2.0, 2.0})), LogBase::two()) ==
        Catch::Approx(2.0).margin(1e-14));

  // Frozen against the pairwise summation oracle.
  const std::vector<double> parts{3.7, 12.1, 55.2, 0.4, 1.9};
  const double expected = pairwise_log_sum(parts, 0, parts.size());
  const Composition c = validate_composition(vec({3.7, 12.1, 55.2, 0.4, 1.9}));
  const double got = multiplicative_total(c, LogBase::natural());
  CHECK(std::abs(got - expected) <= 1e-12 * std::abs(expected));
}

TEST_CASE("log_parts") {
  const VectorXd lp = log_parts(validate_composition(vec({1.0, 2.0, 4.0})), LogBase::two());
  CHECK(lp[0] == Catch::Approx(0.0).margin(1e-14));
  CHECK(lp[1] == Catch::Approx(1.0).margin(1e-14));
  CHECK(lp[2] == Catch::Approx(2.0).margin(1e-14));

  const double e = std::exp(1.0);
  const VectorXd ln = log_parts(validate_composition(vec({e, e * e})), LogBase::natural());
  CHECK(ln[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(ln[1] == Catch::Approx(2.0).margin(1e-12));

  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd parts(4);
    for (int j = 0; j < 4; ++j) parts[j] = std::exp(rng.uniform(-3.0, 3.0));
    const Composition c = validate_composition(parts);
    CHECK(log_parts(c, LogBase::two()).sum() ==
          Catch::Approx(multiplicative_total(c, LogBase::two())).margin(1e-10));
  }
}

TEST_CASE("alr coordinates") {
  const VectorXd a = alr_coords(validate_composition(vec({2.0, 4.0, 8.0})), 2, LogBase::two());
  CHECK(a[0] == Catch::Approx(-2.0).margin(1e-14));
  CHECK(a[1] == Catch::Approx(-1.0).margin(1e-14));

  const VectorXd b = alr_coords(validate_composition(vec({10.0, 20.0, 40.0, 80.0})), 0,
                                LogBase::two());
  CHECK(b[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(b[1] == Catch::Approx(2.0).margin(1e-12));
  CHECK(b[2] == Catch::Approx(3.0).margin(1e-12));

  CHECK_THROWS_AS(alr_coords(validate_composition(vec({1.0, 2.0})), 2, LogBase::two()),
                  RefIndexOutOfRange);
  CHECK_THROWS_AS(alr_coords(validate_composition(vec({1.0, 2.0})), -1, LogBase::two()),
                  RefIndexOutOfRange);
}

TEST_CASE("composition invariants under scaling and base change") {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const int D = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
    VectorXd parts(D);
    for (int j = 0; j < D; ++j) parts[j] = std::exp(rng.uniform(-4.0, 4.0));
    const Composition c = validate_composition(parts);
    const double k = std::exp(rng.uniform(-2.0, 2.0));
    const int ref = static_cast<int>(rng.uniform(0.0, D));
    const LogBase base(rng.uniform(1.5, 12.0));

    // alr is scale invariant.
    const VectorXd a1 = alr_coords(c, ref, base);
    const VectorXd a2 = alr_coords(c.scaled(k), ref, base);
    CHECK((a1 - a2).lpNorm<Eigen::Infinity>() <= 1e-12);

    // Scaling adds D*log_b(k) to the total.
    CHECK(multiplicative_total(c.scaled(k), base) ==
          Catch::Approx(multiplicative_total(c, base) + D * base.log(k)).margin(1e-10));

    // Base change is a constant rescaling of log_parts.
    const LogBase base2(rng.uniform(1.5, 12.0));
    const VectorXd p1 = log_parts(c, base);
    const VectorXd p2 = log_parts(c, base2);
    const double conv = std::log(base2.value()) / std::log(base.value());
    for (int j = 0; j < D; ++j)
      CHECK(std::abs(p1[j] - p2[j] * conv) <= 1e-12 * std::max(1.0, std::abs(p1[j])));
  }
}
