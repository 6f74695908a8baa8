#include <catch2/catch_amalgamated.hpp>

#include "support/test_models.hpp"

#include <cmath>
#include <random>

using namespace sublin;
using testsupport::scalar_model;
using testsupport::two_state_symmetric;

TEST_CASE("perturbed_resolvent") {
  SECTION("zero potential reduces to the plain resolvent") {
    const auto m = two_state_symmetric();
    const auto p = perturb(m, Potential::zero(2));
    CHECK((perturbed_resolvent(p, 0.7) - resolvent(m, 0.7)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THAT(p.spectral_bound, Catch::Matchers::WithinAbs(m.spectral_bound, 1e-11));
  }

  SECTION("scalar closed form") {
    const auto m = scalar_model(1.0);
    const auto p = perturb(m, Potential::constant(1, 2.0));
    CHECK_THAT(perturbed_resolvent(p, 0.0)(0, 0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-14));
  }

  SECTION("positivity improving and alpha gating") {
    std::mt19937_64 rng(3);
    const auto m = suites::random_sub_markovian(10, rng);
    Vector Vv = testsupport::random_positive(m.n(), rng, -0.5, 1.5);
    const auto p = perturb(m, Potential(Vv));
    const Matrix G = perturbed_resolvent(p, p.spectral_bound + 0.4);
    CHECK(G.minCoeff() > 0.0);
    CHECK_THROWS_AS(perturbed_resolvent(p, p.spectral_bound - 0.1), AlphaNotAboveSpectralBound);
  }

  SECTION("off-diagonals are untouched by the perturbation") {
    const auto m = two_state_symmetric();
    const auto p = perturb(m, Potential::constant(2, 5.0));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (i != j) CHECK(p.op(i, j) == m.L(i, j));
  }
}

TEST_CASE("spectral_radius_identity_check") {
  SECTION("scalar arithmetic: r = 1/4 at alpha = 1") {
    const auto m = scalar_model(1.0);
    const auto p = perturb(m, Potential::constant(1, 2.0));
    const auto id = spectral_radius_identity_check(p, 1.0);
    CHECK_THAT(id.lhs, Catch::Matchers::WithinAbs(0.25, 1e-12));
    CHECK_THAT(id.rhs, Catch::Matchers::WithinAbs(0.25, 1e-12));
  }

  SECTION("zero potential recovers r(R_alpha) = 1/(alpha - s(L))") {
    const auto m = two_state_symmetric();
    const auto p = perturb(m, Potential::zero(2));
    const auto id = spectral_radius_identity_check(p, 1.0);
    CHECK_THAT(id.lhs, Catch::Matchers::WithinAbs(0.5, 1e-11));  // 1/(1 - (-1))
    CHECK(id.gap < 1e-10);
  }

  SECTION("randomized suite with the dense eigensolver oracle") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
      const auto m = (trial % 3 == 0) ? suites::random_gainy(10, rng)
                                      : suites::random_sub_markovian(10, rng);
      Vector Vv = testsupport::random_positive(m.n(), rng, -1.0, 2.0);
      const auto p = perturb(m, Potential(Vv));
      CHECK_THAT(p.spectral_bound,
                 Catch::Matchers::WithinAbs(testsupport::dense_spectral_bound(p.op), 1e-9));
      const double alpha = p.spectral_bound + 0.2 + 1.5 * (trial % 5) / 5.0;
      const auto id = spectral_radius_identity_check(p, alpha);
      CHECK(std::abs(id.lhs * (alpha - p.spectral_bound) - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("potential_monotonicity_check") {
  SECTION("constant bump shifts the bound by exactly c") {
    const auto m = two_state_symmetric();
    const Potential v1 = Potential::zero(2);
    const Potential v2 = Potential::constant(2, 0.8);
    const double s1 = perturb(m, v1).spectral_bound;
    const double s2 = perturb(m, v2).spectral_bound;
    CHECK_THAT(s1 - s2, Catch::Matchers::WithinAbs(0.8, 1e-11));
    CHECK(potential_monotonicity_check(m, v1, v2));
  }

  SECTION("single-state bump: gap (3 - sqrt 5)/2") {
    const auto m = two_state_symmetric();
    Vector v2(2);
    v2 << 0.0, 1.0;
    const double s1 = perturb(m, Potential::zero(2)).spectral_bound;
    const double s2 = perturb(m, Potential(v2)).spectral_bound;
    CHECK_THAT(s1 - s2, Catch::Matchers::WithinAbs((3.0 - std::sqrt(5.0)) / 2.0, 1e-10));
    CHECK(potential_monotonicity_check(m, Potential::zero(2), Potential(v2)));
  }

  SECTION("equal potentials are rejected") {
    const auto m = two_state_symmetric();
    CHECK_THROWS_AS(potential_monotonicity_check(m, Potential::zero(2), Potential::zero(2)),
                    PreconditionUnverified);
  }

  SECTION("misordered potentials are rejected") {
    const auto m = two_state_symmetric();
    Vector v1(2), v2(2);
    v1 << 1.0, 0.0;
    v2 << 0.0, 1.0;
    CHECK_THROWS_AS(potential_monotonicity_check(m, Potential(v1), Potential(v2)),
                    PreconditionUnverified);
  }
}

TEST_CASE("zero_mode_check") {
  SECTION("scalar logistic solution") {
    const auto m = scalar_model(1.0);
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK(zero_mode_check(m, Vector::Constant(1, 2.0), f) < 1e-10);
  }

  SECTION("principal eigenfunction of a linear nonlinearity") {
    const auto m = two_state_symmetric();
    const double lam = lambda1(m, Potential::zero(2));
    const auto phi = principal_eigenpair(m, Potential::zero(2));
    const auto f = Nonlinearity::linear(2, lam);
    CHECK(zero_mode_check(m, phi.eigenvector, f) < 1e-9);
  }

  SECTION("solver outputs satisfy the zero-mode identity") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      const auto m = suites::random_sub_markovian(10, rng);
      const double lam = lambda1(m, Potential::zero(m.n()));
      const auto f = Nonlinearity::logistic(m.n(), lam + 1.0, 1.0);
      const auto rep = solve(m, f);
      REQUIRE(rep.u.has_value());
      CHECK(zero_mode_check(m, *rep.u, f) <= 1e-7);
    }
  }

  SECTION("non-solutions fail the fixed-point verification") {
    const auto m = scalar_model(1.0);
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK_THROWS_AS(zero_mode_check(m, Vector::Constant(1, 1.0), f), PreconditionUnverified);
  }
}

TEST_CASE("uniqueness_check") {
  SECTION("scalar logistic: both brackets land on u = 2") {
    const auto m = scalar_model(1.0);
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    const auto rep = solve(m, f);
    REQUIRE(rep.u.has_value());
    const auto verdict = uniqueness_check(m, f, {*rep.u});
    CHECK(verdict.unique);
    CHECK(verdict.branch_gap <= 1e-8 * 3.0);
    CHECK(verdict.zero_mode_check <= 1e-8);
  }

  SECTION("scalar square root: u = 1 from both brackets") {
    const auto m = scalar_model(1.0);
    const auto f = Nonlinearity::power_minus_linear(1, 0.5, 0.0);
    const auto rep = solve(m, f);
    REQUIRE(rep.u.has_value());
    CHECK_THAT((*rep.u)[0], Catch::Matchers::WithinAbs(1.0, 1e-8));
    const auto verdict = uniqueness_check(m, f, {*rep.u});
    CHECK(verdict.unique);
  }

  SECTION("two coincident candidates are declared unique") {
    const auto m = two_state_symmetric();
    const auto f = Nonlinearity::logistic(2, 3.0, 1.0);
    const auto rep = solve(m, f);
    REQUIRE(rep.u.has_value());
    const auto verdict = uniqueness_check(m, f, {*rep.u, *rep.u});
    CHECK(verdict.unique);
    CHECK(verdict.branch_gap == 0.0);
  }

  SECTION("linear eigenline degeneracy is rejected as non-strict") {
    const auto m = two_state_symmetric();
    const double lam = lambda1(m, Potential::zero(2));
    const auto f = Nonlinearity::linear(2, lam);
    const auto phi = principal_eigenpair(m, Potential::zero(2));
    const Vector u1 = phi.eigenvector;
    const Vector u2 = 2.0 * phi.eigenvector;
    CHECK_THROWS_AS(uniqueness_check(m, f, {u1, u2}), MonotonicityNotStrict);
  }

  SECTION("a genuinely distinct fake pair breaks the contradiction chain") {
    const auto m = two_state_symmetric();
    const auto f = Nonlinearity::logistic(2, 3.0, 1.0);
    const auto rep = solve(m, f);
    REQUIRE(rep.u.has_value());
    const Vector fake = 1.07 * (*rep.u);
    const auto verdict = uniqueness_check(m, f, {*rep.u, fake});
    CHECK_FALSE(verdict.unique);
    CHECK(!verdict.broken_link.empty());
    // the fake second candidate is not a solution, so the resolvent identity
    // for w is the link that fails
    CHECK(verdict.broken_link == "w = -R(V0 w)");
    CHECK(verdict.potential_V.size() == 2);
  }
}
