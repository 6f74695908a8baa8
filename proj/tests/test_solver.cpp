#include <catch2/catch_amalgamated.hpp>

#include "support/test_models.hpp"

#include <cmath>
#include <random>

using namespace sublin;
using testsupport::scalar_model;
using testsupport::two_state_symmetric;

TEST_CASE("truncate") {
  SECTION("power family at y = 4, k = n = 1") {
    const auto f = Nonlinearity::power_minus_linear(1, 0.5, 1.0);
    const auto fkn = truncate(f, 1.0, 1.0);
    // min{f+ ^ 1, 1 * 4} - min{f-, 1} = min{0, 4} - min{2, 1} = -1
    CHECK_THAT(fkn(0, 4.0), Catch::Matchers::WithinAbs(-1.0, 1e-15));
  }

  SECTION("vanishes at zero for families with f(., 0) = 0") {
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK(truncate(f, 2.0, 2.0)(0, 0.0) == 0.0);
  }

  SECTION("logistic at y = 1, k = 10, n = 5") {
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK_THAT(truncate(f, 10.0, 5.0)(0, 1.0), Catch::Matchers::WithinAbs(2.0, 1e-15));
  }

  SECTION("structure: f_kn^- = 0 near zero, caps k and n, quotient bound") {
    const auto f = Nonlinearity::shifted(Nonlinearity::power_minus_linear(1, 0.5, 2.0), 1.0);
    const double k = 3.0, n = 2.0;
    const auto fkn = truncate(f, k, n);
    for (double y = 0.001; y < 50.0; y *= 1.7) {
      CHECK(fkn.plus(0, y) <= k + 1e-15);
      CHECK(fkn.minus(0, y) <= n + 1e-15);
      CHECK(fkn.plus(0, y) / y <= k + 1e-12);
    }
  }
}

TEST_CASE("seeds") {
  SECTION("subsolution seed formula") {
    const auto m = two_state_symmetric();
    EigenPair phi;
    phi.eigenvector = Vector::Constant(2, 1.0);
    const Vector s = subsolution_seed(m, phi, 2.0);
    CHECK_THAT(s[0], Catch::Matchers::WithinAbs(0.25, 1e-15));
    // value at a hypothetical zero of phi1 is 1/n
    EigenPair phi0;
    phi0.eigenvector = Vector::Zero(2);
    CHECK_THAT(subsolution_seed(m, phi0, 2.0)[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
  }

  SECTION("seed shrinks to zero as n grows") {
    const auto m = two_state_symmetric();
    EigenPair phi;
    phi.eigenvector = Vector::Constant(2, 0.7);
    CHECK(subsolution_seed(m, phi, 1e9).maxCoeff() < 1e-8);
  }

  SECTION("supersolution seed") {
    const auto s1 = supersolution_seed(scalar_model(1.0), 2.0);
    CHECK_THAT(s1[0], Catch::Matchers::WithinAbs(3.0, 1e-13));

    const auto s2 = supersolution_seed(two_state_symmetric(), 3.0);
    CHECK_THAT(s2[0], Catch::Matchers::WithinAbs(4.0, 1e-12));
    CHECK_THAT(s2[1], Catch::Matchers::WithinAbs(4.0, 1e-12));

    CHECK((supersolution_seed(two_state_symmetric(), 0.0) - Vector::Ones(2)).cwiseAbs().maxCoeff() <
          1e-14);
  }

  SECTION("supersolution seed needs a negative bound") {
    Matrix L(1, 1);
    L << 0.0;
    const auto m = validate_generator(L, MeasureSpace::uniform(1));
    CHECK_THROWS_AS(supersolution_seed(m, 1.0), SpectralBoundNotNegative);
  }
}

TEST_CASE("solve_truncated") {
  SECTION("scalar square root: fixed point approaches 1 as k, n grow") {
    const auto m = scalar_model(1.0);
    const auto f = Nonlinearity::power_minus_linear(1, 0.5, 0.0);  // f(y) = sqrt(y)
    const double k = 64.0, n = 1024.0;
    const auto fkn = truncate(f, k, n);
    EigenPair phi;
    phi.eigenvector = Vector::Ones(1);
    TruncationParams params{k, n, monotonization_constant(fkn, 10.0)};
    const auto res = solve_truncated(m, fkn, params, subsolution_seed(m, phi, n),
                                     supersolution_seed(m, k));
    // u = 1/n + sqrt(u): root of u^2 - (2/n + 1) u + 1/n^2
    const double c = 1.0 / n;
    const double exact = ((2.0 * c + 1.0) + std::sqrt((2.0 * c + 1.0) * (2.0 * c + 1.0) - 4.0 * c * c)) / 2.0;
    CHECK_THAT(res.u[0], Catch::Matchers::WithinAbs(exact, 1e-10));
    CHECK(res.residual < 1e-12 * (1.0 + supersolution_seed(m, k).maxCoeff()));
  }

  SECTION("zero nonlinearity on a conservative generator returns the source") {
    Matrix L(2, 2);
    L << -1.0, 1.0, 1.0, -1.0;  // row sums zero, but irreducible; shift first
    auto m = validate_generator(L, MeasureSpace::uniform(2));
    const auto sp = shift_to_negative_bound(m, 0.5);
    const auto f = Nonlinearity::linear(2, 0.0);
    const double n = 8.0;
    const auto fkn = truncate(f, 1.0, n);
    EigenPair phi;
    phi.eigenvector = Vector::Ones(2);
    TruncationParams params{1.0, n, 2.0};
    const auto res = solve_truncated(sp.shifted, fkn, params, subsolution_seed(sp.shifted, phi, n),
                                     supersolution_seed(sp.shifted, 1.0));
    // zero nonlinearity: the fixed point is the bare source u = (1/n) 1
    CHECK((res.u - Vector::Constant(2, 1.0 / n)).cwiseAbs().maxCoeff() < 1e-11);
  }

  SECTION("iterates stay in the bracket and descend") {
    const auto m = two_state_symmetric();
    const auto f = Nonlinearity::logistic(2, 3.0, 1.0);
    const double k = 4.0, n = 4.0;
    const auto fkn = truncate(f, k, n);
    const auto phi = principal_eigenpair(m, Potential::zero(2));
    const Vector under = subsolution_seed(m, phi, n);
    const Vector over = supersolution_seed(m, k);
    TruncationParams params{k, n, monotonization_constant(fkn, over.maxCoeff())};
    const auto res = solve_truncated(m, fkn, params, under, over);
    for (int i = 0; i < 2; ++i) {
      CHECK(res.u[i] >= under[i] - 1e-12);
      CHECK(res.u[i] <= over[i] + 1e-12);
    }
    CHECK(res.residual < 1e-11);
  }

  SECTION("invalid brackets are rejected") {
    const auto m = two_state_symmetric();
    const auto f = Nonlinearity::logistic(2, 3.0, 1.0);
    const auto fkn = truncate(f, 2.0, 2.0);
    TruncationParams params{2.0, 2.0, 5.0};
    CHECK_THROWS_AS(solve_truncated(m, fkn, params, Vector::Constant(2, 5.0),
                                    Vector::Constant(2, 0.1)),
                    BracketInvalid);
    // an arbitrary vector is not a verified supersolution
    CHECK_THROWS_AS(solve_truncated(m, fkn, params, Vector::Constant(2, 0.4),
                                    Vector::Constant(2, 0.5)),
                    BracketInvalid);
  }
}

TEST_CASE("solve") {
  SECTION("scalar logistic: u = 2") {
    const auto rep = solve(scalar_model(1.0), Nonlinearity::logistic(1, 3.0, 1.0));
    CHECK(rep.criterion.satisfied);
    REQUIRE(rep.criterion.lambda1_a0.value.is_finite());
    CHECK_THAT(rep.criterion.lambda1_a0.value.value, Catch::Matchers::WithinAbs(-2.0, 1e-9));
    CHECK(rep.criterion.lambda1_ainf.value.is_plus_inf());
    REQUIRE(rep.u.has_value());
    CHECK_THAT((*rep.u)[0], Catch::Matchers::WithinAbs(2.0, 1e-8));
    CHECK(rep.residual < 1e-8);
  }

  SECTION("scalar square root: u = 1/lambda^2") {
    for (double lam : {1.0, 2.0}) {
      const auto rep = solve(scalar_model(lam), Nonlinearity::power_minus_linear(1, 0.5, 0.0));
      REQUIRE(rep.u.has_value());
      CHECK_THAT((*rep.u)[0], Catch::Matchers::WithinAbs(1.0 / (lam * lam), 1e-8));
    }
  }

  SECTION("linear nonlinearity fails the criterion") {
    const auto rep = solve(scalar_model(1.0), Nonlinearity::linear(1, 0.5));
    CHECK_FALSE(rep.criterion.satisfied);
    CHECK_FALSE(rep.u.has_value());
    REQUIRE(rep.criterion.lambda1_a0.value.is_finite());
    CHECK_THAT(rep.criterion.lambda1_a0.value.value, Catch::Matchers::WithinAbs(0.5, 1e-9));

    SolveOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(solve(scalar_model(1.0), Nonlinearity::linear(1, 0.5), strict),
                    CriterionFailed);
  }

  SECTION("trace records the truncation schedule") {
    const auto rep = solve(scalar_model(1.0), Nonlinearity::logistic(1, 3.0, 1.0));
    REQUIRE(!rep.trace.empty());
    CHECK(rep.trace.front().k == 1.0);
    for (const auto& entry : rep.trace) CHECK(entry.inner_iterations > 0);
  }

  SECTION("orderings in n and k on random sub-Markovian problems") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 5; ++trial) {
      const auto m = suites::random_sub_markovian(10, rng);
      const double lam = lambda1(m, Potential::zero(m.n()));
      const auto f = Nonlinearity::logistic(m.n(), lam + 1.5, 1.0);
      const auto prep = prepare_problem(m, f, {});
      const auto& work = prep.work;

      const double k = 2.0, n = 2.0;
      auto solve_at = [&](double kk, double nn) {
        const auto fkn = truncate(prep.f_work, kk, nn);
        const Vector over = supersolution_seed(work, kk);
        TruncationParams params{kk, nn, monotonization_constant(fkn, over.maxCoeff())};
        return solve_truncated(work, fkn, params, subsolution_seed(work, prep.phi1_work, nn), over).u;
      };

      const Vector u_kn = solve_at(k, n);
      const Vector u_k2n = solve_at(k, 2.0 * n);
      const Vector u_2kn = solve_at(2.0 * k, n);
      for (int i = 0; i < work.n(); ++i) {
        CHECK(u_k2n[i] <= u_kn[i] + 1e-9);   // nonincreasing in n
        CHECK(u_kn[i] <= u_2kn[i] + 1e-9);   // nondecreasing in k
      }
    }
  }

  SECTION("shift invariance: manual extra shift returns the same solution") {
    std::mt19937_64 rng(23);
    const auto m = suites::random_sub_markovian(8, rng);
    const double lam = lambda1(m, Potential::zero(m.n()));
    const auto f = Nonlinearity::logistic(m.n(), lam + 2.0, 1.0);

    const auto rep = solve(m, f);
    REQUIRE(rep.u.has_value());

    const double c = 0.7;
    GeneratorModel shifted = m;
    shifted.L -= c * Matrix::Identity(m.n(), m.n());
    shifted.spectral_bound -= c;
    const auto rep2 = solve(shifted, Nonlinearity::shifted(f, c));
    REQUIRE(rep2.u.has_value());
    CHECK((*rep.u - *rep2.u).cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("strict positivity on every accepted output") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
      const auto m = suites::random_sub_markovian(12, rng);
      const double lam = lambda1(m, Potential::zero(m.n()));
      const auto f = Nonlinearity::logistic(m.n(), lam + 0.8, 1.0);
      const auto rep = solve(m, f);
      REQUIRE(rep.u.has_value());
      CHECK(rep.u->minCoeff() > 0.0);
      CHECK(rep.residual <= 1e-8);
      // solution dominates its reported bracket floor
      for (int i = 0; i < m.n(); ++i) {
        CHECK((*rep.u)[i] >= rep.bracket_sub[i] - 1e-12);
        CHECK((*rep.u)[i] <= rep.bracket_super[i] + 1e-12);
      }
    }
  }
}

TEST_CASE("solution_map_monotonicity_check") {
  SECTION("scalar logistic pair: u = 1 vs u = 2") {
    const auto m = scalar_model(1.0);
    const auto f1 = Nonlinearity::logistic(1, 2.0, 1.0);
    const auto f2 = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK(solution_map_monotonicity_check(m, f1, f2));
    const auto r1 = solve(m, f1);
    REQUIRE(r1.u.has_value());
    CHECK_THAT((*r1.u)[0], Catch::Matchers::WithinAbs(1.0, 1e-8));
  }

  SECTION("equal nonlinearities give equality") {
    const auto m = scalar_model(1.0);
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK(solution_map_monotonicity_check(m, f, f));
  }

  SECTION("2-state logistic pair against the dense brute force") {
    const auto m = two_state_symmetric();
    Vector mu1(2), mu2(2), beta(2);
    mu1 << 2.0, 2.5;
    mu2 << 3.0, 3.0;
    beta << 1.0, 1.0;
    const auto f1 = Nonlinearity::logistic(mu1, beta);
    const auto f2 = Nonlinearity::logistic(mu2, beta);
    CHECK(solution_map_monotonicity_check(m, f1, f2));

    const auto r1 = solve(m, f1);
    const auto r2 = solve(m, f2);
    REQUIRE(r1.u.has_value());
    REQUIRE(r2.u.has_value());
    const Vector b1 = testsupport::brute_force_fixed_point(m, f1);
    const Vector b2 = testsupport::brute_force_fixed_point(m, f2);
    CHECK((*r1.u - b1).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((*r2.u - b2).cwiseAbs().maxCoeff() < 1e-7);
  }

  SECTION("crossing nonlinearities are rejected") {
    const auto m = scalar_model(1.0);
    const auto f1 = Nonlinearity::logistic(1, 3.0, 0.5);
    const auto f2 = Nonlinearity::logistic(1, 3.0, 1.0);  // smaller, not larger
    CHECK_THROWS_AS(solution_map_monotonicity_check(m, f1, f2), PreconditionUnverified);
  }
}
