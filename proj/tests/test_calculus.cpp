#include <catch2/catch_amalgamated.hpp>

#include "support/test_models.hpp"

#include <cmath>
#include <random>

using namespace sublin;
using testsupport::two_state_symmetric;

namespace {

// fixed point of u = gamma + R g(., u) by damped iteration (test-local helper)
Vector fixed_point(const GeneratorModel& m, const Vector& gamma,
                   const std::function<double(int, double)>& g) {
  Vector u = gamma;
  for (int it = 0; it < 200000; ++it) {
    Vector gu(m.n());
    for (int i = 0; i < m.n(); ++i) gu[i] = g(i, u[i]);
    const Vector next = 0.5 * u + 0.5 * (gamma + resolvent_apply(m, 0.0, gu));
    if ((next - u).cwiseAbs().maxCoeff() < 1e-15) return next;
    u = next;
  }
  return u;
}

}  // namespace

TEST_CASE("is_supermedian") {
  const auto m = two_state_symmetric();

  SECTION("R g for nonnegative g") {
    Vector g(2);
    g << 1.0, 0.3;
    const auto cert = is_supermedian(m, resolvent_apply(m, 0.0, g));
    CHECK(cert.verdict);
    CHECK(cert.generator_sign <= 1e-12);
  }

  SECTION("constants are supermedian for sub-Markovian models") {
    const auto cert = is_supermedian(m, Vector::Ones(2));
    CHECK(cert.verdict);
    CHECK_THAT(cert.generator_sign, Catch::Matchers::WithinAbs(-1.0, 1e-14));
  }

  SECTION("negative entries fail") {
    Vector v(2);
    v << 0.5, -0.1;
    CHECK_FALSE(is_supermedian(m, v).verdict);
  }

  SECTION("resolvent gaps are sampled as redundant evidence") {
    const auto cert = is_supermedian(m, Vector::Ones(2));
    REQUIRE(cert.resolvent_gaps.size() == 4);
    for (const auto& [alpha, gap] : cert.resolvent_gaps) CHECK(gap <= 1e-12);
  }

  SECTION("the two characterizations agree on random inputs") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
      const auto model = suites::random_sub_markovian(15, rng);
      Vector v = (trial % 2 == 0) ? suites::random_supermedian(model, rng)
                                  : Vector(testsupport::random_positive(model.n(), rng));
      const auto cert = is_supermedian(model, v);
      const double scale =
          (1.0 + v.cwiseAbs().maxCoeff()) * std::max(1.0, model.L.cwiseAbs().maxCoeff());
      double max_gap = 0.0;
      for (const auto& [alpha, gap] : cert.resolvent_gaps) max_gap = std::max(max_gap, gap);
      const bool decisive =
          std::abs(cert.generator_sign) > 1e-9 * scale || std::abs(max_gap) > 1e-9 * scale;
      if (decisive) CHECK((cert.generator_sign <= 1e-10 * scale) == (max_gap <= 1e-10 * scale));
    }
  }

  SECTION("bounded supermedian limits stay supermedian (closedness)") {
    std::mt19937_64 rng(5);
    const auto model = suites::random_sub_markovian(10, rng);
    const Vector v1 = suites::random_supermedian(model, rng);
    const Vector v2 = suites::random_supermedian(model, rng);
    // v1 + (v2 - v1) / k is supermedian for every k; its limit is v1
    Vector limit = v1;
    for (double k = 1.0; k <= 1024.0; k *= 2.0) {
      const Vector vk = v1 + (v2 - v1) / k;  // convex combination of supermedians
      CHECK(is_supermedian(model, vk).verdict);
    }
    CHECK(is_supermedian(model, limit).verdict);
  }
}

TEST_CASE("concave_image_check") {
  const auto m = two_state_symmetric();

  SECTION("truncation min(y, c)") {
    const Vector v = Vector::Constant(2, 4.0);
    C1Function phi;
    phi.value = [](double y) { return std::min(y, 1.5); };
    phi.deriv = [](double y) { return y < 1.5 ? 1.0 : 0.0; };
    CHECK(concave_image_check(m, v, phi));
  }

  SECTION("square root on the flat vector") {
    const Vector v = Vector::Constant(2, 4.0);
    C1Function phi;
    phi.value = [](double y) { return std::sqrt(y); };
    phi.deriv = [](double y) { return 0.5 / std::sqrt(std::max(y, 1e-300)); };
    CHECK(concave_image_check(m, v, phi));
  }

  SECTION("identity reproduces the verdict") {
    Vector g(2);
    g << 0.7, 0.1;
    const Vector v = resolvent_apply(m, 0.0, g);
    C1Function id;
    id.value = [](double y) { return y; };
    id.deriv = [](double) { return 1.0; };
    CHECK(concave_image_check(m, v, id));
  }

  SECTION("non-supermedian input is refused") {
    Vector v(2);
    v << 0.1, 5.0;  // L v has a positive entry
    C1Function id;
    id.value = [](double y) { return y; };
    id.deriv = [](double) { return 1.0; };
    CHECK_THROWS_AS(concave_image_check(m, v, id), PreconditionUnverified);
  }

  SECTION("non-sub-Markovian models are refused") {
    std::mt19937_64 rng(7);
    const auto gainy = suites::random_gainy(6, rng);
    C1Function id;
    id.value = [](double y) { return y; };
    id.deriv = [](double) { return 1.0; };
    CHECK_THROWS_AS(concave_image_check(gainy, Vector::Ones(gainy.n()), id), NotSubMarkovian);
  }
}

TEST_CASE("kato_check") {
  const auto m = two_state_symmetric();

  SECTION("worked 2-state example") {
    Vector f(2), v(2);
    f << 3.0, 3.0;
    v << 1.0, 1.0;
    const auto kr = kato_check(m, v, Vector::Zero(2), f);
    CHECK(kr.holds);
    // u = Rf = (3,3); lhs = (2,2); rhs = (3,3)
    CHECK_THAT(kr.slack[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(kr.slack[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
  }

  SECTION("v = w = 0 with nonnegative f reduces to equality") {
    Vector f(2);
    f << 2.0, 0.5;
    const auto kr = kato_check(m, Vector::Zero(2), Vector::Zero(2), f);
    CHECK(kr.holds);
    CHECK(kr.slack.cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("randomized signed-f suite") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> fd(-3.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
      const auto model = suites::random_sub_markovian(20, rng);
      const Vector v = suites::random_supermedian(model, rng);
      const Vector w = suites::random_supermedian(model, rng);
      Vector f(model.n());
      for (int i = 0; i < model.n(); ++i) f[i] = fd(rng);
      const auto kr = kato_check(model, v, w, f);
      CHECK(kr.holds);
      CHECK(kr.slack.minCoeff() >= -1e-12 * (1.0 + f.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("convexity_identity_defect") {
  SECTION("scalar affine profile gives the exact defect") {
    const auto m = testsupport::scalar_model(1.0);
    Vector g(1);
    g << 1.7;
    C1Function phi;
    phi.value = [](double y) { return 0.3 + 2.0 * y; };
    phi.deriv = [](double) { return 2.0; };
    const auto cert = convexity_identity_defect(m, g, phi);
    CHECK(cert.verdict);
    // u = g; v = phi(0) + phi'(u) u - phi(u) = 0.3 + 2u - (0.3 + 2u) = 0
    CHECK(cert.vector.cwiseAbs().maxCoeff() < 1e-13);
  }

  SECTION("identity profile recovers u = R g exactly") {
    const auto m = two_state_symmetric();
    Vector g(2);
    g << 1.0, 2.0;
    C1Function id;
    id.value = [](double y) { return y; };
    id.deriv = [](double) { return 1.0; };
    const auto cert = convexity_identity_defect(m, g, id);
    CHECK(cert.verdict);
    CHECK(cert.vector.cwiseAbs().maxCoeff() < 1e-13);
  }

  SECTION("random nonneg g with a Huber profile on a 5-state chain") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const auto model = suites::random_sub_markovian(5, rng);
      Vector g = testsupport::random_positive(model.n(), rng, 0.0, 2.0);
      C1Function phi;
      phi.value = [](double y) { return y <= 1.0 ? y * y : 2.0 * (y - 1.0) + 1.0; };
      phi.deriv = [](double y) { return y <= 1.0 ? 2.0 * y : 2.0; };
      CHECK(convexity_identity_defect(model, g, phi).verdict);
    }
  }
}

TEST_CASE("max_subsolution_check") {
  std::mt19937_64 rng(17);
  const auto m = suites::random_sub_markovian(3, rng);
  const Vector gamma = Vector::Zero(m.n());
  auto g = [](int, double y) { return std::min(y, 1.0); };

  // w = R(h) is a subsolution when h <= min(R h, 1): defect R(min(Rh,1) - h)
  auto build = [&](double scale) {
    Vector h = Vector::Constant(m.n(), scale);
    return make_subsup_record(m, resolvent_apply(m, 0.0, h), gamma, g,
                              SubSupSolutionRecord::Side::Sub);
  };

  SECTION("identical records") {
    const auto rec = build(0.2);
    REQUIRE(rec.verified);
    CHECK(max_subsolution_check(m, rec, rec));
  }

  SECTION("ordered pair inherits the verdict") {
    const auto lo = build(0.1);
    const auto hi = build(0.2);
    REQUIRE(lo.verified);
    REQUIRE(hi.verified);
    CHECK(max_subsolution_check(m, lo, hi));
  }

  SECTION("crossing pair on a 3-state chain") {
    // per-state sources that cross after resolving
    Vector h1 = Vector::Zero(m.n()), h2 = Vector::Zero(m.n());
    h1[0] = 0.25;
    h2[m.n() - 1] = 0.25;
    const auto r1 = make_subsup_record(m, resolvent_apply(m, 0.0, h1), gamma, g,
                                       SubSupSolutionRecord::Side::Sub);
    const auto r2 = make_subsup_record(m, resolvent_apply(m, 0.0, h2), gamma, g,
                                       SubSupSolutionRecord::Side::Sub);
    REQUIRE(r1.verified);
    REQUIRE(r2.verified);
    CHECK(max_subsolution_check(m, r1, r2));
  }
}

TEST_CASE("comparison_check") {
  const auto m = two_state_symmetric();
  auto g = [](int, double y) { return std::min(y, 1.0); };
  auto g_low = [](int, double y) { return 0.5 * std::min(y, 1.0); };
  const Vector gamma = Vector::Constant(2, 0.2);
  const Vector gamma_low = Vector::Constant(2, 0.1);

  const Vector u_max = fixed_point(m, gamma, g);
  const Vector u_low = fixed_point(m, gamma_low, g_low);
  const Vector psi = Vector::Constant(2, 10.0);

  SECTION("dominated inner problem stays below the maximal solution") {
    CHECK(comparison_check(m, {gamma, g, psi, u_max}, {gamma_low, g_low, u_low}));
  }

  SECTION("equality boundary") {
    CHECK(comparison_check(m, {gamma, g, psi, u_max}, {gamma, g, u_max}));
  }

  SECTION("violated dominance is reported") {
    auto g_big = [](int, double y) { return 2.0 + std::min(y, 1.0); };
    CHECK_THROWS_AS(comparison_check(m, {gamma, g, psi, u_max}, {gamma_low, g_big, u_low}),
                    PreconditionUnverified);
  }

  SECTION("gamma ordering is verified") {
    CHECK_THROWS_AS(comparison_check(m, {gamma_low, g, psi, u_max}, {gamma, g_low, u_low}),
                    PreconditionUnverified);
  }
}
