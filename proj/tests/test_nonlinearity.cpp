#include <catch2/catch_amalgamated.hpp>

#include "support/test_models.hpp"

#include <cmath>

using namespace sublin;

namespace {

// tabulated -sqrt(y) with log-spaced knots down to 1e-8
Nonlinearity neg_sqrt_tabulated(int n) {
  Nonlinearity::Table t;
  t.knots.push_back(0.0);
  t.values.push_back(0.0);
  for (double y = 1e-8; y <= 1e8; y *= 10.0) {
    t.knots.push_back(y);
    t.values.push_back(-std::sqrt(y));
  }
  return Nonlinearity::tabulated(n, t);
}

}  // namespace

TEST_CASE("evaluate and the positive/negative split") {
  SECTION("power family at y = 4") {
    const auto f = Nonlinearity::power_minus_linear(1, 0.5, 1.0);
    CHECK_THAT(f.evaluate(0, 4.0), Catch::Matchers::WithinAbs(-2.0, 1e-15));
    CHECK(f.fplus(0, 4.0) == 0.0);
    CHECK_THAT(f.fminus(0, 4.0), Catch::Matchers::WithinAbs(2.0, 1e-15));
  }

  SECTION("logistic vanishes at the origin") {
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK(f.evaluate(0, 0.0) == 0.0);
  }

  SECTION("saturating at y = 1") {
    const auto f = Nonlinearity::saturating(1, 2.0);
    CHECK_THAT(f.evaluate(0, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-15));
  }

  SECTION("negative arguments are rejected") {
    const auto f = Nonlinearity::logistic(1, 3.0, 1.0);
    CHECK_THROWS_AS(f.evaluate(0, -0.25), NegativeArgument);
  }

  SECTION("decomposition f = f+ - f- with complementary supports") {
    const auto f = Nonlinearity::power_minus_linear(1, 0.5, 1.0);
    for (double y : {0.0, 0.01, 0.25, 1.0, 4.0, 100.0}) {
      const double v = f.evaluate(0, y);
      const double p = f.fplus(0, y), m = f.fminus(0, y);
      CHECK_THAT(p - m, Catch::Matchers::WithinAbs(v, 1e-14));
      CHECK(p * m == 0.0);
      CHECK(p >= 0.0);
      CHECK(m >= 0.0);
    }
  }

  SECTION("tabulated interpolation and linear extension") {
    const auto f = Nonlinearity::tabulated(1, {{0.0, 1.0, 2.0}, {0.0, 2.0, 3.0}});
    CHECK_THAT(f.evaluate(0, 0.5), Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(f.evaluate(0, 1.5), Catch::Matchers::WithinAbs(2.5, 1e-15));
    CHECK_THAT(f.evaluate(0, 4.0), Catch::Matchers::WithinAbs(5.0, 1e-15));  // slope 1 beyond
  }
}

TEST_CASE("generalized slopes") {
  SECTION("power family: a0 = +inf, ainf = -c") {
    const auto [a0, ainf] = Nonlinearity::power_minus_linear(3, 0.5, 1.0).slopes();
    for (int i = 0; i < 3; ++i) {
      CHECK(a0.at(i).is_plus_inf());
      CHECK_THAT(ainf.at(i).value, Catch::Matchers::WithinAbs(-1.0, 1e-15));
    }
  }

  SECTION("logistic: a0 = mu, ainf = -inf where beta > 0") {
    Vector mu(2), beta(2);
    mu << 3.0, 1.0;
    beta << 1.0, 0.0;
    const auto [a0, ainf] = Nonlinearity::logistic(mu, beta).slopes();
    CHECK(a0.at(0).value == 3.0);
    CHECK(a0.at(1).value == 1.0);
    CHECK(ainf.at(0).is_minus_inf());
    CHECK(ainf.at(1).value == 1.0);  // beta = 0 degenerates to linear
  }

  SECTION("saturating: a0 = a, ainf = 0") {
    const auto [a0, ainf] = Nonlinearity::saturating(1, 2.0).slopes();
    CHECK(a0.at(0).value == 2.0);
    CHECK(ainf.at(0).value == 0.0);
  }

  SECTION("linear: both slopes equal the coefficient") {
    const auto [a0, ainf] = Nonlinearity::linear(1, 0.7).slopes();
    CHECK_THAT(a0.at(0).value, Catch::Matchers::WithinAbs(0.7, 1e-15));
    CHECK_THAT(ainf.at(0).value, Catch::Matchers::WithinAbs(0.7, 1e-15));
  }

  SECTION("shift covariance in the extended reals") {
    const auto f = Nonlinearity::shifted(Nonlinearity::power_minus_linear(2, 0.5, 1.0), 0.4);
    const auto [a0, ainf] = f.slopes();
    CHECK(a0.at(0).is_plus_inf());  // inf + C = inf
    CHECK_THAT(ainf.at(0).value, Catch::Matchers::WithinAbs(-0.6, 1e-15));
    CHECK_THAT(f.shift_amount(), Catch::Matchers::WithinAbs(0.4, 1e-15));
  }

  SECTION("finite slopes match difference quotients at the grid edges") {
    Vector mu(1), beta(1);
    mu << 2.5;
    beta << 0.0;
    std::vector<Nonlinearity> fs;
    fs.push_back(Nonlinearity::logistic(mu, beta));
    fs.push_back(Nonlinearity::saturating(1, 1.7));
    for (const auto& f : fs) {
      const auto [a0, ainf] = f.slopes();
      const double q0 = f.evaluate(0, 1e-8) / 1e-8;
      const double qinf = f.evaluate(0, 1e8) / 1e8;
      if (a0.at(0).is_finite() && a0.at(0).value != 0.0)
        CHECK(std::abs(q0 - a0.at(0).value) / std::abs(a0.at(0).value) < 1e-4);
      if (ainf.at(0).is_finite() && ainf.at(0).value != 0.0)
        CHECK(std::abs(qinf - ainf.at(0).value) / std::abs(ainf.at(0).value) < 1e-4);
    }
  }

  SECTION("conjugation leaves the slopes unchanged") {
    Vector phi(2);
    phi << 0.5, 2.0;
    const auto f = Nonlinearity::logistic(2, 3.0, 1.0);
    const auto g = Nonlinearity::conjugated(f, phi);
    const auto [a0f, ainff] = f.slopes();
    const auto [a0g, ainfg] = g.slopes();
    for (int i = 0; i < 2; ++i) {
      CHECK(a0f.at(i) == a0g.at(i));
      CHECK(ainff.at(i) == ainfg.at(i));
    }
    // f(y) = -y^2 conjugated by phi = 2: (- (2y)^2) / 2 = -2 y^2
    const auto h = Nonlinearity::conjugated(Nonlinearity::logistic(1, 0.0, 1.0),
                                            Vector::Constant(1, 2.0));
    CHECK_THAT(h.evaluate(0, 1.5), Catch::Matchers::WithinAbs(-2.0 * 1.5 * 1.5, 1e-13));
  }
}

TEST_CASE("validate_hypotheses") {
  SECTION("logistic passes with lambda = mu and tiny h") {
    const auto cert = validate_hypotheses(Nonlinearity::logistic(2, 3.0, 1.0));
    CHECK(cert.pass);
    CHECK_THAT(cert.lambda, Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK(cert.h.maxCoeff() < 1e-6);
  }

  SECTION("power family: lambda = 0, h = 1/4") {
    const auto cert = validate_hypotheses(Nonlinearity::power_minus_linear(1, 0.5, 1.0));
    CHECK(cert.pass);
    CHECK(cert.lambda == 0.0);
    CHECK_THAT(cert.h[0], Catch::Matchers::WithinAbs(0.25, 1e-6));
  }

  SECTION("C_delta tables") {
    const auto cert = validate_hypotheses(Nonlinearity::power_minus_linear(1, 0.5, 1.0));
    // f = sqrt(y) - y >= -y, and the ratio -f/y approaches 1 - y^{-1/2} < 1
    CHECK(cert.c_for(1.0) <= 1.0 + 1e-9);
    CHECK_THROWS_AS(cert.c_for(0.123456), MissingF3Certificate);
  }

  SECTION("-sqrt(y) fails (F3) with a small-y witness") {
    const auto cert = validate_hypotheses(neg_sqrt_tabulated(1));
    CHECK_FALSE(cert.pass);
    REQUIRE(cert.witness.has_value());
    CHECK(cert.witness->condition.find("F3") != std::string::npos);
    CHECK(cert.witness->y <= 1e-6);
  }

  SECTION("f(x, 0) < 0 fails immediately") {
    const auto f = Nonlinearity::tabulated(1, {{0.0, 1.0}, {-0.5, 0.5}});
    const auto cert = validate_hypotheses(f);
    CHECK_FALSE(cert.pass);
    REQUIRE(cert.witness.has_value());
    CHECK(cert.witness->y == 0.0);
  }
}

TEST_CASE("shift_delta") {
  SECTION("sqrt(y) - y needs only the epsilon shift at delta = 1") {
    const auto f = Nonlinearity::power_minus_linear(1, 0.5, 1.0);
    const auto cert = validate_hypotheses(f);
    const auto fd = shift_delta(f, 1.0, cert);
    for (double y : {1e-8, 1e-3, 0.5, 1.0}) CHECK(fd.evaluate(0, y) > 0.0);
    CHECK(fd.shift_amount() <= cert.c_for(1.0) + 2e-6);
  }

  SECTION("already strictly positive: identity shift") {
    const auto f = Nonlinearity::saturating(1, 2.0);
    const auto cert = validate_hypotheses(f);
    const auto fd = shift_delta(f, 1.0, cert);
    CHECK(fd.shift_amount() == 0.0);
  }

  SECTION("f(y) = -y: shift by C_delta + eps makes eps * y") {
    const auto f = Nonlinearity::linear(1, -1.0);
    const auto cert = validate_hypotheses(f, GridSpec{}, {1.0});
    REQUIRE(cert.pass);
    CHECK_THAT(cert.c_for(1.0), Catch::Matchers::WithinAbs(1.0, 1e-9));
    const auto fd = shift_delta(f, 1.0, cert);
    CHECK_THAT(fd.evaluate(0, 0.5), Catch::Matchers::WithinAbs(0.5e-6, 1e-10));
    for (double y : {1e-6, 0.2, 1.0}) CHECK(fd.evaluate(0, y) > 0.0);
  }

  SECTION("missing certificate is reported") {
    const auto f = Nonlinearity::linear(1, -1.0);
    const auto cert = validate_hypotheses(f, GridSpec{}, {0.5});
    CHECK_THROWS_AS(shift_delta(f, 2.0, cert), MissingF3Certificate);
  }
}
