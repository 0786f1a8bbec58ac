#include "doctest.h"

#include <cmath>

#include "biasrelax/numerics.hpp"

using namespace biasrelax;

TEST_CASE("expit and logit invert each other") {
  for (double u : {-10.0, -3.0, -0.1, 0.0, 0.4, 5.0, 10.0}) {
    CHECK(logit(expit(u)) == doctest::Approx(u).epsilon(1e-12));
  }
  CHECK(expit(0.0) == 0.5);
  CHECK_THROWS(logit(0.0));
  CHECK_THROWS(logit(1.0));
}

TEST_CASE("log1pexp matches the naive form in range and survives extremes") {
  for (double u : {-700.0, -30.0, -1.0, 0.0, 2.5, 30.0, 700.0}) {
    const double safe = log1pexp(u);
    if (u < 30.0 && u > -30.0) {
      CHECK(safe == doctest::Approx(std::log1p(std::exp(u))).epsilon(1e-14));
    }
    CHECK(std::isfinite(safe));
  }
  CHECK(log1pexp(700.0) == doctest::Approx(700.0));
}

TEST_CASE("normal quantile against reference values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.3) == doctest::Approx(-0.5244005127080409).epsilon(1e-12));
  CHECK(normal_quantile(1e-8) == doctest::Approx(-5.612001244174789).epsilon(1e-10));
  CHECK(normal_quantile(0.999999) == doctest::Approx(4.753424308817087).epsilon(1e-10));
  CHECK_THROWS(normal_quantile(0.0));
  // round trip through the CDF
  for (double p : {0.001, 0.2, 0.5, 0.77, 0.9999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("incomplete beta against reference values") {
  CHECK(ibeta(2.0, 3.0, 0.4) == doctest::Approx(0.5247999999999999).epsilon(1e-12));
  CHECK(ibeta(0.5, 0.5, 0.3) == doctest::Approx(0.36901011956554536).epsilon(1e-12));
  CHECK(ibeta(8.0, 4.0, 0.7) == doctest::Approx(0.5695623387999998).epsilon(1e-12));
  CHECK(ibeta(2.0, 3.0, 0.0) == 0.0);
  CHECK(ibeta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("incomplete beta inverse round trip") {
  for (double a : {0.5, 2.0, 8.0}) {
    for (double b : {0.7, 3.0, 16.0}) {
      for (double p : {0.01, 0.2, 0.5, 0.9, 0.999}) {
        const double x = ibeta_inv(a, b, p);
        CHECK(ibeta(a, b, x) == doctest::Approx(p).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("F quantile against reference values") {
  CHECK(f_quantile(8, 8, 0.975) == doctest::Approx(4.433259889182375).epsilon(1e-10));
  CHECK(f_quantile(8, 8, 0.025) == doctest::Approx(0.2255676466069824).epsilon(1e-10));
  CHECK(f_quantile(2, 2, 0.975) == doctest::Approx(39.0).epsilon(1e-10));
  CHECK(f_quantile(10, 5, 0.9) == doctest::Approx(3.297401668029935).epsilon(1e-10));
  CHECK(f_quantile(3.2, 7.4, 0.5) == doctest::Approx(0.8797648747462951).epsilon(1e-10));
}
