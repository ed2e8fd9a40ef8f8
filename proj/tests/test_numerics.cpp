#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "voltsim/numerics.hpp"

using namespace voltsim;

TEST_CASE("ibeta endpoints and uniform case") {
  CHECK(ibeta(2.0, 3.0, 0.0) == 0.0);
  CHECK(ibeta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1,1) is the uniform CDF
  CHECK(ibeta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(ibeta(1.0, 1.0, 0.84) == doctest::Approx(0.84).epsilon(1e-12));
  CHECK_THROWS_AS(ibeta(0.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("ibeta arcsine closed form") {
  // I_x(1/2,1/2) = (2/pi) asin(sqrt(x)); at x=1/4 that is exactly 1/3
  CHECK(ibeta(0.5, 0.5, 0.25) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("ibeta symmetry") {
  double a = 2.5, b = 4.0, x = 0.3;
  CHECK(ibeta(a, b, x) + ibeta(b, a, 1.0 - x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("f_survival closed form and reference value") {
  // F(2, 6): survival = (1 + F/3)^-3, so F=3 gives exactly 1/8
  CHECK(f_survival(3.0, 2, 6) == doctest::Approx(0.125).epsilon(1e-12));
  // frozen from an independent statistics package: F(1,14) at 13.8827...
  CHECK(f_survival(13.882740924908909, 1, 14) ==
        doctest::Approx(0.002258277796393386).epsilon(1e-9));
  CHECK(f_survival(0.0, 3, 10) == 1.0);
  CHECK(f_survival(-1.0, 3, 10) == 1.0);
}

TEST_CASE("solve_spd solves and rejects") {
  std::vector<double> a = {4.0, 2.0, 2.0, 3.0};
  std::vector<double> b = {10.0, 8.0};
  REQUIRE(solve_spd(a, b, 2));
  CHECK(b[0] == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(1.5).epsilon(1e-12));

  std::vector<double> bad = {1.0, 2.0, 2.0, 1.0};  // indefinite
  std::vector<double> rhs = {1.0, 1.0};
  CHECK_FALSE(solve_spd(bad, rhs, 2));
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool same = true, distinct = false;
  for (int i = 0; i < 16; i++) {
    uint64_t va = a.next();
    if (va != b.next()) same = false;
    if (va != c.next()) distinct = true;
  }
  CHECK(same);
  CHECK(distinct);
}

TEST_CASE("rng uniform range") {
  Rng r(1, 0);
  for (int i = 0; i < 1000; i++) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng binomial edges and mean") {
  Rng r(9, 3);
  CHECK(r.binomial(10, 0.0) == 0);
  CHECK(r.binomial(10, 1.0) == 10);
  CHECK(r.binomial(0, 0.5) == 0);

  double sum = 0.0;
  const int n_draws = 20000;
  for (int i = 0; i < n_draws; i++) {
    int k = r.binomial(40, 0.3);
    CHECK(k >= 0);
    CHECK(k <= 40);
    sum += k;
  }
  // mean 12, sd of the sample mean ~ 0.02
  CHECK(sum / n_draws == doctest::Approx(12.0).epsilon(0.02));
}

TEST_CASE("rng normal moments") {
  Rng r(77, 1);
  double s = 0.0, s2 = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; i++) {
    double x = r.normal();
    s += x;
    s2 += x * x;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}
