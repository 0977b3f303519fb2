#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maglap/errors.hpp"
#include "maglap/symbols.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace maglap;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

// Reference sum with a deliberately overshot term count; used to pin down that the
// closed-form evaluation terminates at the right band.
double brute_symbol_2d(double b, double lambda, double g, long extra_terms) {
  long kmax = static_cast<long>(std::ceil(lambda / b)) + extra_terms;
  double sum = 0.0;
  for (long k = 0; k <= kmax; ++k) {
    const double x = lambda - b * (2.0 * k + 1.0);
    if (x > 0.0) sum += (g == 0.0) ? 1.0 : std::pow(x, g);
  }
  return b / (2.0 * kPi) * sum;
}

} // namespace

TEST_CASE("semiclassical constants") {
  CHECK(rel_err(lcl_constant(MomentOrder(1), 2), 0.039788735772973834) < 1e-14);
  CHECK(rel_err(lcl_constant(MomentOrder(0), 2), 1.0 / (4.0 * kPi)) < 1e-14);
  CHECK(rel_err(lcl_constant(MomentOrder(0), 1), 1.0 / kPi) < 1e-13);
  CHECK(rel_err(lcl_constant(MomentOrder(1), 1), 2.0 / (3.0 * kPi)) < 1e-13);
  CHECK(rel_err(lcl_constant(MomentOrder(0), 3), 0.016886863940389629) < 1e-13);
  CHECK(rel_err(lcl_constant(MomentOrder(1), 3), 0.0067547455761558514) < 1e-13);
  CHECK_THROWS_AS(lcl_constant(MomentOrder(1), 4), std::domain_error);
  CHECK_THROWS_AS(lcl_constant(MomentOrder(1), 0), std::domain_error);
  CHECK_THROWS_AS(MomentOrder(-0.5), std::domain_error);
  CHECK_THROWS_AS(FieldStrength(0.0), std::domain_error);
}

TEST_CASE("magnetic symbol, 2d") {
  const FieldStrength B1(1.0);
  SUBCASE("left continuity at the first level") {
    const SymbolValue v = magnetic_symbol_2d(B1, 1.0, MomentOrder(0));
    CHECK(v.value == 0.0);
    CHECK(v.left_limit_convention);
  }
  SUBCASE("two levels below 3.5") {
    const SymbolValue v = magnetic_symbol_2d(B1, 3.5, MomentOrder(0));
    CHECK(rel_err(v.value, 1.0 / kPi) < 1e-14);
    CHECK_FALSE(v.left_limit_convention);
  }
  SUBCASE("single linear term") {
    CHECK(rel_err(magnetic_symbol_2d(B1, 2.0, MomentOrder(1)).value, 1.0 / (2.0 * kPi)) <
          1e-14);
  }
  SUBCASE("a level exactly at lambda does not count") {
    const SymbolValue v = magnetic_symbol_2d(B1, 3.0, MomentOrder(0));
    CHECK(rel_err(v.value, 1.0 / (2.0 * kPi)) < 1e-14);
    CHECK(v.left_limit_convention);
  }
  SUBCASE("finite-sum termination") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ub(0.1, 3.0), ul(0.0, 25.0), ug(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
      const double b = ub(rng), lambda = ul(rng), g = ug(rng);
      const double direct = magnetic_symbol_2d(FieldStrength(b), lambda, MomentOrder(g)).value;
      CHECK(rel_err(direct, brute_symbol_2d(b, lambda, g, 50)) < 1e-12);
    }
  }
  SUBCASE("semiclassical limit B -> 0") {
    // At lambda = 2mB the gamma = 1 symbol matches the classical value exactly, so the
    // error along this ladder can only be required to not increase beyond rounding.
    const double target = lcl_constant(MomentOrder(1), 2); // lambda = 1, gamma = 1
    double prev = std::numeric_limits<double>::infinity();
    for (double b : {1.0, 0.1, 0.01, 0.001}) {
      const double err =
          std::abs(magnetic_symbol_2d(FieldStrength(b), 1.0, MomentOrder(1)).value - target);
      CHECK(err <= prev + 1e-12 * target);
      prev = err;
    }
    CHECK(prev / target < 0.01);
  }
  SUBCASE("convex bound, gamma >= 1") {
    for (double g : {1.0, 1.5, 2.0})
      for (double b : {0.3, 1.0, 2.5})
        for (double lam = 0.05; lam < 12.0; lam += 0.173) {
          const double sym = magnetic_symbol_2d(FieldStrength(b), lam, MomentOrder(g)).value;
          CHECK(sym <= lcl_constant(MomentOrder(g), 2) * std::pow(lam, g + 1.0) * (1 + 1e-12));
        }
  }
  SUBCASE("sharpness identity at lambda = B(gamma+1)") {
    for (double g = 0.1; g < 0.95; g += 0.1)
      for (double b : {0.5, 1.0, 2.0}) {
        const double lam = b * (g + 1.0);
        const double lhs = magnetic_symbol_2d(FieldStrength(b), lam, MomentOrder(g)).value;
        const double rhs = excess_factor(MomentOrder(g)) * lcl_constant(MomentOrder(g), 2) *
                           std::pow(lam, g + 1.0);
        CHECK(rel_err(lhs, rhs) < 1e-10);
      }
  }
  SUBCASE("gamma = 0 jump at the first level") {
    for (double b : {0.5, 1.0, 3.0}) {
      CHECK(magnetic_symbol_2d(FieldStrength(b), b, MomentOrder(0)).value == 0.0);
      const double just_above =
          magnetic_symbol_2d(FieldStrength(b), b * (1.0 + 1e-9), MomentOrder(0)).value;
      CHECK(rel_err(just_above, b / (2.0 * kPi)) < 1e-14);
      CHECK(rel_err(just_above, 2.0 * lcl_constant(MomentOrder(0), 2) * b) < 1e-14);
    }
  }
}

TEST_CASE("magnetic symbol, 3d") {
  const FieldStrength B1(1.0);
  CHECK(magnetic_symbol_3d(B1, 0.5, MomentOrder(0)).value == 0.0);
  // single-term value 1/(2 pi^2), cross-checked against quadrature of the 2d symbol
  CHECK(rel_err(magnetic_symbol_3d(B1, 2.0, MomentOrder(0)).value, 0.050660591821168886) <
        1e-13);

  SUBCASE("dimension-reduction identity") {
    for (double g : {0.0, 0.5, 1.0, 1.7})
      for (double b : {0.5, 1.0, 2.0})
        for (double lam = 0.1; lam < 8.0 * b; lam += 0.37 * b) {
          const double lhs = lcl_constant(MomentOrder(g), 1) *
                             magnetic_symbol_2d(FieldStrength(b), lam, MomentOrder(g + 0.5)).value;
          const double rhs = magnetic_symbol_3d(FieldStrength(b), lam, MomentOrder(g)).value;
          if (rhs == 0.0)
            CHECK(lhs == 0.0);
          else
            CHECK(rel_err(lhs, rhs) < 1e-10);
        }
    CHECK(rel_err(magnetic_symbol_3d(B1, 5.0, MomentOrder(1)).value, 0.36571635108802677) <
          1e-12);
  }
  SUBCASE("3d convex bound, gamma >= 1/2") {
    for (double g : {0.5, 1.0, 2.0})
      for (double b : {0.5, 1.0, 2.0})
        for (double lam = 0.1; lam < 10.0; lam += 0.21) {
          const double sym = magnetic_symbol_3d(FieldStrength(b), lam, MomentOrder(g)).value;
          CHECK(sym <= lcl_constant(MomentOrder(g), 3) * std::pow(lam, g + 1.5) * (1 + 1e-12));
        }
  }
}

TEST_CASE("excess factor") {
  CHECK(excess_factor(MomentOrder(0)) == 2.0);
  CHECK(rel_err(excess_factor(MomentOrder(0.5)), 1.1547005383792515) < 1e-14);
  CHECK(rel_err(excess_factor(MomentOrder(0.99)), 1.0019459466173959) < 1e-13);
  for (double g = 0.0; g < 1.0; g += 0.05)
    CHECK(excess_factor(MomentOrder(g)) > 1.0);
  CHECK_THROWS_AS(excess_factor(MomentOrder(1.0)), std::domain_error);
}

TEST_CASE("goingdown constant and inequality") {
  CHECK(goingdown_constant(MomentOrder(0), 1.5) == 1.0);
  CHECK(rel_err(goingdown_constant(MomentOrder(1), 1.5), 0.38490017945975047) < 1e-14);
  CHECK(rel_err(goingdown_constant(MomentOrder(1), 2.0), 0.25) < 1e-14);
  CHECK_THROWS_AS(goingdown_constant(MomentOrder(2), 1.5), std::domain_error);

  // (E-lambda)_-^g <= C(g,s) (mu-lambda)^{g-s} (E-mu)_-^s on a grid, with equality at
  // the maximizing lambda* = (g mu + (s-g) E) / s.
  for (double g : {0.0, 0.3, 1.0})
    for (double s : {1.0, 1.5, 2.0}) {
      if (!(s > g)) continue;
      const double c = goingdown_constant(MomentOrder(g), s);
      for (double e = 0.0; e < 3.0; e += 0.5)
        for (double mu = e + 0.25; mu < e + 3.0; mu += 0.5) {
          for (double lam = e + 0.01; lam < mu; lam += (mu - e) / 17.0) {
            const double lhs = std::pow(lam - e, g);
            const double rhs = c * std::pow(mu - lam, g - s) * std::pow(mu - e, s);
            CHECK(lhs <= rhs * (1.0 + 1e-12));
          }
          if (g > 0.0) {
            const double lam_star = (g * mu + (s - g) * e) / s;
            const double lhs = std::pow(lam_star - e, g);
            const double rhs = c * std::pow(mu - lam_star, g - s) * std::pow(mu - e, s);
            CHECK(rel_err(lhs, rhs) < 1e-12);
          }
        }
    }
}

TEST_CASE("sup ratio closed form and numeric search") {
  const FieldStrength B1(1.0);
  SUBCASE("closed forms") {
    const SupRatio r0 = sup_ratio(MomentOrder(0), B1);
    CHECK(r0.value == 2.0);
    CHECK(r0.attainment == SupAttainment::limit_from_first_level);

    const SupRatio rh = sup_ratio(MomentOrder(0.5), B1);
    CHECK(rel_err(rh.value, 1.1547005383792515) < 1e-14);
    CHECK(rh.attainment == SupAttainment::at_lambda);
    CHECK(rh.lambda == doctest::Approx(1.5));

    const SupRatio r2 = sup_ratio(MomentOrder(2), B1);
    CHECK(r2.value == 1.0);
    CHECK(r2.attainment == SupAttainment::limit_at_infinity);
  }
  SUBCASE("search agrees with the closed form") {
    for (double g : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0})
      for (double b : {0.7, 1.0}) {
        const SupRatio closed = sup_ratio(MomentOrder(g), FieldStrength(b));
        const SupRatio numeric = sup_ratio_search(MomentOrder(g), FieldStrength(b));
        CHECK(std::abs(closed.value - numeric.value) < 1e-6);
        if (g > 0.0 && g < 1.0) CHECK(std::abs(numeric.lambda - b * (g + 1.0)) < 1e-5 * b);
      }
  }
}

TEST_CASE("rho constant") {
  CHECK(rel_err(rho_constant(MomentOrder(0), 2), 2.1516574145596760) < 1e-13);
  CHECK(rel_err(rho_constant(MomentOrder(1), 2), 1.0758287072798380) < 1e-13);
  CHECK(rel_err(rho_constant(MomentOrder(0), 2) / excess_factor(MomentOrder(0)),
                1.0758287072798380) < 1e-13);
  CHECK(rel_err(rho_constant(MomentOrder(0.7), 3), 1.1942238495581738) < 1e-12);
  SUBCASE("d = 2 closed-form simplification") {
    for (double g = 0.0; g < 1.5; g += 0.07) {
      const double simplified =
          std::pow(5.0 / 3.0, 1.5) * ((g == 0.0) ? 1.0 : std::pow(g / (g + 1.0), g));
      CHECK(rel_err(rho_constant(MomentOrder(g), 2), simplified) < 1e-12);
    }
  }
  CHECK_THROWS_AS(rho_constant(MomentOrder(1.5), 2), std::domain_error);
  CHECK_THROWS_AS(rho_constant(MomentOrder(1), 1), std::domain_error);
}

TEST_CASE("lift identity") {
  const FieldStrength B1(1.0);
  CHECK(rel_err(lift_moment(B1, 2.0, MomentOrder(1)), 1.0 / (2.0 * kPi)) < 1e-12);
  CHECK(lift_moment(B1, 0.5, MomentOrder(0.5)) == 0.0);
  CHECK(rel_err(lift_moment(B1, 4.0, MomentOrder(0.5)), 0.43481939080279136) < 1e-12);
  CHECK_THROWS_AS(lift_moment(B1, 2.0, MomentOrder(0)), std::domain_error);

  for (double g : {0.5, 1.0, 1.5})
    for (double b : {0.5, 1.0, 2.0})
      for (double lam = 0.05 * b; lam < 8.0 * b; lam += 0.11 * b) {
        const double direct = magnetic_symbol_2d(FieldStrength(b), lam, MomentOrder(g)).value;
        const double lifted = lift_moment(FieldStrength(b), lam, MomentOrder(g));
        if (direct == 0.0)
          CHECK(lifted == 0.0);
        else
          CHECK(rel_err(lifted, direct) < 1e-10);
      }
}

TEST_CASE("legendre transform on tables") {
  SUBCASE("self-dual parabola") {
    std::vector<double> xs, fs;
    for (double x = 1e-4; x <= 3.0; x += 1e-3) {
      xs.push_back(x);
      fs.push_back(0.5 * x * x);
    }
    const LegendrePoint p = legendre_transform(xs, fs, 1.0);
    CHECK(std::abs(p.value - 0.5) < 1e-6);
    CHECK_FALSE(p.boundary_attained);
  }
  SUBCASE("linear objective hits the boundary") {
    std::vector<double> xs, fs;
    const double big = 7.25;
    for (double x = 0.0; x <= big + 1e-12; x += big / 64.0) {
      xs.push_back(x);
      fs.push_back(0.0);
    }
    const LegendrePoint p = legendre_transform(xs, fs, 1.0);
    CHECK(p.value == doctest::Approx(big));
    CHECK(p.boundary_attained);
    CHECK(p.lambda == doctest::Approx(big));
  }
  SUBCASE("eigenvalue-sum dual of the quadratic bound") {
    // f(lambda) = L^cl_{1,2} |Omega| lambda^2 with the maximizers 4 pi N / |Omega|
    // placed on knots; the transform at p = N is 2 pi N^2 / |Omega| exactly.
    const double area = 1.0;
    const double c = lcl_constant(MomentOrder(1), 2) * area;
    std::vector<double> xs, fs;
    const double step = kPi / 8.0;
    for (double x = 0.0; x <= 4.0 * kPi * 52.0; x += step) {
      xs.push_back(x);
      fs.push_back(c * x * x);
    }
    for (int n = 1; n <= 50; ++n) {
      const LegendrePoint p = legendre_transform(xs, fs, static_cast<double>(n));
      CHECK(rel_err(p.value, 2.0 * kPi * n * n / area) < 1e-9);
    }
  }
  SUBCASE("error paths") {
    std::vector<double> xs{1.0, 2.0, 3.0}, bad{0.0, 5.0, 0.0};
    CHECK_THROWS_AS(legendre_transform({}, {}, 1.0), DataError);
    CHECK_THROWS_AS(legendre_transform(xs, bad, 1.0), DataError);
  }
}
