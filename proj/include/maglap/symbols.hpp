#pragma once

#include <span>
#include <vector>

namespace maglap {

/// Riesz-mean order gamma >= 0.
struct MomentOrder {
  double value;
  explicit MomentOrder(double g);
};

/// Constant magnetic field strength B > 0 (inverse length squared).
struct FieldStrength {
  double value;
  explicit FieldStrength(double b);
};

/// Value of a Landau-level symbol; always >= 0. The flag records whether the
/// gamma = 0 left-continuity tie rule decided a band at this lambda.
struct SymbolValue {
  double value = 0.0;
  bool left_limit_convention = false;
};

/// Semiclassical constant L^cl_{gamma,d} for d in {1,2,3}.
/// L^cl_{gamma,d} = Gamma(gamma+1) / (2^d pi^{d/2} Gamma(gamma+d/2+1));
/// for d = 2 this is 1/(4 pi (gamma+1)).
double lcl_constant(MomentOrder gamma, int dim);

/// Landau-level average (2 pi)^{-1} B sum_k (lambda - B(2k+1))_+^gamma.
/// The sum is finite. For gamma = 0 a level exactly at lambda does not count
/// (left continuity); ties within 1e-14*lambda are treated as not counting.
SymbolValue magnetic_symbol_2d(FieldStrength B, double lambda, MomentOrder gamma);

/// Three-dimensional analogue:
/// (Gamma(gamma+1)/Gamma(gamma+3/2)) * B/(4 pi^{3/2}) * sum_k (lambda-B(2k+1))_+^{gamma+1/2}.
/// Equals L^cl_{gamma,1} * magnetic_symbol_2d(B, lambda, gamma+1/2).
SymbolValue magnetic_symbol_3d(FieldStrength B, double lambda, MomentOrder gamma);

/// Sharp excess factor over the semiclassical constant for 0 <= gamma < 1:
/// R_0 = 2, R_gamma = 2 (gamma/(gamma+1))^gamma. Always > 1.
/// Throws std::domain_error for gamma >= 1 (no excess there; see sup_ratio).
double excess_factor(MomentOrder gamma);

/// Interpolation constant C(gamma, sigma) for sigma > gamma >= 0:
/// C(0, sigma) = 1, C(gamma, sigma) = sigma^{-sigma} gamma^gamma (sigma-gamma)^{sigma-gamma}.
double goingdown_constant(MomentOrder gamma, double sigma);

enum class SupAttainment {
  at_lambda,              // supremum attained at a finite lambda
  limit_from_first_level, // approached as lambda -> B+ (gamma = 0)
  limit_at_infinity       // approached as lambda -> infinity (gamma > 1)
};

struct SupRatio {
  double value = 0.0;
  SupAttainment attainment = SupAttainment::at_lambda;
  double lambda = 0.0; // meaningful when attainment == at_lambda
};

/// sup_{lambda>0} magnetic_symbol_2d(B,lambda,gamma) / (L^cl_{gamma,2} lambda^{gamma+1}),
/// closed form: 2 (gamma=0, as lambda->B+), 2(gamma/(gamma+1))^gamma at lambda=B(gamma+1)
/// for 0<gamma<1, and 1 for gamma >= 1 (attained at lambda=2B when gamma=1, else as
/// lambda -> infinity).
SupRatio sup_ratio(MomentOrder gamma, FieldStrength B);

/// Independent numeric search for the same supremum: coarse scan plus golden-section
/// refinement on every inter-level band up to the tail threshold, then the large-lambda
/// asymptote. Agrees with sup_ratio to better than 1e-6.
SupRatio sup_ratio_search(MomentOrder gamma, FieldStrength B);

/// Excess factor rho_{gamma,d} for arbitrary-field bounds, 0 <= gamma < 3/2, d >= 2.
/// For d = 2 this simplifies to (5/3)^{3/2} (gamma/(gamma+1))^gamma.
double rho_constant(MomentOrder gamma, int dim);

/// gamma * int_0^infty magnetic_symbol_2d(B, lambda - mu, 0) mu^{gamma-1} dmu for gamma > 0,
/// evaluated by exact per-band integration of the piecewise c * mu^{gamma-1} integrand.
/// Equals magnetic_symbol_2d(B, lambda, gamma).
double lift_moment(FieldStrength B, double lambda, MomentOrder gamma);

struct LegendrePoint {
  double value = 0.0;
  double lambda = 0.0;       // maximizing knot
  bool boundary_attained = false;
};

/// sup_lambda (p*lambda - f(lambda)) over a convex table sampled at ascending knots.
/// For piecewise-linear interpolation the supremum sits at a knot; the first/last knot
/// is reported as boundary-attained. Convexity is certified from second differences.
LegendrePoint legendre_transform(std::span<const double> lambdas,
                                 std::span<const double> values, double p);

} // namespace maglap
