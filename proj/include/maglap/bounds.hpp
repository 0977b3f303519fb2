#pragma once

#include "maglap/spectra.hpp"
#include "maglap/symbols.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maglap {

/// Bound families. Validity ranges (gamma interval, tiling-only vs arbitrary domains)
/// are enforced by evaluate_rhs / bound_report; out-of-range requests are refused.
enum class BoundFamily {
  polya,            // N(lambda) <= (4 pi)^{-1} lambda |Omega|        gamma = 0, tiling, B = 0
  berezin,          // L^cl_{g,2} lambda^{g+1} |Omega|                gamma >= 1, B = 0
  liyau,            // sum_{j<=N} lambda_j >= 2 pi N^2 / |Omega|      B = 0 (via liyau_check)
  main1,            // R_g L^cl_{g,2} lambda^{g+1} |Omega|            0 <= gamma < 1, magnetic
  main2,            // B_g(B,lambda) |Omega|                          0 <= gamma < 1, tiling
  main1number0,     // (4 pi)^{-1} (lambda + B) |Omega|               gamma = 0, tiling
  elv,              // L^cl_{g,2} lambda^{g+1} |Omega|                gamma >= 1, magnetic
  elv2,             // B_g(B,lambda) |Omega|                          gamma >= 1, magnetic
  elvevs,           // sum_{j<=N} lambda_j >= 2 pi N^2 / |Omega|      magnetic (via liyau_check)
  d3_magnetic,      // B^(3)_g(B,lambda) |Omega|                      gamma >= 1 (3D)
  d3_semiclassical, // L^cl_{g,3} lambda^{g+3/2} |Omega|              gamma >= 1/2, tiling (3D)
  d3_excess,        // R_{g+1/2} L^cl_{g,3} lambda^{g+3/2} |Omega|    0 <= gamma < 1/2, tiling (3D)
  appendix_a        // rho_{g,2} L^cl_{g,2} lambda^{g+1} |Omega|      0 <= gamma < 3/2, arbitrary field
};

/// Wire name used in report CSVs ("polya", "main1", ..., "appendixA").
std::string_view family_name(BoundFamily f);
BoundFamily family_from_name(std::string_view name);

struct FamilyTraits {
  double gamma_min = 0.0;
  double gamma_max = std::numeric_limits<double>::infinity(); // exclusive when finite
  bool gamma_zero_only = false;
  bool tiling_only = false;
  bool needs_field = false;  // rhs depends on B > 0
  bool sum_bound = false;    // eigenvalue-sum family, handled by liyau_check
};
FamilyTraits family_traits(BoundFamily f);

/// Right-hand side of the family's inequality. For the sum-bound families (liyau,
/// elvevs) `lambda` plays the role of N and the result is 2 pi N^2 / area.
/// Throws std::domain_error for (gamma, family) outside the declared validity range.
double evaluate_rhs(BoundFamily family, MomentOrder gamma, double B, double lambda,
                    double area);

struct BoundReport {
  BoundFamily family{};
  double gamma = 0.0, B = 0.0, lambda = 0.0;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  double area = 0.0, h = 0.0;
  bool flagged = false;      // ratio exceeded 1 + 3*allowance
  bool exploratory = false;  // tiling-only family evaluated on a non-tiling domain
  std::string source;        // provenance of the lhs (spectrum file or label)
};

/// Discretization allowance alpha(h, lambda) = C_disc (h sqrt(lambda))^2. C_disc is
/// calibrated on the zero-field square, where the exact discrete spectrum is known in
/// closed form, and floored at 1/6 (twice the one-sided 5-point eigenvalue shift bound).
struct Allowance {
  double c_disc = 1.0 / 6.0;
  double operator()(double h, double lambda) const { return c_disc * h * h * lambda; }
};

/// Calibrate C_disc by scanning a zero-field square of side L at spacing h over the
/// lambda grid: the largest positive excursion of lhs/rhs - 1 across the Riesz families,
/// divided by h^2 lambda, floored at 1/6.
Allowance calibrate_allowance(double L, double h, std::span<const double> lambdas,
                              std::span<const double> gammas);

/// One report row per applicable (family, gamma, lambda). lhs comes from riesz_mean on
/// the slice; rows are emitted regardless of outcome and flagged when the ratio exceeds
/// 1 + 3 alpha(h, lambda). Tiling-only families on non-tiling domains are marked
/// exploratory instead of flagged. Sum-bound families contribute one row via liyau_check
/// (lhs = 2 pi N*^2/area at the minimizing N*, rhs = sum of the N* lowest eigenvalues).
std::vector<BoundReport> bound_report(const SpectrumSlice& slice, double area, double B,
                                      double h, bool tiling_domain,
                                      std::span<const BoundFamily> families,
                                      std::span<const double> gammas,
                                      std::span<const double> lambdas,
                                      const Allowance& allowance, std::string source);

void write_report_csv(std::span<const BoundReport> rows, const std::filesystem::path& path,
                      const Allowance& allowance);

/// min over N of (sum_{j<=N} lambda_j) * area / (2 pi N^2); >= 1 up to discretization
/// certifies the eigenvalue-sum bound on this spectrum. Returns the minimizing N too.
struct LiYauResult {
  double min_ratio = 0.0;
  int argmin_n = 0;
};
LiYauResult liyau_check(const SpectrumSlice& slice, double area);

/// Separation-of-variables Riesz mean for the product domain omega x I:
/// sum_{n>=1} sum_j (lambda - mu_j - (pi n/|I|)^2)_+^gamma, truncated when terms vanish.
double product_3d_moment(const SpectrumSlice& slice2d, double interval_length, double lambda,
                         MomentOrder gamma);

struct CounterexampleBudget {
  std::vector<int> flux_ladder{16, 32, 64, 128};
  long max_unknowns = 200000;
  double flux_res = 0.02; // resolution policy B h^2 <= flux_res
};

struct CounterexampleResult {
  double gamma = 0.0, B = 0.0, epsilon = 0.0;
  double L = 0.0;             // square side
  double lambda = 0.0;
  double achieved_ratio = 0.0; // lhs / (L^cl_{g,2} lambda^{g+1} L^2)
  double target = 0.0;         // (1 - epsilon) R_gamma
  double grid_h = 0.0;
  int flux = 0;
  bool certified = false;
  std::string spectrum_file;   // filled when the caller exports the spectrum
};

/// Grow a Dirichlet square through flux-quantized sides at fixed resolution policy until
/// the Riesz mean reaches (1-epsilon) R_gamma L^cl_{gamma,2} L^2 lambda^{gamma+1}, with
/// lambda = B(gamma+1) for gamma > 0 and a shrinking-offset schedule lambda = B(1+delta),
/// delta in {0.2, 0.1, 0.05}, for gamma = 0. Budget exhaustion returns certified = false
/// with the best ratio achieved.
CounterexampleResult counterexample_search(MomentOrder gamma, FieldStrength B, double epsilon,
                                           const CounterexampleBudget& budget = {},
                                           const SpectraOptions& opts = {});

} // namespace maglap
