#include "maglap/symbols.hpp"

#include "maglap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace maglap {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + " must be finite");
  return x;
}

// x^g with the 0^0 := 1 convention used by the closed-form constants.
double pow00(double x, double g) {
  if (g == 0.0) return 1.0;
  return std::pow(x, g);
}

} // namespace

MomentOrder::MomentOrder(double g) : value(g) {
  require_finite(g, "gamma");
  if (g < 0.0) throw std::domain_error("gamma must be >= 0");
}

FieldStrength::FieldStrength(double b) : value(b) {
  require_finite(b, "B");
  if (b <= 0.0) throw std::domain_error("B must be > 0");
}

double lcl_constant(MomentOrder gamma, int dim) {
  const double g = gamma.value;
  if (dim < 1 || dim > 3) throw std::domain_error("lcl_constant: dimension must be 1, 2 or 3");
  if (dim == 2) return 1.0 / (4.0 * kPi * (g + 1.0));
  const double d = static_cast<double>(dim);
  return std::exp(std::lgamma(g + 1.0) - std::lgamma(g + d / 2.0 + 1.0)) /
         (std::pow(2.0, d) * std::pow(kPi, d / 2.0));
}

SymbolValue magnetic_symbol_2d(FieldStrength B, double lambda, MomentOrder gamma) {
  require_finite(lambda, "lambda");
  const double b = B.value;
  const double g = gamma.value;
  const double tie_tol = 1e-14 * std::abs(lambda);

  SymbolValue out;
  double sum = 0.0;
  for (long k = 0;; ++k) {
    const double level = b * (2.0 * static_cast<double>(k) + 1.0);
    const double x = lambda - level;
    if (x <= 0.0) break;
    if (g == 0.0) {
      if (x > tie_tol) {
        sum += 1.0;
      } else {
        out.left_limit_convention = true; // tie: the level does not count
      }
    } else {
      sum += std::pow(x, g);
    }
  }
  if (g == 0.0 && lambda > 0.0) {
    // An exact tie also occurs when the first excluded level sits at lambda.
    const double x_next = std::remainder(lambda / b - 1.0, 2.0);
    if (std::abs(x_next) * b <= tie_tol) out.left_limit_convention = true;
  }
  out.value = b / (2.0 * kPi) * sum;
  return out;
}

SymbolValue magnetic_symbol_3d(FieldStrength B, double lambda, MomentOrder gamma) {
  require_finite(lambda, "lambda");
  const double b = B.value;
  const double g = gamma.value;

  double sum = 0.0;
  for (long k = 0;; ++k) {
    const double x = lambda - b * (2.0 * static_cast<double>(k) + 1.0);
    if (x <= 0.0) break;
    sum += std::pow(x, g + 0.5);
  }
  const double prefactor = std::exp(std::lgamma(g + 1.0) - std::lgamma(g + 1.5)) * b /
                           (4.0 * std::pow(kPi, 1.5));
  return SymbolValue{prefactor * sum, false};
}

double excess_factor(MomentOrder gamma) {
  const double g = gamma.value;
  if (g >= 1.0) throw std::domain_error("excess_factor: requires 0 <= gamma < 1");
  if (g == 0.0) return 2.0;
  return 2.0 * std::pow(g / (g + 1.0), g);
}

double goingdown_constant(MomentOrder gamma, double sigma) {
  const double g = gamma.value;
  require_finite(sigma, "sigma");
  if (!(sigma > g)) throw std::domain_error("goingdown_constant: requires sigma > gamma");
  if (g == 0.0) return 1.0;
  return std::pow(sigma, -sigma) * std::pow(g, g) * std::pow(sigma - g, sigma - g);
}

namespace {

double symbol_over_classical(double b, double lambda, double g) {
  const double sym = magnetic_symbol_2d(FieldStrength(b), lambda, MomentOrder(g)).value;
  return sym / (lcl_constant(MomentOrder(g), 2) * std::pow(lambda, g + 1.0));
}

struct BandMax {
  double value;
  double arg;
};

// Coarse scan followed by golden-section refinement of f on [lo, hi].
BandMax band_maximum(double lo, double hi, const auto& f) {
  constexpr int kScan = 33;
  double best_x = lo, best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (kScan - 1);
    const double v = f(x);
    if (v > best) { best = v; best_x = x; }
  }
  const double span = (hi - lo) / (kScan - 1);
  double a = std::max(lo, best_x - span), c = std::min(hi, best_x + span);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = c - phi * (c - a), x2 = a + phi * (c - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 120 && (c - a) > 1e-13 * (std::abs(a) + 1.0); ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (c - a); f2 = f(x2);
    } else {
      c = x2; x2 = x1; f2 = f1;
      x1 = c - phi * (c - a); f1 = f(x1);
    }
  }
  if (f1 > best) { best = f1; best_x = x1; }
  if (f2 > best) { best = f2; best_x = x2; }
  return {best, best_x};
}

} // namespace

SupRatio sup_ratio(MomentOrder gamma, FieldStrength B) {
  const double g = gamma.value;
  SupRatio out;
  if (g == 0.0) {
    out.value = 2.0;
    out.attainment = SupAttainment::limit_from_first_level;
  } else if (g < 1.0) {
    out.value = 2.0 * std::pow(g / (g + 1.0), g);
    out.attainment = SupAttainment::at_lambda;
    out.lambda = B.value * (g + 1.0);
  } else if (g == 1.0) {
    // B_1(B, 2B) = B^2/(2 pi) = L^cl_{1,2} (2B)^2 exactly.
    out.value = 1.0;
    out.attainment = SupAttainment::at_lambda;
    out.lambda = 2.0 * B.value;
  } else {
    out.value = 1.0;
    out.attainment = SupAttainment::limit_at_infinity;
  }
  return out;
}

SupRatio sup_ratio_search(MomentOrder gamma, FieldStrength B) {
  const double g = gamma.value;
  const double b = B.value;
  const auto ratio = [&](double lam) { return symbol_over_classical(b, lam, g); };

  // Scan every band (B(2k+1), B(2k+3)) until past the tail threshold, beyond which the
  // per-band maxima decay (gamma < 1) or climb monotonically toward the lambda -> infinity
  // limit (gamma >= 1), which is sampled directly.
  const double tail_lambda = b * std::max(10.0, 4.0 * (g + 1.0));
  const long n_bands = static_cast<long>(std::ceil(tail_lambda / (2.0 * b))) + 3;

  SupRatio out;
  out.value = -std::numeric_limits<double>::infinity();
  for (long k = 0; k < n_bands; ++k) {
    const double lo = b * (2.0 * static_cast<double>(k) + 1.0) * (1.0 + 1e-9);
    const double hi = b * (2.0 * static_cast<double>(k) + 3.0) * (1.0 - 1e-12);
    const BandMax bm = band_maximum(lo, hi, ratio);
    if (bm.value > out.value) {
      out.value = bm.value;
      out.lambda = bm.arg;
      out.attainment = (g == 0.0 && k == 0) ? SupAttainment::limit_from_first_level
                                            : SupAttainment::at_lambda;
    }
  }
  const double far = ratio(2e6 * b);
  if (far > out.value) {
    out.value = far;
    out.attainment = SupAttainment::limit_at_infinity;
    out.lambda = 0.0;
  }
  return out;
}

double rho_constant(MomentOrder gamma, int dim) {
  const double g = gamma.value;
  if (g >= 1.5) throw std::domain_error("rho_constant: requires 0 <= gamma < 3/2");
  if (dim < 2) throw std::domain_error("rho_constant: requires d >= 2");
  const double d = static_cast<double>(dim);
  const double gamma_ratio = std::exp(std::lgamma(2.5) + std::lgamma(g + d / 2.0 + 1.0) -
                                      std::lgamma((5.0 + d) / 2.0) - std::lgamma(g + 1.0));
  return gamma_ratio * std::pow(3.0, -1.5) * std::pow(3.0 + d, (3.0 + d) / 2.0) *
         pow00(2.0 * g, g) * std::pow(2.0 * g + d, -g - d / 2.0);
}

double lift_moment(FieldStrength B, double lambda, MomentOrder gamma) {
  require_finite(lambda, "lambda");
  const double g = gamma.value;
  if (g == 0.0) throw std::domain_error("lift_moment: requires gamma > 0");
  const double b = B.value;

  // Thresholds t_k = lambda - B(2k+1): the count of levels below lambda - mu equals j
  // exactly on (t_j, t_{j-1}), so the integrand is j * mu^{gamma-1} there and each
  // segment integrates to (j/gamma) (t_{j-1}^gamma - t_j^gamma).
  std::vector<double> t;
  for (long k = 0;; ++k) {
    const double x = lambda - b * (2.0 * static_cast<double>(k) + 1.0);
    if (x <= 0.0) break;
    t.push_back(x);
  }
  if (t.empty()) return 0.0;

  const long m = static_cast<long>(t.size());
  double integral = static_cast<double>(m) * std::pow(t[m - 1], g); // [0, t_{m-1}), count m
  for (long j = m - 1; j >= 1; --j) {
    integral += static_cast<double>(j) * (std::pow(t[j - 1], g) - std::pow(t[j], g));
  }
  return b / (2.0 * kPi) * integral;
}

LegendrePoint legendre_transform(std::span<const double> lambdas,
                                 std::span<const double> values, double p) {
  if (lambdas.empty() || lambdas.size() != values.size())
    throw DataError("legendre_transform: empty or mismatched table");
  if (!(p >= 0.0)) throw std::domain_error("legendre_transform: requires p >= 0");

  double scale = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      throw DataError("legendre_transform: knots must be strictly ascending");
    scale = std::max(scale, std::abs(values[i]));
  }
  // Certify convexity: slopes must be nondecreasing up to rounding.
  for (std::size_t i = 2; i < lambdas.size(); ++i) {
    const double s0 = (values[i - 1] - values[i - 2]) / (lambdas[i - 1] - lambdas[i - 2]);
    const double s1 = (values[i] - values[i - 1]) / (lambdas[i] - lambdas[i - 1]);
    const double slack = 1e-10 * (std::abs(s0) + std::abs(s1) + scale + 1.0);
    if (s1 < s0 - slack) throw DataError("legendre_transform: table is not convex");
  }

  LegendrePoint out;
  out.value = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double v = p * lambdas[i] - values[i];
    if (v > out.value) { out.value = v; arg = i; }
  }
  out.lambda = lambdas[arg];
  out.boundary_attained = (arg == 0 || arg + 1 == lambdas.size());
  return out;
}

} // namespace maglap
