#include "maglap/bounds.hpp"

#include "maglap/errors.hpp"
#include "maglap/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace maglap {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

} // namespace

std::string_view family_name(BoundFamily f) {
  switch (f) {
    case BoundFamily::polya: return "polya";
    case BoundFamily::berezin: return "berezin";
    case BoundFamily::liyau: return "liyau";
    case BoundFamily::main1: return "main1";
    case BoundFamily::main2: return "main2";
    case BoundFamily::main1number0: return "main1number0";
    case BoundFamily::elv: return "elv";
    case BoundFamily::elv2: return "elv2";
    case BoundFamily::elvevs: return "elvevs";
    case BoundFamily::d3_magnetic: return "d3_magnetic";
    case BoundFamily::d3_semiclassical: return "d3_semiclassical";
    case BoundFamily::d3_excess: return "d3_excess";
    case BoundFamily::appendix_a: return "appendixA";
  }
  return "?";
}

BoundFamily family_from_name(std::string_view name) {
  for (BoundFamily f :
       {BoundFamily::polya, BoundFamily::berezin, BoundFamily::liyau, BoundFamily::main1,
        BoundFamily::main2, BoundFamily::main1number0, BoundFamily::elv, BoundFamily::elv2,
        BoundFamily::elvevs, BoundFamily::d3_magnetic, BoundFamily::d3_semiclassical,
        BoundFamily::d3_excess, BoundFamily::appendix_a})
    if (family_name(f) == name) return f;
  throw ConfigError("unknown bound family: " + std::string(name));
}

FamilyTraits family_traits(BoundFamily f) {
  FamilyTraits t;
  switch (f) {
    case BoundFamily::polya:
      t.gamma_zero_only = true;
      t.tiling_only = true;
      break;
    case BoundFamily::berezin:
      t.gamma_min = 1.0;
      break;
    case BoundFamily::liyau:
      t.sum_bound = true;
      break;
    case BoundFamily::main1:
      t.gamma_max = 1.0;
      t.needs_field = true;
      break;
    case BoundFamily::main2:
      t.gamma_max = 1.0;
      t.tiling_only = true;
      t.needs_field = true;
      break;
    case BoundFamily::main1number0:
      t.gamma_zero_only = true;
      t.tiling_only = true;
      t.needs_field = true;
      break;
    case BoundFamily::elv:
      t.gamma_min = 1.0;
      t.needs_field = true;
      break;
    case BoundFamily::elv2:
      t.gamma_min = 1.0;
      t.needs_field = true;
      break;
    case BoundFamily::elvevs:
      t.sum_bound = true;
      t.needs_field = true;
      break;
    case BoundFamily::d3_magnetic:
      t.gamma_min = 1.0;
      t.needs_field = true;
      break;
    case BoundFamily::d3_semiclassical:
      t.gamma_min = 0.5;
      t.tiling_only = true;
      t.needs_field = true;
      break;
    case BoundFamily::d3_excess:
      t.gamma_max = 0.5;
      t.tiling_only = true;
      t.needs_field = true;
      break;
    case BoundFamily::appendix_a:
      t.gamma_max = 1.5;
      t.needs_field = true;
      break;
  }
  return t;
}

double evaluate_rhs(BoundFamily family, MomentOrder gamma, double B, double lambda,
                    double area) {
  const double g = gamma.value;
  const FamilyTraits t = family_traits(family);
  if (t.gamma_zero_only && g != 0.0)
    throw std::domain_error(std::string(family_name(family)) + ": requires gamma = 0");
  if (g < t.gamma_min || (std::isfinite(t.gamma_max) && g >= t.gamma_max))
    throw std::domain_error(std::string(family_name(family)) + ": gamma = " +
                            std::to_string(g) + " outside the declared validity range");
  if (t.needs_field && !(B > 0.0))
    throw std::domain_error(std::string(family_name(family)) + ": requires B > 0");
  if (!(area > 0.0)) throw std::domain_error("evaluate_rhs: area must be > 0");

  switch (family) {
    case BoundFamily::polya:
      return lambda * area / (4.0 * kPi);
    case BoundFamily::berezin:
    case BoundFamily::elv:
      return lcl_constant(gamma, 2) * std::pow(lambda, g + 1.0) * area;
    case BoundFamily::liyau:
    case BoundFamily::elvevs:
      return 2.0 * kPi * lambda * lambda / area; // lambda plays the role of N
    case BoundFamily::main1:
      return excess_factor(gamma) * lcl_constant(gamma, 2) * std::pow(lambda, g + 1.0) * area;
    case BoundFamily::main2:
      return magnetic_symbol_2d(FieldStrength(B), lambda, gamma).value * area;
    case BoundFamily::main1number0:
      return (lambda + B) * area / (4.0 * kPi);
    case BoundFamily::elv2:
      return magnetic_symbol_2d(FieldStrength(B), lambda, gamma).value * area;
    case BoundFamily::d3_magnetic:
      return magnetic_symbol_3d(FieldStrength(B), lambda, gamma).value * area;
    case BoundFamily::d3_semiclassical:
      return lcl_constant(gamma, 3) * std::pow(lambda, g + 1.5) * area;
    case BoundFamily::d3_excess:
      return excess_factor(MomentOrder(g + 0.5)) * lcl_constant(gamma, 3) *
             std::pow(lambda, g + 1.5) * area;
    case BoundFamily::appendix_a:
      return rho_constant(gamma, 2) * lcl_constant(gamma, 2) * std::pow(lambda, g + 1.0) *
             area;
  }
  throw std::domain_error("evaluate_rhs: unhandled family");
}

Allowance calibrate_allowance(double L, double h, std::span<const double> lambdas,
                              std::span<const double> gammas) {
  // Exact discrete spectrum of the zero-field square: the cell-centered n x n grid
  // diagonalizes into 1D chains with eigenvalues (4/h^2) sin^2(k pi / (2(n+1))).
  const int n = static_cast<int>(std::lround(L / h));
  std::vector<double> chain(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k)
    chain[static_cast<std::size_t>(k - 1)] =
        4.0 / (h * h) * std::pow(std::sin(kPi * k / (2.0 * (n + 1))), 2);
  std::vector<double> evs;
  evs.reserve(static_cast<std::size_t>(n) * n);
  for (double a : chain)
    for (double b : chain) evs.push_back(a + b);
  std::sort(evs.begin(), evs.end());

  const double area = L * L;
  double worst = 0.0;
  for (double lambda : lambdas) {
    for (double g : gammas) {
      double lhs = 0.0;
      for (double ev : evs) {
        const double x = lambda - ev;
        if (x <= 0.0) break;
        lhs += (g == 0.0) ? 1.0 : std::pow(x, g);
      }
      const double rhs = lcl_constant(MomentOrder(g), 2) * std::pow(lambda, g + 1.0) * area;
      const double excess = (lhs / rhs - 1.0) / (h * h * lambda);
      worst = std::max(worst, excess);
    }
  }
  return Allowance{std::max(worst, 1.0 / 6.0)};
}

std::vector<BoundReport> bound_report(const SpectrumSlice& slice, double area, double B,
                                      double h, bool tiling_domain,
                                      std::span<const BoundFamily> families,
                                      std::span<const double> gammas,
                                      std::span<const double> lambdas,
                                      const Allowance& allowance, std::string source) {
  if (!slice.complete) throw ContractError("bound_report: slice is not complete");
  for (double lambda : lambdas)
    if (!(lambda <= slice.cutoff))
      throw ContractError("bound_report: lambda grid exceeds the slice cutoff");

  std::vector<BoundReport> rows;
  for (BoundFamily family : families) {
    const FamilyTraits t = family_traits(family);
    const bool exploratory = t.tiling_only && !tiling_domain;

    if (t.sum_bound) {
      if (slice.eigenvalues.empty()) continue;
      const LiYauResult ly = liyau_check(slice, area);
      BoundReport r;
      r.family = family;
      r.gamma = 1.0; // Legendre-dual of the gamma = 1 bound
      r.B = B;
      r.lambda = static_cast<double>(ly.argmin_n);
      r.rhs = eigen_sum(slice, ly.argmin_n);
      r.lhs = 2.0 * kPi * ly.argmin_n * ly.argmin_n / area;
      r.ratio = r.lhs / r.rhs;
      r.area = area;
      r.h = h;
      r.exploratory = exploratory;
      const double lam_n = slice.eigenvalues[static_cast<std::size_t>(ly.argmin_n - 1)];
      r.flagged = !exploratory && r.ratio > 1.0 + 3.0 * allowance(h, lam_n);
      r.source = source;
      rows.push_back(std::move(r));
      continue;
    }

    for (double g : gammas) {
      const FamilyTraits tr = t;
      if (tr.gamma_zero_only && g != 0.0) continue;
      if (g < tr.gamma_min || (std::isfinite(tr.gamma_max) && g >= tr.gamma_max)) continue;
      for (double lambda : lambdas) {
        BoundReport r;
        r.family = family;
        r.gamma = g;
        r.B = B;
        r.lambda = lambda;
        r.lhs = riesz_mean(slice, lambda, MomentOrder(g));
        r.rhs = evaluate_rhs(family, MomentOrder(g), B, lambda, area);
        r.ratio = r.lhs / r.rhs;
        r.area = area;
        r.h = h;
        r.exploratory = exploratory;
        r.flagged = !exploratory && r.ratio > 1.0 + 3.0 * allowance(h, lambda);
        r.source = source;
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

void write_report_csv(std::span<const BoundReport> rows, const std::filesystem::path& path,
                      const Allowance& allowance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[320];
  std::snprintf(buf, sizeof buf, "# allowance alpha(h,lambda) = %.17g * (h*sqrt(lambda))^2"
                                 "; flag threshold ratio > 1 + 3*alpha\n",
                allowance.c_disc);
  out << buf;
  out << "family,gamma,B,lambda,lhs,rhs,ratio,area,h,flag\n";
  for (const auto& r : rows) {
    const char* flag = r.exploratory ? "exploratory" : (r.flagged ? "exceeds" : "");
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                  std::string(family_name(r.family)).c_str(), r.gamma, r.B, r.lambda, r.lhs,
                  r.rhs, r.ratio, r.area, r.h, flag);
    out << buf;
  }
}

LiYauResult liyau_check(const SpectrumSlice& slice, double area) {
  if (!slice.complete) throw ContractError("liyau_check: slice is not complete");
  if (slice.eigenvalues.empty()) throw ContractError("liyau_check: empty slice");
  LiYauResult out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  double partial = 0.0;
  for (std::size_t j = 0; j < slice.eigenvalues.size(); ++j) {
    partial += slice.eigenvalues[j];
    const double n = static_cast<double>(j + 1);
    const double ratio = partial * area / (2.0 * kPi * n * n);
    if (ratio < out.min_ratio) {
      out.min_ratio = ratio;
      out.argmin_n = static_cast<int>(j + 1);
    }
  }
  return out;
}

double product_3d_moment(const SpectrumSlice& slice2d, double interval_length, double lambda,
                         MomentOrder gamma) {
  if (!slice2d.complete) throw ContractError("product_3d_moment: 2D slice is not complete");
  if (!(lambda <= slice2d.cutoff))
    throw ContractError("product_3d_moment: lambda exceeds the 2D cutoff");
  if (gamma.value < 0.5)
    throw std::domain_error("product_3d_moment: requires gamma >= 1/2");
  if (!(interval_length > 0.0))
    throw std::domain_error("product_3d_moment: interval length must be > 0");

  const double g = gamma.value;
  double sum = 0.0;
  for (long n = 1;; ++n) {
    const double mode = std::pow(kPi * static_cast<double>(n) / interval_length, 2);
    if (mode >= lambda) break; // all later terms vanish for every mu_j >= 0
    double term = 0.0;
    for (double mu : slice2d.eigenvalues) {
      const double x = lambda - mu - mode;
      if (x > 0.0) term += std::pow(x, g);
    }
    sum += term;
  }
  return sum;
}

CounterexampleResult counterexample_search(MomentOrder gamma, FieldStrength B, double epsilon,
                                           const CounterexampleBudget& budget,
                                           const SpectraOptions& opts) {
  const double g = gamma.value;
  if (g >= 1.0) throw std::domain_error("counterexample_search: requires 0 <= gamma < 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("counterexample_search: requires epsilon in (0,1)");

  const double b = B.value;
  CounterexampleResult best;
  best.gamma = g;
  best.B = b;
  best.epsilon = epsilon;
  best.target = (1.0 - epsilon) * excess_factor(gamma);
  best.achieved_ratio = -1.0; // first evaluated rung always populates the report

  const std::vector<double> deltas =
      (g == 0.0) ? std::vector<double>{0.2, 0.1, 0.05} : std::vector<double>{};

  for (int flux : budget.flux_ladder) {
    const double L = std::sqrt(2.0 * kPi * flux / b);
    const double h_max = std::sqrt(budget.flux_res / b);
    const int n_side = std::max(4, static_cast<int>(std::ceil(L / h_max)));
    if (static_cast<long>(n_side) * n_side > budget.max_unknowns) break;
    const double h = L / n_side;
    const GridDomain square = rasterize_square(L, h);
    const MagneticOperator op = assemble(square, b, BoundaryCondition::dirichlet);

    const auto evaluate = [&](double lambda) -> double {
      double lhs;
      if (g == 0.0) {
        lhs = static_cast<double>(count_below(op, lambda, opts).count);
      } else {
        const SpectrumSlice slice = eigs_below(op, lambda, opts);
        if (!slice.complete) return -1.0;
        lhs = riesz_mean(slice, std::min(lambda, slice.cutoff), gamma);
      }
      return lhs / (lcl_constant(gamma, 2) * std::pow(lambda, g + 1.0) * L * L);
    };

    double rung_best = -1.0, rung_lambda = 0.0;
    if (g == 0.0) {
      for (double delta : deltas) {
        const double lambda = b * (1.0 + delta);
        const double ratio = evaluate(lambda);
        if (ratio > rung_best) { rung_best = ratio; rung_lambda = lambda; }
      }
    } else {
      rung_lambda = b * (g + 1.0);
      rung_best = evaluate(rung_lambda);
    }

    if (rung_best > best.achieved_ratio) {
      best.achieved_ratio = rung_best;
      best.lambda = rung_lambda;
      best.L = L;
      best.grid_h = h;
      best.flux = flux;
    }
    if (best.achieved_ratio >= best.target) {
      best.certified = true;
      return best;
    }
  }
  best.achieved_ratio = std::max(best.achieved_ratio, 0.0);
  return best;
}

} // namespace maglap
