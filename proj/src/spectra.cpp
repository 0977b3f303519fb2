#include "maglap/spectra.hpp"
#include <memory>

#include "maglap/errors.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <fstream>
#include <limits>
#include <random>

namespace maglap {

namespace {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using DMat = Eigen::MatrixXcd;
using DVec = Eigen::VectorXcd;

double tau_pivot(const MagneticOperator& op) { return 1e-10 * op.scale(); }

struct Factorization {
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat, Eigen::Lower>> ldlt;
  double lambda = 0.0; // shift actually factored
  long negatives = 0;
  double pivot_margin = 0.0;
};

// Factor (H - lambda I), retrying at lambda + k*delta while pivots are unhealthy.
Factorization factor_shifted(const MagneticOperator& op, double lambda,
                             const SpectraOptions& opts) {
  const double tau = tau_pivot(op);
  const double delta = 10.0 * tau;
  SpMat identity(op.n(), op.n());
  identity.setIdentity();

  Factorization f;
  f.ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMat, Eigen::Lower>>();
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    f.lambda = lambda + attempt * delta;
    SpMat shifted = op.matrix - f.lambda * identity;
    f.ldlt->compute(shifted);
    if (f.ldlt->info() != Eigen::Success) continue;
    const auto d = f.ldlt->vectorD();
    f.negatives = 0;
    f.pivot_margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double piv = std::real(d(i));
      if (piv < 0.0) ++f.negatives;
      f.pivot_margin = std::min(f.pivot_margin, std::abs(piv));
    }
    if (f.pivot_margin >= tau) return f;
  }
  throw NumericalError("factorization pivots stayed below tau_pivot after " +
                       std::to_string(opts.max_retries) + " retries near lambda = " +
                       std::to_string(lambda));
}

double pair_tolerance(double lambda, double scale) {
  return std::max(1e-12 * scale, 1e-10 * std::abs(lambda));
}

struct SlicePairs {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  bool converged = false;
};

// Shift-invert block Lanczos with full reorthogonalization on the window [lo, hi):
// the window's m eigenvalues map to the extremal eigenvalues of (H - sigma I)^{-1},
// so a modest Krylov basis resolves them; residuals are certified on H itself.
SlicePairs extract_window(const MagneticOperator& op, double lo, double hi, long m,
                          const SpectraOptions& opts, std::uint64_t seed,
                          double& min_margin) {
  SlicePairs out;
  const int n = op.n();
  const double scale = op.scale();

  Factorization f = factor_shifted(op, 0.5 * (lo + hi), opts);
  min_margin = std::min(min_margin, f.pivot_margin);

  const int bs = static_cast<int>(std::clamp<long>(m, 2, opts.max_block));
  const int max_cols =
      static_cast<int>(std::min<long>(n, std::max<long>(4 * m + 40, 8L * bs)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;

  DMat basis(n, max_cols + bs);  // V, orthonormal columns
  DMat images(n, max_cols + bs); // (H - sigma I)^{-1} V, column-aligned with V
  DMat projected = DMat::Zero(max_cols + bs, max_cols + bs);
  int v_cols = 0, w_cols = 0;

  const auto orthonormalize_block = [&](DMat& z) {
    for (int pass = 0; pass < 2; ++pass) {
      if (v_cols > 0)
        z -= basis.leftCols(v_cols) * (basis.leftCols(v_cols).adjoint() * z);
      for (int c = 0; c < z.cols(); ++c) {
        for (int prev = 0; prev < c; ++prev)
          z.col(c) -= z.col(prev).dot(z.col(c)) * z.col(prev);
        double nrm = z.col(c).norm();
        if (nrm < 1e-10) { // collapsed direction: restart it from fresh randomness
          for (int r = 0; r < n; ++r) z(r, c) = cplx(gauss(rng), gauss(rng));
          if (v_cols > 0)
            z.col(c) -=
                basis.leftCols(v_cols) * (basis.leftCols(v_cols).adjoint() * z.col(c));
          for (int prev = 0; prev < c; ++prev)
            z.col(c) -= z.col(prev).dot(z.col(c)) * z.col(prev);
          nrm = z.col(c).norm();
        }
        z.col(c) /= nrm;
      }
    }
  };

  DMat block(n, bs);
  for (int c = 0; c < bs; ++c)
    for (int r = 0; r < n; ++r) block(r, c) = cplx(gauss(rng), gauss(rng));
  orthonormalize_block(block);
  basis.leftCols(bs) = block;
  v_cols = bs;

  while (true) {
    // Apply the inverse to the newest block and extend the projected matrix.
    const int start = w_cols, fresh = v_cols - w_cols;
    images.middleCols(start, fresh) = f.ldlt->solve(basis.middleCols(start, fresh));
    w_cols = v_cols;
    projected.block(0, start, w_cols, fresh) =
        basis.leftCols(w_cols).adjoint() * images.middleCols(start, fresh);
    projected.block(start, 0, fresh, w_cols - fresh) =
        projected.block(0, start, w_cols - fresh, fresh).adjoint();

    DMat small = 0.5 * (projected.topLeftCorner(w_cols, w_cols) +
                        projected.topLeftCorner(w_cols, w_cols).adjoint());
    Eigen::SelfAdjointEigenSolver<DMat> ritz(small);
    if (ritz.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz solve failed");

    std::vector<std::pair<double, int>> window; // (lambda, ritz index)
    for (int i = 0; i < w_cols; ++i) {
      const double theta = ritz.eigenvalues()(i);
      if (theta == 0.0) continue;
      const double lambda = f.lambda + 1.0 / theta;
      if (lambda >= lo && lambda < hi) window.emplace_back(lambda, i);
    }
    std::sort(window.begin(), window.end());

    const bool last_round = v_cols + bs > max_cols;
    if (static_cast<long>(window.size()) == m || last_round) {
      std::vector<double> evs, res;
      bool all_ok = static_cast<long>(window.size()) == m;
      for (const auto& [lambda, idx] : window) {
        DVec x = basis.leftCols(w_cols) * ritz.eigenvectors().col(idx);
        x /= x.norm();
        const double r = (op.matrix * x - lambda * x).norm();
        if (r > pair_tolerance(lambda, scale)) {
          all_ok = false;
          continue;
        }
        evs.push_back(lambda);
        res.push_back(r);
      }
      if (all_ok && static_cast<long>(evs.size()) == m) {
        out.eigenvalues = std::move(evs);
        out.residuals = std::move(res);
        out.converged = true;
        return out;
      }
      if (last_round) {
        out.eigenvalues = std::move(evs); // best converged subset; caller decides
        out.residuals = std::move(res);
        return out;
      }
    }

    DMat next = images.middleCols(start, fresh);
    if (next.cols() < bs) {
      const int old = static_cast<int>(next.cols());
      next.conservativeResize(Eigen::NoChange, bs);
      for (int c = old; c < bs; ++c)
        for (int r = 0; r < n; ++r) next(r, c) = cplx(gauss(rng), gauss(rng));
    }
    orthonormalize_block(next);
    basis.middleCols(v_cols, bs) = next;
    v_cols += bs;
  }
}

void dense_pairs_below(const MagneticOperator& op, double cutoff, SpectrumSlice& slice) {
  DMat dense = DMat(op.matrix);
  Eigen::SelfAdjointEigenSolver<DMat> solver(dense);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double lambda = solver.eigenvalues()(i);
    margin = std::min(margin, std::abs(lambda - cutoff));
    if (lambda < cutoff) {
      const DVec x = solver.eigenvectors().col(i);
      slice.eigenvalues.push_back(lambda);
      slice.residual_norms.push_back((op.matrix * x - lambda * x).norm());
    }
  }
  slice.complete = true;
  slice.pivot_margin = margin;
}

} // namespace

CountCertificate count_below(const MagneticOperator& op, double lambda,
                             const SpectraOptions& opts) {
  if (!std::isfinite(lambda)) throw ContractError("count_below: lambda must be finite");
  Factorization f = factor_shifted(op, lambda, opts);
  return CountCertificate{f.lambda, f.negatives, CountCertificate::Method::inertia,
                          f.pivot_margin};
}

std::vector<double> dense_spectrum(const MagneticOperator& op) {
  DMat dense = DMat(op.matrix);
  Eigen::SelfAdjointEigenSolver<DMat> solver(dense, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  return {solver.eigenvalues().data(),
          solver.eigenvalues().data() + solver.eigenvalues().size()};
}

SpectrumSlice eigs_below(const MagneticOperator& op, double cutoff,
                         const SpectraOptions& opts) {
  if (!std::isfinite(cutoff)) throw ContractError("eigs_below: cutoff must be finite");
  SpectrumSlice slice;
  slice.seed = opts.seed;
  slice.cutoff = cutoff;

  if (op.n() <= opts.dense_threshold) {
    dense_pairs_below(op, cutoff, slice);
    return slice;
  }

  double min_margin = std::numeric_limits<double>::infinity();
  const CountCertificate top = count_below(op, cutoff, opts);
  slice.cutoff = top.lambda; // the boundary actually certified
  min_margin = std::min(min_margin, top.pivot_margin);
  if (top.count == 0) {
    slice.complete = true;
    slice.pivot_margin = min_margin;
    return slice;
  }

  // The assembled operators are positive semidefinite; a slightly negative floor
  // certifies the bottom of the first window without touching the spectrum.
  const CountCertificate bottom = count_below(op, -1e-6 * op.scale(), opts);
  min_margin = std::min(min_margin, bottom.pivot_margin);

  struct Window {
    double lo, hi;
    long count_lo, count_hi;
    int depth;
  };
  std::deque<Window> work;
  work.push_back({bottom.lambda, slice.cutoff, bottom.count, top.count, 0});

  std::vector<std::pair<double, double>> pairs; // (eigenvalue, residual)
  bool all_converged = true;
  std::uint64_t window_counter = 0;

  const auto try_split = [&](const Window& w) -> bool {
    const CountCertificate mid = count_below(op, 0.5 * (w.lo + w.hi), opts);
    min_margin = std::min(min_margin, mid.pivot_margin);
    if (!(mid.lambda > w.lo && mid.lambda < w.hi)) return false;
    work.push_back({w.lo, mid.lambda, w.count_lo, mid.count, w.depth + 1});
    work.push_back({mid.lambda, w.hi, mid.count, w.count_hi, w.depth + 1});
    return true;
  };

  while (!work.empty()) {
    const Window w = work.front();
    work.pop_front();
    const long m = w.count_hi - w.count_lo;
    if (m == 0) continue;

    const bool splittable =
        w.depth < 48 && (w.hi - w.lo) > 1e3 * tau_pivot(op);
    if (m > opts.slice_max && splittable && try_split(w)) continue;

    const std::uint64_t wseed = opts.seed + 0x9E3779B97F4A7C15ull * (++window_counter);
    SlicePairs sp = extract_window(op, w.lo, w.hi, m, opts, wseed, min_margin);
    if (!sp.converged) {
      if (m > 1 && splittable && try_split(w)) continue;
      all_converged = false; // keep the converged subset, honestly incomplete
    }
    for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i)
      pairs.emplace_back(sp.eigenvalues[i], sp.residuals[i]);
  }

  std::sort(pairs.begin(), pairs.end());
  for (const auto& [ev, res] : pairs) {
    slice.eigenvalues.push_back(ev);
    slice.residual_norms.push_back(res);
  }
  slice.complete = all_converged && static_cast<long>(pairs.size()) == top.count;
  slice.pivot_margin = min_margin;
  return slice;
}

double riesz_mean(const SpectrumSlice& slice, double lambda, MomentOrder gamma) {
  if (!slice.complete) throw ContractError("riesz_mean: slice is not complete");
  if (!(lambda <= slice.cutoff)) throw ContractError("riesz_mean: lambda exceeds the cutoff");
  const double g = gamma.value;
  double sum = 0.0;
  for (double ev : slice.eigenvalues) {
    const double x = lambda - ev;
    if (x > 0.0) sum += (g == 0.0) ? 1.0 : std::pow(x, g);
  }
  return sum;
}

double eigen_sum(const SpectrumSlice& slice, int N) {
  if (!slice.complete) throw ContractError("eigen_sum: slice is not complete");
  if (N < 1 || N > static_cast<int>(slice.eigenvalues.size()))
    throw ContractError("eigen_sum: N out of range");
  double sum = 0.0;
  for (int j = 0; j < N; ++j) sum += slice.eigenvalues[static_cast<std::size_t>(j)];
  return sum;
}

void write_spectrum_csv(const SpectrumSlice& slice, const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  csv << "index,eigenvalue,residual\n";
  char line[128];
  for (std::size_t i = 0; i < slice.eigenvalues.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", i, slice.eigenvalues[i],
                  slice.residual_norms[i]);
    csv << line;
  }
  nlohmann::json sidecar{{"cutoff", slice.cutoff},
                         {"count", slice.eigenvalues.size()},
                         {"complete", slice.complete},
                         {"seed", slice.seed},
                         {"pivot_margin", slice.pivot_margin}};
  std::ofstream js(json_path);
  if (!js) throw DataError("cannot write " + json_path.string());
  js << sidecar.dump(2) << '\n';
}

} // namespace maglap
