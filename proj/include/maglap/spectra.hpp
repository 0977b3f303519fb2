#pragma once

#include "maglap/lattice.hpp"
#include "maglap/symbols.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace maglap {

struct CountCertificate {
  enum class Method { inertia, dense };
  double lambda = 0.0;       // shift actually used (may differ from the request by tiny retries)
  long count = 0;            // #eigenvalues strictly below lambda
  Method method = Method::inertia;
  double pivot_margin = 0.0; // smallest |pivot| of the certifying factorization
};

/// Certified eigenvalues below a cutoff. complete == true means the slice length
/// equals the inertia count at the cutoff.
struct SpectrumSlice {
  double cutoff = 0.0;
  std::vector<double> eigenvalues;     // ascending, all < cutoff
  std::vector<double> residual_norms;  // ||H x - lambda x||_2 per pair
  bool complete = false;
  std::uint64_t seed = 0;
  double pivot_margin = 0.0;           // min margin over all certifying factorizations
};

struct SpectraOptions {
  int dense_threshold = 1500;   // dense Hermitian solve at or below this size
  double residual_tol = 1e-8;   // certification bound, relative to the operator scale
  int max_block = 16;           // block size cap for the Krylov scheme
  int slice_max = 40;           // target eigenvalues per spectrum slice
  int max_retries = 8;          // shift retries on small pivots
  std::uint64_t seed = 12345;   // starting-block seed, recorded in outputs
};

/// Number of eigenvalues strictly below lambda via LDL^* inertia (Sylvester's law).
/// If the smallest pivot falls under tau_pivot = 1e-10 * (4/h^2) the count retries at
/// lambda + delta with delta = 10 * tau_pivot and reports the shifted lambda.
CountCertificate count_below(const MagneticOperator& op, double lambda,
                             const SpectraOptions& opts = {});

/// All eigenvalues below the cutoff. Matrices up to dense_threshold unknowns use a dense
/// Hermitian solver; larger ones a spectrum-sliced shift-invert block Krylov scheme with
/// full reorthogonalization. Completeness is always certified against inertia counts.
SpectrumSlice eigs_below(const MagneticOperator& op, double cutoff,
                         const SpectraOptions& opts = {});

/// sum_{lambda_j < lambda} (lambda - lambda_j)^gamma; gamma = 0 gives the strict count.
/// Requires a complete slice and lambda <= cutoff.
double riesz_mean(const SpectrumSlice& slice, double lambda, MomentOrder gamma);

/// sum of the lowest N eigenvalues. Requires a complete slice and N <= slice length.
double eigen_sum(const SpectrumSlice& slice, int N);

/// Full spectrum by dense Hermitian diagonalization (the independent oracle).
std::vector<double> dense_spectrum(const MagneticOperator& op);

/// CSV "index,eigenvalue,residual" plus a JSON sidecar
/// {cutoff, count, complete, seed, pivot_margin}.
void write_spectrum_csv(const SpectrumSlice& slice, const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path);

} // namespace maglap
