#pragma once

#include "maglap/bounds.hpp"
#include "maglap/lattice.hpp"
#include "maglap/spectra.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maglap {

inline constexpr const char* kVersion = "0.1.0";

/// Flat ASCII key=value configuration; CLI flags override file values.
struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> kv;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 12345;
  int threads = 1;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  double num(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> int_list(const std::string& key, std::vector<int> fallback) const;
};

/// Parse `key=value` lines; '#' starts a comment; blank lines ignored.
ExperimentConfig parse_config_file(const std::filesystem::path& path);

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentOutcome {
  std::vector<Assertion> assertions;
  std::vector<std::filesystem::path> artifacts;
  bool passed() const;
};

/// Landau-level verification on the flux-quantized torus.
struct ClusterReport {
  struct Cluster {
    double center = 0.0;
    double width = 0.0;
    int count = 0;
  };
  struct Predicted {
    double level = 0.0;
    int multiplicity = 0;
  };
  std::vector<Cluster> clusters;   // sorted by center
  std::vector<Predicted> predicted;
  std::vector<double> eigenvalues; // everything below the scan cutoff
  double L = 0.0, h = 0.0;
  int n_side = 0;
  bool under_resolved = false;     // B h^2 exceeded the resolution policy
  bool verified = false;           // first three clusters match level and multiplicity
  std::string detail;
};

/// Assemble the magnetic-periodic square with flux quanta `flux`, compute everything
/// below 6B, cluster by the 0.4B gap rule and compare with levels B(2k+1) of common
/// multiplicity flux (centers within 0.05 B). cells_override forces a coarse grid.
ClusterReport torus_verify(FieldStrength B, int flux, double h_policy,
                           const SpectraOptions& opts = {}, int cells_override = 0);

struct DosRow {
  int flux = 0;
  double L = 0.0, h = 0.0;
  long n_dirichlet = 0, n_periodic = 0;
  double n_over_l2 = 0.0, symbol = 0.0, ratio = 0.0;
};

/// Density-of-states ladder: Dirichlet counts per unit area against the Landau symbol.
std::vector<DosRow> dos_scan(FieldStrength B, double lambda, std::span<const int> flux_ladder,
                             double h_policy, const SpectraOptions& opts = {});

struct BcRow {
  int flux = 0;
  double lambda = 0.0;
  long n_neumann = 0, n_periodic = 0, n_dirichlet = 0;
  bool ordered = false; // N^D <= N^P <= N^N
};

struct BcBracketResult {
  std::vector<BcRow> rows;
  double defect_exponent_in_flux = 0.0; // fit of N^N - N^D ~ flux^p at the largest lambda
};

/// Boundary-condition bracketing across >= 2 flux values on matched grids.
BcBracketResult bc_bracket(FieldStrength B, std::span<const int> fluxes,
                           std::span<const double> lambda_grid, double h_policy,
                           const SpectraOptions& opts = {});

/// Execute the named experiment end to end: writes CSV/JSON artifacts plus a manifest
/// (inputs, version, seed, wall time, per-assertion outcomes) into config.out_dir.
/// Returns 0 iff every assertion passed. Invalid configs throw ConfigError.
int run(const ExperimentConfig& config);

} // namespace maglap
