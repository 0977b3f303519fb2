#pragma once

#include "maglap/symbols.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace maglap {

/// Rasterized planar domain: cell (i,j) has center (x0+(i+1/2)h, y0+(j+1/2)h)
/// and is interior iff mask[j*nx+i]. The measure carried is area = h^2 * #interior.
struct GridDomain {
  double x0 = 0.0, y0 = 0.0;
  double h = 1.0;
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> mask; // row-major j*nx+i, 1 = interior
  double area = 0.0;

  bool interior(int i, int j) const {
    return i >= 0 && i < nx && j >= 0 && j < ny && mask[static_cast<std::size_t>(j) * nx + i];
  }
  double cx(int i) const { return x0 + (i + 0.5) * h; }
  double cy(int j) const { return y0 + (j + 0.5) * h; }
  long interior_count() const;
  bool full_rectangle() const;
};

/// Cell-center membership rasterization of (-L/2, L/2)^2; exact tiling when L/h is integer.
GridDomain rasterize_square(double L, double h);
/// Disk of radius r centered at the origin.
GridDomain rasterize_disk(double r, double h);
/// Simple polygon, vertices in order (either orientation); points on edges count as exterior.
GridDomain rasterize_polygon(std::span<const std::array<double, 2>> vertices, double h);

/// Mask-file format: line 1 = "nx ny h x0 y0"; then ny lines of nx characters,
/// '#' = interior, '.' = exterior; line k holds row j = k.
GridDomain read_mask_file(const std::filesystem::path& path);
void write_mask_file(const GridDomain& domain, const std::filesystem::path& path);

enum class BoundaryCondition { dirichlet, neumann, magnetic_periodic };

struct FluxReport {
  double continuum_flux = 0.0;        // (2 pi)^{-1} L^2 B
  bool admissible = false;
  double nearest_admissible_B = 0.0;  // 2 pi round(flux) / L^2
};

/// Periodic boundary conditions require integer flux (2 pi)^{-1} L^2 B; L/h must be integer.
FluxReport flux_check(double L, FieldStrength B, double h);

/// Sparse Hermitian five-point discretization of (D - BA)^2 in the symmetric gauge
/// A(x) = (-x2, x1)/2. Entries are stored in exact conjugate pairs.
struct MagneticOperator {
  Eigen::SparseMatrix<std::complex<double>> matrix;
  double B = 0.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  GridDomain domain;
  std::vector<int> site_of_cell;           // nx*ny -> interior index or -1
  std::vector<std::pair<int, int>> cells;  // interior index -> (i,j)

  int n() const { return static_cast<int>(matrix.rows()); }
  double scale() const { return 4.0 / (domain.h * domain.h); } // diagonal stencil weight
};

/// Assemble the operator. Hopping p -> p + h e_j carries -h^{-2} exp(i theta) with
/// theta = -B int_edge A . dl (exact for the linear gauge field): +B h y/2 for x-hops,
/// -B h x/2 for y-hops. Dirichlet drops exterior neighbors and keeps the 4/h^2 diagonal;
/// Neumann reduces the diagonal to (#interior neighbors)/h^2; magnetic-periodic wraps with
/// the extra magnetic-translation phases e^{+iBL y/2} (x-wrap) and e^{-iBL x/2} (y-wrap).
/// b = 0 assembles the zero-field (real) operator.
MagneticOperator assemble(const GridDomain& domain, double b, BoundaryCondition bc);

/// Conjugate by the diagonal unitary e^{i chi} (chi given per interior site).
/// The spectrum is unchanged. Not available for magnetic-periodic operators.
MagneticOperator gauge_shift(const MagneticOperator& op, std::span<const double> chi);

/// Coordinate-triplet export: "row col re im" per line, 0-based, sorted row-major.
void write_operator_triplets(const MagneticOperator& op, const std::filesystem::path& path);

} // namespace maglap
