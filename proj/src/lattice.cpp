#include "maglap/lattice.hpp"

#include "maglap/errors.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

namespace maglap {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
using cplx = std::complex<double>;

void require_positive_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("spacing h must be > 0");
}

GridDomain finalize(GridDomain d) {
  long count = d.interior_count();
  if (count == 0) throw ConfigError("degenerate domain: rasterization produced an empty mask");
  d.area = d.h * d.h * static_cast<double>(count);
  return d;
}

} // namespace

long GridDomain::interior_count() const {
  long c = 0;
  for (auto m : mask) c += m ? 1 : 0;
  return c;
}

bool GridDomain::full_rectangle() const {
  return interior_count() == static_cast<long>(nx) * ny;
}

GridDomain rasterize_square(double L, double h) {
  require_positive_h(h);
  if (!(L > 0.0)) throw ConfigError("square side must be > 0");
  GridDomain d;
  d.h = h;
  d.nx = d.ny = static_cast<int>(std::lround(L / h));
  if (d.nx < 1) throw ConfigError("degenerate domain: square side below one cell");
  d.x0 = d.y0 = -L / 2.0;
  d.mask.assign(static_cast<std::size_t>(d.nx) * d.ny, 0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      const bool in = std::abs(d.cx(i)) < L / 2.0 && std::abs(d.cy(j)) < L / 2.0;
      d.mask[static_cast<std::size_t>(j) * d.nx + i] = in ? 1 : 0;
    }
  return finalize(d);
}

GridDomain rasterize_disk(double r, double h) {
  require_positive_h(h);
  if (!(r > 0.0)) throw ConfigError("disk radius must be > 0");
  GridDomain d;
  d.h = h;
  d.nx = d.ny = 2 * static_cast<int>(std::ceil(r / h));
  d.x0 = d.y0 = -0.5 * d.nx * h;
  d.mask.assign(static_cast<std::size_t>(d.nx) * d.ny, 0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      const double x = d.cx(i), y = d.cy(j);
      d.mask[static_cast<std::size_t>(j) * d.nx + i] = (x * x + y * y < r * r) ? 1 : 0;
    }
  return finalize(d);
}

namespace {

// Even-odd crossing test; boundary points land on either side deterministically.
bool point_in_polygon(double x, double y, std::span<const std::array<double, 2>> v) {
  bool inside = false;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = v[i][0], yi = v[i][1];
    const double xj = v[j][0], yj = v[j][1];
    if ((yi > y) != (yj > y)) {
      const double x_cross = xj + (y - yj) / (yi - yj) * (xi - xj);
      if (x < x_cross) inside = !inside;
    }
  }
  return inside;
}

} // namespace

GridDomain rasterize_polygon(std::span<const std::array<double, 2>> vertices, double h) {
  require_positive_h(h);
  if (vertices.size() < 3) throw ConfigError("polygon needs at least 3 vertices");
  double xmin = vertices[0][0], xmax = xmin, ymin = vertices[0][1], ymax = ymin;
  for (const auto& v : vertices) {
    xmin = std::min(xmin, v[0]); xmax = std::max(xmax, v[0]);
    ymin = std::min(ymin, v[1]); ymax = std::max(ymax, v[1]);
  }
  if (!(xmax > xmin) || !(ymax > ymin)) throw ConfigError("degenerate polygon");

  GridDomain d;
  d.h = h;
  d.x0 = xmin;
  d.y0 = ymin;
  d.nx = static_cast<int>(std::ceil((xmax - xmin) / h - 1e-12));
  d.ny = static_cast<int>(std::ceil((ymax - ymin) / h - 1e-12));
  d.mask.assign(static_cast<std::size_t>(d.nx) * d.ny, 0);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      d.mask[static_cast<std::size_t>(j) * d.nx + i] =
          point_in_polygon(d.cx(i), d.cy(j), vertices) ? 1 : 0;
  return finalize(d);
}

GridDomain read_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mask file: " + path.string());
  GridDomain d;
  std::string header;
  if (!std::getline(in, header)) throw DataError("mask file: missing header");
  std::istringstream hs(header);
  if (!(hs >> d.nx >> d.ny >> d.h >> d.x0 >> d.y0) || d.nx <= 0 || d.ny <= 0 || !(d.h > 0.0))
    throw DataError("mask file: bad header, expected 'nx ny h x0 y0'");
  d.mask.assign(static_cast<std::size_t>(d.nx) * d.ny, 0);
  for (int j = 0; j < d.ny; ++j) {
    std::string line;
    if (!std::getline(in, line) || static_cast<int>(line.size()) < d.nx)
      throw DataError("mask file: short row " + std::to_string(j));
    for (int i = 0; i < d.nx; ++i) {
      const char c = line[static_cast<std::size_t>(i)];
      if (c != '#' && c != '.') throw DataError("mask file: bad character in row");
      d.mask[static_cast<std::size_t>(j) * d.nx + i] = (c == '#') ? 1 : 0;
    }
  }
  return finalize(d);
}

void write_mask_file(const GridDomain& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mask file: " + path.string());
  char header[128];
  std::snprintf(header, sizeof header, "%d %d %.17g %.17g %.17g\n", d.nx, d.ny, d.h, d.x0, d.y0);
  out << header;
  for (int j = 0; j < d.ny; ++j) {
    std::string line(static_cast<std::size_t>(d.nx), '.');
    for (int i = 0; i < d.nx; ++i)
      if (d.mask[static_cast<std::size_t>(j) * d.nx + i]) line[static_cast<std::size_t>(i)] = '#';
    out << line << '\n';
  }
}

FluxReport flux_check(double L, FieldStrength B, double h) {
  require_positive_h(h);
  if (!(L > 0.0)) throw ConfigError("flux_check: L must be > 0");
  const double cells = L / h;
  if (std::abs(cells - std::lround(cells)) > 1e-9 * cells)
    throw ConfigError("flux_check: L/h must be an integer");
  FluxReport r;
  r.continuum_flux = L * L * B.value / (2.0 * kPi);
  r.admissible = std::abs(r.continuum_flux - std::lround(r.continuum_flux)) <= 1e-9;
  r.nearest_admissible_B =
      2.0 * kPi * static_cast<double>(std::lround(r.continuum_flux)) / (L * L);
  return r;
}

MagneticOperator assemble(const GridDomain& domain, double b, BoundaryCondition bc) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("assemble: B must be >= 0");
  MagneticOperator op;
  op.B = b;
  op.bc = bc;
  op.domain = domain;

  const int nx = domain.nx, ny = domain.ny;
  const double h = domain.h;
  const double w = 1.0 / (h * h);

  op.site_of_cell.assign(static_cast<std::size_t>(nx) * ny, -1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (domain.interior(i, j)) {
        op.site_of_cell[static_cast<std::size_t>(j) * nx + i] =
            static_cast<int>(op.cells.size());
        op.cells.emplace_back(i, j);
      }
  const int n = static_cast<int>(op.cells.size());

  double L = 0.0;
  if (bc == BoundaryCondition::magnetic_periodic) {
    if (nx != ny || !domain.full_rectangle())
      throw ConfigError("magnetic-periodic boundary conditions need a full square grid");
    L = nx * h;
    if (b > 0.0) {
      const FluxReport fr = flux_check(L, FieldStrength(b), h);
      if (!fr.admissible)
        throw ConfigError("magnetic-periodic flux violation: (2pi)^{-1} L^2 B = " +
                          std::to_string(fr.continuum_flux) + " is not an integer; nearest B = " +
                          std::to_string(fr.nearest_admissible_B));
    }
  }

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);

  const auto push_pair = [&](int p, int q, double angle) {
    const cplx amp = -w * std::exp(cplx(0.0, angle));
    trip.emplace_back(p, q, amp);
    trip.emplace_back(q, p, std::conj(amp));
  };

  for (int q_idx = 0; q_idx < n; ++q_idx) {
    const auto [i, j] = op.cells[static_cast<std::size_t>(q_idx)];
    const double x = domain.cx(i), y = domain.cy(j);
    int degree = 0;
    for (const auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
      if (domain.interior(i + di, j + dj)) ++degree;

    // Undirected edges handled once via the east and north hops of each site.
    if (domain.interior(i + 1, j))
      push_pair(q_idx, op.site_of_cell[static_cast<std::size_t>(j) * nx + i + 1],
                0.5 * b * h * y);
    if (domain.interior(i, j + 1))
      push_pair(q_idx, op.site_of_cell[static_cast<std::size_t>(j + 1) * nx + i],
                -0.5 * b * h * x);

    double diag = 4.0 * w;
    if (bc == BoundaryCondition::neumann) diag = degree * w;
    if (bc == BoundaryCondition::magnetic_periodic) {
      if (i == nx - 1) // x-wrap to column 0 carries the magnetic translation phase
        push_pair(q_idx, op.site_of_cell[static_cast<std::size_t>(j) * nx],
                  0.5 * b * y * (h + L));
      if (j == ny - 1) // y-wrap to row 0
        push_pair(q_idx, op.site_of_cell[static_cast<std::size_t>(i)],
                  -0.5 * b * x * (h + L));
    }
    trip.emplace_back(q_idx, q_idx, cplx(diag, 0.0));
  }

  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  return op;
}

MagneticOperator gauge_shift(const MagneticOperator& op, std::span<const double> chi) {
  if (op.bc == BoundaryCondition::magnetic_periodic)
    throw ConfigError("gauge_shift: unsupported for magnetic-periodic operators");
  if (static_cast<int>(chi.size()) != op.n())
    throw ConfigError("gauge_shift: chi must be defined on every interior site");

  MagneticOperator out = op;
  for (int col = 0; col < out.matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(out.matrix, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      it.valueRef() *= std::exp(cplx(0.0, chi[static_cast<std::size_t>(r)] -
                                          chi[static_cast<std::size_t>(col)]));
    }
  return out;
}

void write_operator_triplets(const MagneticOperator& op, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write operator file: " + path.string());
  struct Entry { int r, c; cplx v; };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(op.matrix.nonZeros()));
  for (int col = 0; col < op.matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(op.matrix, col); it; ++it)
      entries.push_back({static_cast<int>(it.row()), col, it.value()});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.r != b.r ? a.r < b.r : a.c < b.c; });
  char line[128];
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "%d %d %.17g %.17g\n", e.r, e.c, e.v.real(), e.v.imag());
    out << line;
  }
}

} // namespace maglap
