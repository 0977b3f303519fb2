#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maglap/errors.hpp"
#include "maglap/lattice.hpp"
#include "maglap/spectra.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <random>

using namespace maglap;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Phase product around the plaquette whose lower-left site is (i,j), traversed
// counterclockwise; hop(from, to) reads the phase of the from -> to matrix element.
cplx plaquette_product(const MagneticOperator& op, int i, int j) {
  const auto& d = op.domain;
  const auto at = [&](int a, int b) { return op.site_of_cell[std::size_t(b) * d.nx + a]; };
  const int p00 = at(i, j), p10 = at(i + 1, j), p11 = at(i + 1, j + 1), p01 = at(i, j + 1);
  const auto hop = [&](int from, int to) {
    return op.matrix.coeff(from, to) / (-1.0 / (d.h * d.h));
  };
  return hop(p00, p10) * hop(p10, p11) * hop(p11, p01) * hop(p01, p00);
}

} // namespace

TEST_CASE("rasterization") {
  SUBCASE("square tiles exactly") {
    const GridDomain d = rasterize_square(1.0, 0.25);
    CHECK(d.nx == 4);
    CHECK(d.ny == 4);
    CHECK(d.interior_count() == 16);
    CHECK(d.area == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.full_rectangle());
  }
  SUBCASE("disk area within perimeter bound") {
    const GridDomain d = rasterize_disk(1.0, 0.05);
    CHECK(std::abs(d.area - kPi) / kPi < 0.02);
  }
  SUBCASE("polygon unit square matches square mask") {
    const std::array<std::array<double, 2>, 4> verts = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    const GridDomain p = rasterize_polygon(verts, 0.125);
    const GridDomain s = rasterize_square(1.0, 0.125);
    REQUIRE(p.nx == s.nx);
    REQUIRE(p.ny == s.ny);
    CHECK(p.mask == s.mask);
    CHECK(p.area == doctest::Approx(s.area));
  }
  SUBCASE("degenerate shapes refused") {
    CHECK_THROWS_AS(rasterize_square(0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(rasterize_disk(-1.0, 0.1), ConfigError);
  }
}

TEST_CASE("mask files") {
  const auto dir = std::filesystem::temp_directory_path() / "maglap_test_masks";
  std::filesystem::create_directories(dir);
  SUBCASE("round trip") {
    const GridDomain d = rasterize_disk(1.0, 0.21);
    write_mask_file(d, dir / "disk.mask");
    const GridDomain back = read_mask_file(dir / "disk.mask");
    CHECK(back.nx == d.nx);
    CHECK(back.ny == d.ny);
    CHECK(back.h == doctest::Approx(d.h).epsilon(1e-16));
    CHECK(back.mask == d.mask);
    CHECK(back.area == doctest::Approx(d.area));
  }
  SUBCASE("bad files") {
    CHECK_THROWS_AS(read_mask_file(dir / "missing.mask"), DataError);
    {
      std::ofstream out(dir / "empty.mask");
      out << "2 2 0.5 0 0\n..\n..\n";
    }
    CHECK_THROWS_AS(read_mask_file(dir / "empty.mask"), ConfigError);
    {
      std::ofstream out(dir / "short.mask");
      out << "3 2 0.5 0 0\n##\n";
    }
    CHECK_THROWS_AS(read_mask_file(dir / "short.mask"), DataError);
  }
}

TEST_CASE("zero-field assembly is the five-point laplacian") {
  const GridDomain d = rasterize_square(1.0, 0.5);
  const MagneticOperator op = assemble(d, 0.0, BoundaryCondition::dirichlet);
  REQUIRE(op.n() == 4);
  const double w = 4.0; // 1/h^2
  for (int p = 0; p < 4; ++p) {
    CHECK(op.matrix.coeff(p, p) == cplx(4.0 * w, 0.0));
    for (int q = 0; q < 4; ++q) {
      const cplx v = op.matrix.coeff(p, q);
      CHECK(v.imag() == 0.0);
      if (p != q && v != cplx(0.0, 0.0)) CHECK(v.real() == -w);
    }
  }
  // 2x2 grid: each site couples to exactly two neighbors
  for (int p = 0; p < 4; ++p) {
    int links = 0;
    for (int q = 0; q < 4; ++q)
      if (p != q && op.matrix.coeff(p, q) != cplx(0, 0)) ++links;
    CHECK(links == 2);
  }
}

TEST_CASE("assembly invariants") {
  const GridDomain d = rasterize_square(2.0, 0.25);
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    const MagneticOperator op = assemble(d, 1.3, bc);
    SUBCASE(bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann") {
      // bitwise Hermiticity by paired construction
      for (int col = 0; col < op.matrix.outerSize(); ++col)
        for (Eigen::SparseMatrix<cplx>::InnerIterator it(op.matrix, col); it; ++it) {
          const cplx other = op.matrix.coeff(col, it.row());
          CHECK(it.value().real() == other.real());
          CHECK(it.value().imag() == -other.imag());
        }
      // diagonal rule
      const double w = 1.0 / (d.h * d.h);
      for (int p = 0; p < op.n(); ++p) {
        const auto [i, j] = op.cells[std::size_t(p)];
        int degree = 0;
        for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
          if (d.interior(i + di, j + dj)) ++degree;
        const double want = bc == BoundaryCondition::dirichlet ? 4.0 * w : degree * w;
        CHECK(op.matrix.coeff(p, p) == cplx(want, 0.0));
        // hopping magnitudes: five-point row sums bounded by 4/h^2
        double hops = 0.0;
        for (int q = 0; q < op.n(); ++q)
          if (q != p) hops += std::abs(op.matrix.coeff(p, q));
        CHECK(hops <= 4.0 * w * (1.0 + 1e-14));
      }
    }
  }
}

TEST_CASE("plaquette flux") {
  SUBCASE("interior plaquettes carry exp(-i B h^2)") {
    const GridDomain d = rasterize_square(1.5, 0.25);
    for (double b : {0.7, 1.0, 2.3}) {
      const MagneticOperator op = assemble(d, b, BoundaryCondition::dirichlet);
      const cplx want = std::exp(cplx(0.0, -b * d.h * d.h));
      for (int i = 0; i + 1 < d.nx; ++i)
        for (int j = 0; j + 1 < d.ny; ++j)
          CHECK(std::abs(plaquette_product(op, i, j) - want) < 1e-14);
    }
  }
  SUBCASE("torus total flux is trivial") {
    // flux = 2 quanta on a 6x6 grid
    const int flux = 2;
    const double B = 1.0;
    const double L = std::sqrt(2.0 * kPi * flux / B);
    const GridDomain d = rasterize_square(L, L / 6.0);
    const MagneticOperator op = assemble(d, B, BoundaryCondition::magnetic_periodic);
    const auto at = [&](int a, int b2) {
      return op.site_of_cell[std::size_t((b2 % 6)) * d.nx + (a % 6)];
    };
    cplx total(1.0, 0.0);
    const auto hop = [&](int from, int to) {
      return op.matrix.coeff(from, to) / (-1.0 / (d.h * d.h));
    };
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        total *= hop(at(i, j), at(i + 1, j)) * hop(at(i + 1, j), at(i + 1, j + 1)) *
                 hop(at(i + 1, j + 1), at(i, j + 1)) * hop(at(i, j + 1), at(i, j));
    CHECK(std::abs(total - cplx(1.0, 0.0)) < 1e-10);
  }
}

TEST_CASE("flux admissibility") {
  CHECK(flux_check(1.0, FieldStrength(2.0 * kPi), 0.25).admissible);
  CHECK(flux_check(1.0, FieldStrength(2.0 * kPi), 0.25).continuum_flux ==
        doctest::Approx(1.0));
  const FluxReport r = flux_check(1.0, FieldStrength(6.0), 0.25);
  CHECK_FALSE(r.admissible);
  CHECK(r.nearest_admissible_B == doctest::Approx(2.0 * kPi));
  CHECK(flux_check(std::sqrt(2.0 * kPi), FieldStrength(1.0), std::sqrt(2.0 * kPi) / 8.0)
            .admissible);
  CHECK_THROWS_AS(flux_check(1.0, FieldStrength(1.0), 0.3), ConfigError);

  // assembling a periodic operator with inadmissible flux is refused
  const GridDomain d = rasterize_square(1.0, 0.25);
  CHECK_THROWS_AS(assemble(d, 6.0, BoundaryCondition::magnetic_periodic), ConfigError);
  // and on a non-square mask as well
  const GridDomain disk = rasterize_disk(1.0, 0.25);
  CHECK_THROWS_AS(assemble(disk, 2.0 * kPi, BoundaryCondition::magnetic_periodic),
                  ConfigError);
}

TEST_CASE("gauge covariance") {
  const GridDomain d = rasterize_square(1.75, 0.25); // 49 sites, dense-solvable
  const double b = 1.1;
  const MagneticOperator op = assemble(d, b, BoundaryCondition::dirichlet);
  const std::vector<double> sym_spec = dense_spectrum(op);

  SUBCASE("chi = 0 is the identity") {
    std::vector<double> chi(std::size_t(op.n()), 0.0);
    const MagneticOperator same = gauge_shift(op, chi);
    for (int col = 0; col < op.matrix.outerSize(); ++col)
      for (Eigen::SparseMatrix<cplx>::InnerIterator it(op.matrix, col); it; ++it)
        CHECK(std::abs(it.value() - same.matrix.coeff(it.row(), col)) == 0.0);
  }
  SUBCASE("symmetric to Landau gauge") {
    std::vector<double> chi;
    for (const auto& [i, j] : op.cells) chi.push_back(b * d.cx(i) * d.cy(j) / 2.0);
    const MagneticOperator shifted = gauge_shift(op, chi);
    const std::vector<double> spec = dense_spectrum(shifted);
    for (std::size_t k = 0; k < spec.size(); ++k)
      CHECK(std::abs(spec[k] - sym_spec[k]) <= 1e-10 * std::abs(sym_spec[k]));
    // Landau gauge kills the x-hop phases: row of sites at y and y+h couple by real hops
    // only along x after the shift when B x h matches; here just spot-check Hermiticity.
    for (int col = 0; col < shifted.matrix.outerSize(); ++col)
      for (Eigen::SparseMatrix<cplx>::InnerIterator it(shifted.matrix, col); it; ++it)
        CHECK(std::abs(it.value() - std::conj(shifted.matrix.coeff(col, it.row()))) == 0.0);
  }
  SUBCASE("random gauge functions, seed-fixed") {
    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    std::vector<double> chi;
    for (int p = 0; p < op.n(); ++p) chi.push_back(u(rng));
    const std::vector<double> spec = dense_spectrum(gauge_shift(op, chi));
    for (std::size_t k = 0; k < spec.size(); ++k)
      CHECK(std::abs(spec[k] - sym_spec[k]) <= 1e-10 * std::abs(sym_spec[k]));
  }
  SUBCASE("periodic operators are out of scope") {
    const double L = std::sqrt(2.0 * kPi * 2.0);
    const GridDomain torus = rasterize_square(L, L / 8.0);
    const MagneticOperator p = assemble(torus, 1.0, BoundaryCondition::magnetic_periodic);
    std::vector<double> chi(std::size_t(p.n()), 0.1);
    CHECK_THROWS_AS(gauge_shift(p, chi), ConfigError);
  }
}

TEST_CASE("boundary-condition form ordering") {
  // matched grids: flux-2 square, dense-solvable
  const int flux = 2;
  const double B = kPi / 2.0;
  const double L = std::sqrt(2.0 * kPi * flux / B); // = sqrt(8) -> L^2 B = 4 pi
  const GridDomain d = rasterize_square(L, L / 10.0);
  const MagneticOperator opD = assemble(d, B, BoundaryCondition::dirichlet);
  const MagneticOperator opN = assemble(d, B, BoundaryCondition::neumann);
  const MagneticOperator opP = assemble(d, B, BoundaryCondition::magnetic_periodic);

  SUBCASE("neumann form below periodic form, vector-wise") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXcd v(opD.n());
      for (int i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
      const double qn = std::real(v.dot(opN.matrix * v));
      const double qp = std::real(v.dot(opP.matrix * v));
      CHECK(qn <= qp * (1.0 + 1e-12) + 1e-12);
    }
  }
  SUBCASE("eigenvalue-wise bracket") {
    const std::vector<double> sn = dense_spectrum(opN);
    const std::vector<double> sp = dense_spectrum(opP);
    const std::vector<double> sd = dense_spectrum(opD);
    // N <= P is a form inequality on the shared grid and holds for every k. P <= D
    // mirrors the continuum bracket and holds in the resolved part of the lattice band
    // (near the band top the periodic spectrum reaches 8/h^2 while the truncated
    // Dirichlet chain stays below it, so the comparison is restricted to lambda < 1/h^2).
    const double resolved = 1.0 / (d.h * d.h);
    for (std::size_t k = 0; k < sd.size(); ++k) {
      CHECK(sn[k] <= sp[k] + 1e-9);
      if (sd[k] < resolved) CHECK(sp[k] <= sd[k] + 1e-9);
    }
  }
}

TEST_CASE("operator export format") {
  const GridDomain d = rasterize_square(1.0, 0.5);
  const MagneticOperator op = assemble(d, 0.0, BoundaryCondition::dirichlet);
  const auto path = std::filesystem::temp_directory_path() / "maglap_op.txt";
  write_operator_triplets(op, path);
  std::ifstream in(path);
  std::string line;
  int rows_seen = 0;
  long prev_key = -1;
  while (std::getline(in, line)) {
    int r, c;
    double re, im;
    REQUIRE(std::sscanf(line.c_str(), "%d %d %lf %lf", &r, &c, &re, &im) == 4);
    const long key = static_cast<long>(r) * op.n() + c;
    CHECK(key > prev_key); // sorted row-major, no duplicates
    prev_key = key;
    CHECK(im == 0.0);
    ++rows_seen;
  }
  CHECK(rows_seen == op.matrix.nonZeros());
}
