#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pinncert/quad.hpp"

using namespace pinncert;

namespace {

// Polynomial with per-axis degree <= 3, coefficients indexed [i][j].
struct Poly2 {
  int dim = 1;
  double c[4][4] = {};

  double eval(const double* x) const {
    double s = 0;
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= 3; ++j) {
        if (c[i][j] == 0) continue;
        s += c[i][j] * std::pow(x[0], i) * (dim > 1 ? std::pow(x[1], j) : (j == 0 ? 1.0 : 0.0));
      }
    return s;
  }

  // Exact integral over the box from monomial antiderivatives.
  double integral(const Box& b) const {
    double s = 0;
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= 3; ++j) {
        if (c[i][j] == 0) continue;
        if (dim == 1 && j > 0) continue;
        double ix = (std::pow(b.hi[0], i + 1) - std::pow(b.lo[0], i + 1)) / (i + 1);
        double iy = dim > 1 ? (std::pow(b.hi[1], j + 1) - std::pow(b.lo[1], j + 1)) / (j + 1)
                            : 1.0;
        s += c[i][j] * ix * iy;
      }
    return s;
  }

  // Upper bound on sup |d^2/dx_axis^2| over the box via monomial magnitudes.
  double c2_axis_bound(const Box& b, int axis) const {
    double s = 0;
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= 3; ++j) {
        if (c[i][j] == 0) continue;
        if (dim == 1 && j > 0) continue;
        int ei = i, ej = j;
        double factor = 1;
        int& e = axis == 0 ? ei : ej;
        if (e < 2) continue;
        factor = e * (e - 1);
        e -= 2;
        double mx = std::max(std::fabs(b.lo[0]), std::fabs(b.hi[0]));
        double my = dim > 1 ? std::max(std::fabs(b.lo[1]), std::fabs(b.hi[1])) : 1.0;
        s += std::fabs(c[i][j]) * factor * std::pow(mx, ei) * std::pow(my, ej);
      }
    return s;
  }
};

std::uint64_t rng_state = 0x9e3779b97f4a7c15ull;
double urand() {
  rng_state ^= rng_state << 13;
  rng_state ^= rng_state >> 7;
  rng_state ^= rng_state << 17;
  return double(rng_state >> 11) / double(1ull << 53);
}

}  // namespace

TEST_CASE("midpoint grids sample cell centers") {
  Grid g = midpoint_grid({1, {0, 0, 0}, {1, 1, 1}}, {2, 1, 1});
  REQUIRE(g.total() == 2);
  double p[3];
  g.point(0, p);
  CHECK(p[0] == doctest::Approx(0.25));
  g.point(1, p);
  CHECK(p[0] == doctest::Approx(0.75));

  Box sq{2, {-1, -1, 0}, {1, 1, 0}};
  Grid g2 = midpoint_grid(sq, {2, 2, 1});
  REQUIRE(g2.total() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    g2.point(k, p);
    CHECK(std::fabs(p[0]) == doctest::Approx(0.5));
    CHECK(std::fabs(p[1]) == doctest::Approx(0.5));
  }

  Grid g3 = midpoint_grid({2, {1, 0, 0}, {2, 1, 0}}, {4, 4, 1});
  CHECK(g3.cell_volume() == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("closed grids include both faces") {
  ClosedGrid g{{1, {2, 0, 0}, {5, 0, 0}}, {4, 1, 1}};
  double p[3];
  g.point(0, p);
  CHECK(p[0] == doctest::Approx(2.0));
  g.point(3, p);
  CHECK(p[0] == doctest::Approx(5.0));
}

TEST_CASE("midpoint norm accumulates p-th powers times cell volume") {
  Grid g = midpoint_grid({1, {0, 0, 0}, {2, 0, 0}}, {8, 1, 1});
  const auto one = [](const double*, double* out) { out[0] = 1.0; };
  CHECK(lp_norm_midpoint(g, 1, one, 2.0) == doctest::Approx(2.0).epsilon(1e-14));

  Grid g1 = midpoint_grid({1, {0, 0, 0}, {1, 0, 0}}, {1, 1, 1});
  const auto sq = [](const double* x, double* out) { out[0] = x[0] * x[0]; };
  CHECK(lp_norm_midpoint(g1, 1, sq, 1.0) == doctest::Approx(0.25).epsilon(1e-14));

  const auto two_comp = [](const double* x, double* out) {
    out[0] = x[0];
    out[1] = -2.0 * x[0];
  };
  Grid g2 = midpoint_grid({1, {0, 0, 0}, {1, 0, 0}}, {64, 1, 1});
  double got = lp_norm_midpoint(g2, 2, two_comp, 2.0);
  CHECK(got == doctest::Approx(5.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("non-finite integrand samples are rejected") {
  Grid g = midpoint_grid({1, {0, 0, 0}, {1, 0, 0}}, {4, 1, 1});
  const auto bad = [](const double* x, double* out) { out[0] = x[0] > 0.5 ? 1.0 / 0.0 : 1.0; };
  CHECK_THROWS_AS(lp_norm_midpoint(g, 1, bad, 2.0), std::runtime_error);
}

TEST_CASE("error bound is exact for a pure quadratic at one cell") {
  Grid g = midpoint_grid({1, {0, 0, 0}, {1, 0, 0}}, {1, 1, 1});
  double bound = midpoint_error_bound(g, {2.0});
  CHECK(bound == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  // midpoint of x^2 over [0,1] with one cell: 1/4, true integral 1/3.
  CHECK(bound >= 1.0 / 12.0 - 1e-15);
}

TEST_CASE("error bound vanishes for linear integrands and decays quadratically") {
  Grid g = midpoint_grid({1, {0, 0, 0}, {1, 0, 0}}, {5, 1, 1});
  CHECK(midpoint_error_bound(g, {0.0}) == 0.0);

  Grid ga = midpoint_grid({1, {0, 0, 0}, {3, 0, 0}}, {10, 1, 1});
  Grid gb = midpoint_grid({1, {0, 0, 0}, {3, 0, 0}}, {20, 1, 1});
  double ba = midpoint_error_bound(ga, {7.0});
  double bb = midpoint_error_bound(gb, {7.0});
  CHECK(bb == doctest::Approx(ba / 4.0).epsilon(1e-13));
}

TEST_CASE("error bound is symmetric under axis relabeling") {
  Grid g1 = midpoint_grid({2, {0, -1, 0}, {2, 1, 0}}, {8, 4, 1});
  Grid g2 = midpoint_grid({2, {-1, 0, 0}, {1, 2, 0}}, {4, 8, 1});
  CHECK(midpoint_error_bound(g1, {3.0, 5.0}) ==
        doctest::Approx(midpoint_error_bound(g2, {5.0, 3.0})).epsilon(1e-14));
}

TEST_CASE("power-of-absolute second derivative bound") {
  CHECK(pc2_bound(2.0, 1.0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(pc2_bound(4.0, 2.0) == doctest::Approx(256.0).epsilon(1e-14));
  CHECK_THROWS_AS(pc2_bound(1.5, 1.0), std::domain_error);
}

TEST_CASE("certified midpoint quadrature encloses random cubic polynomials") {
  rng_state = 0x2545f4914f6cdd1dull;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Poly2 poly;
    poly.dim = 1 + (trial % 2);
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= (poly.dim > 1 ? 3 : 0); ++j)
        poly.c[i][j] = 4.0 * urand() - 2.0;

    Box b;
    b.dim = poly.dim;
    for (int d = 0; d < poly.dim; ++d) {
      b.lo[d] = 3.0 * urand() - 1.5;
      b.hi[d] = b.lo[d] + 0.5 + 2.0 * urand();
    }
    std::array<int, 3> counts = {1 + int(urand() * 12), 1 + int(urand() * 12), 1};
    if (poly.dim == 1) counts[1] = 1;
    Grid g = midpoint_grid(b, counts);

    double mid = 0;
    std::vector<double> pt(3, 0.0);
    for (std::size_t k = 0; k < g.total(); ++k) {
      g.point(k, pt.data());
      mid += poly.eval(pt.data());
    }
    mid *= g.cell_volume();

    std::vector<double> c2(poly.dim);
    for (int d = 0; d < poly.dim; ++d) c2[d] = poly.c2_axis_bound(b, d);
    double bound = midpoint_error_bound(g, c2);
    double exact = poly.integral(b);
    CHECK_MESSAGE(std::fabs(mid - exact) <= bound + 1e-12 * (1.0 + std::fabs(exact)),
                  "trial ", trial, " err ", std::fabs(mid - exact), " bound ", bound);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("sampled sup surrogate approaches the true sup of sine") {
  const JetTable& tab = JetTable::get(1, 2);
  ClosedGrid g{{1, {0, 0, 0}, {3.14159265358979, 0, 0}}, {2048, 1, 1}};
  double s =
      sup_norm_surrogate(g, 0, [&](const std::array<double, 3>& pt) {
        return sin(Jet::variable(tab, pt, 0));
      });
  CHECK(s <= 1.0 + 1e-12);
  CHECK(s > 1.0 - 1e-3);

  double s1 = sup_norm_surrogate(g, 1, [&](const std::array<double, 3>& pt) {
    return sin(Jet::variable(tab, pt, 0));
  });
  CHECK(s1 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("surrogate label names the under-reporting hazard") {
  CHECK(std::string(kSupSurrogateLabel).find("surrogate") != std::string::npos);
  CHECK(std::string(kSupSurrogateLabel).find("under-report") != std::string::npos);
}

TEST_CASE("dense 1d sup scan refines near interior maxima") {
  double s = sup1d(0.0, 3.14159265358979, [](double x) { return std::sin(x); });
  CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  double q = sup1d(-2.0, 1.0, [](double x) { return x * x - 0.3; });
  CHECK(q == doctest::Approx(3.7).epsilon(1e-9));
}
