#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pinncert/consts.hpp"

using namespace pinncert;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t rng_state = 0x853c49e6748fea9bull;
double urand() {
  rng_state ^= rng_state << 13;
  rng_state ^= rng_state >> 7;
  rng_state ^= rng_state << 17;
  return double(rng_state >> 11) / double(1ull << 53);
}

double jp_objective(const std::vector<double>& y, double s, double p) {
  double acc = 0;
  for (double v : y) acc += std::pow(std::fabs(v - s), p);
  return acc;
}

}  // namespace

TEST_CASE("poincare constants at pinned exponents") {
  CHECK(poincare_const(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(poincare_const(2.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
  CHECK(poincare_const(4.0) ==
        doctest::Approx(4.0 * std::sin(kPi / 4) / (2 * kPi * std::pow(3.0, 0.25)))
            .epsilon(1e-14));
  CHECK(poincare_const(4.0) == doctest::Approx(0.342).epsilon(1e-3));
  // Both branches meet at p = 2.
  CHECK(poincare_const(1.999999) == doctest::Approx(poincare_const(2.0)).epsilon(1e-5));
  CHECK_THROWS_AS(poincare_const(0.5), std::domain_error);
}

TEST_CASE("poincare inequality holds for centered polynomial samples") {
  rng_state = 0x6c8e9cf570932bd5ull;
  const int n = 4096;
  const double h = 1.0 / n;
  for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    for (int trial = 0; trial < 40; ++trial) {
      double c[5];
      for (double& v : c) v = 4.0 * urand() - 2.0;
      std::vector<double> y(n), dy(n);
      for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) * h;
        y[i] = c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])));
        dy[i] = c[1] + x * (2 * c[2] + x * (3 * c[3] + x * 4 * c[4]));
      }
      const double s = jp_projection(y, p);
      double num = 0, den = 0;
      for (int i = 0; i < n; ++i) {
        num += std::pow(std::fabs(y[i] - s), p) * h;
        den += std::pow(std::fabs(dy[i]), p) * h;
      }
      const double lhs = std::pow(num, 1.0 / p);
      const double rhs = poincare_const(p) * std::pow(den, 1.0 / p);
      CHECK_MESSAGE(lhs <= rhs * (1.0 + 1e-4), "p ", p, " trial ", trial, " lhs ", lhs,
                    " rhs ", rhs);
    }
  }
}

TEST_CASE("projection-order constants at pinned arguments") {
  CHECK(bramble_hilbert_const(2, 2, 2.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bramble_hilbert_const(4, 4, 3.0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bramble_hilbert_const(1, 0, 2.0, 1) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
  // One dimension: the constant collapses to a pure Poincare power.
  for (int sigma = 1; sigma <= 6; ++sigma)
    CHECK(bramble_hilbert_const(sigma, 0, 2.0, 1) ==
          doctest::Approx(std::pow(1.0 / kPi, sigma)).epsilon(1e-11));
}

TEST_CASE("projection-order constants decrease in the order gap and stay finite") {
  double prev = bramble_hilbert_const(1, 0, 2.0, 2);
  for (int sigma = 2; sigma <= 8; ++sigma) {
    double cur = bramble_hilbert_const(sigma, 0, 2.0, 2);
    CHECK(cur < prev);
    prev = cur;
  }
  double deep = bramble_hilbert_const(24, 0, 2.0, 2);
  CHECK(std::isfinite(deep));
  CHECK(deep > 0);
  CHECK_THROWS_AS(bramble_hilbert_const(1, 2, 2.0, 1), std::domain_error);
  CHECK_THROWS_AS(bramble_hilbert_const(2, 0, 0.5, 1), std::domain_error);
}

TEST_CASE("power projection reduces to the mean below p = 2") {
  std::vector<double> y = {1.0, 2.0, 6.0};
  CHECK(jp_projection(y, 1.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(jp_projection(y, 1.7) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("power projection fixes constants and respects symmetry") {
  std::vector<double> flat(7, 4.25);
  for (double p : {2.0, 3.0, 4.5}) CHECK(jp_projection(flat, p) == 4.25);

  std::vector<double> odd = {-3.0, -1.0, 1.0, 3.0};
  CHECK(std::fabs(jp_projection(odd, 4.0)) < 1e-10);

  rng_state = 0xda3e39cb94b95bdbull;
  for (double p : {2.0, 3.0, 4.5}) {
    std::vector<double> y(33), neg(33);
    for (int i = 0; i < 33; ++i) {
      y[i] = 10.0 * urand() - 5.0;
      neg[i] = -y[i];
    }
    CHECK(std::fabs(jp_projection(neg, p) + jp_projection(y, p)) < 1e-10);

    const double s = jp_projection(y, p);
    std::vector<double> centered = y;
    for (double& v : centered) v -= s;
    CHECK(std::fabs(jp_projection(centered, p)) < 1e-8);
  }
}

TEST_CASE("power projection matches a brute-force scan and is stationary") {
  rng_state = 0xaf63bd4c8601b7efull;
  for (double p : {2.0, 3.0, 4.5}) {
    std::vector<double> y(50);
    for (double& v : y) v = 6.0 * urand() - 3.0;
    const double s = jp_projection(y, p);

    double lo = y[0], hi = y[0];
    for (double v : y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double best = lo, best_val = jp_objective(y, lo, p);
    const int steps = 200000;
    for (int i = 1; i <= steps; ++i) {
      const double s2 = lo + (hi - lo) * i / steps;
      const double v = jp_objective(y, s2, p);
      if (v < best_val) {
        best_val = v;
        best = s2;
      }
    }
    CHECK(std::fabs(s - best) < 1e-4);
    CHECK(jp_objective(y, s, p) <= best_val * (1.0 + 1e-12));

    double g = 0, scale = 0;
    for (double v : y) {
      const double d = v - s;
      g += std::pow(std::fabs(d), p - 2.0) * d;
      scale += std::pow(std::fabs(d), p - 1.0);
    }
    CHECK(std::fabs(g) <= 1e-8 * scale);
  }
  CHECK_THROWS_AS(jp_projection({}, 2.0), std::invalid_argument);
}

TEST_CASE("tanh emulation bounds at the pinned configuration") {
  Box sq{2, {0, 0, 0}, {1, 1, 0}};
  TanhSizeBounds b = tanh_size_bounds(3, 2, 6, sq);
  CHECK(b.width1 == doctest::Approx(34.0).epsilon(1e-14));
  CHECK(b.width2 == doctest::Approx(2160.0).epsilon(1e-14));
  CHECK(b.weight_exponent == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(b.rate_exponents[0] == -3.0);
  CHECK(b.rate_exponents[1] == -2.0);
  CHECK(b.rate_exponents[2] == -1.0);
  CHECK(b.rate_log_powers[0] == 0);
  CHECK(b.rate_log_powers[2] == 2);
}

TEST_CASE("second hidden width scales as sixty times squared resolution times area") {
  for (int N : {6, 7, 10, 16, 25}) {
    for (int w : {1, 2, 3}) {
      Box box{2, {0, 0, 0}, {double(w), 2, 0}};
      TanhSizeBounds b = tanh_size_bounds(3, 2, N, box);
      const double area = 2.0 * w;
      CHECK(b.width2 == 60.0 * N * N * area);
      CHECK(b.width2 == std::floor(b.width2));
    }
  }
}

TEST_CASE("tanh bound preconditions") {
  Box sq{2, {0, 0, 0}, {1, 1, 0}};
  CHECK_THROWS_AS(tanh_size_bounds(3, 2, 5, sq), std::domain_error);
  CHECK_THROWS_AS(tanh_size_bounds(2, 2, 6, sq), std::domain_error);
  Box frac{2, {0, 0, 0}, {1.5, 1, 0}};
  CHECK_THROWS_AS(tanh_size_bounds(3, 2, 6, frac), std::domain_error);
  Box wrongdim{3, {0, 0, 0}, {1, 1, 1}};
  CHECK_THROWS_AS(tanh_size_bounds(3, 2, 6, wrongdim), std::invalid_argument);
}

TEST_CASE("auxiliary interval factors at pinned arguments") {
  CHECK(aux_gradient_factor(2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(aux_gradient_factor(3.0, 2.0) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(aux_trace_factor(2.0, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(aux_trace_factor(2.0, 4.0) ==
        doctest::Approx(std::sqrt(2.0) * 4.0 / 2.0).epsilon(1e-12));
  CHECK(aux_boundary_mean_factor(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(aux_gradient_factor(2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(aux_trace_factor(0.5, 1.0), std::domain_error);
}
