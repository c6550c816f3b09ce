#pragma once

#include <array>
#include <vector>

#include "pinncert/quad.hpp"

namespace pinncert {

// Optimal constant pi_p in the one-dimensional Poincare inequality on a unit
// interval for mean-free (p < 2) respectively projection-centered functions.
double poincare_const(double p);

// Polynomial-projection constant for W^{sigma,p} -> W^{nu,p} approximation
// on an m-dimensional box.
double bramble_hilbert_const(int sigma, int nu, double p, int m);

// Minimizer of s -> sum_i |y_i - s|^p. Mean for p in [1,2); for p >= 2 the
// unique root of the decreasing function g(s) = sum |y_i - s|^(p-2) (y_i - s),
// found by bisection on [min y, max y] to machine precision (tolerance
// below 1e-10).
double jp_projection(const std::vector<double>& y, double p);

struct TanhSizeBounds {
  double width1 = 0;          // first hidden layer
  double width2 = 0;          // second hidden layer
  double weight_exponent = 0; // network weights grow at most like N^this
  // Convergence rates N^(-(sigma-nu)) * log(N)^nu for nu = 0, 1, 2.
  std::array<double, 3> rate_exponents{0, 0, 0};
  std::array<int, 3> rate_log_powers{0, 1, 2};
};

// Width and weight-growth bounds for tanh emulation of order-sigma accuracy
// on an integer box; requires N > 5, sigma >= 3, m >= 2.
TanhSizeBounds tanh_size_bounds(int sigma, int m, int N, const Box& box);

// Factors from the one-dimensional auxiliary inequalities.
double aux_gradient_factor(double p, double len);   // 2^(p-2) * len^p
double aux_trace_factor(double p, double len);      // 2^((p-1)/p) * max{1, len} / len^(1/p)
double aux_boundary_mean_factor(double len);        // len / 2

}  // namespace pinncert
