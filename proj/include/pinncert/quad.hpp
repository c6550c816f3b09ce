#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "pinncert/jet.hpp"

namespace pinncert {

struct Box {
  int dim = 1;
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{1, 1, 1};

  double length(int axis) const { return hi[axis] - lo[axis]; }
  double volume() const {
    double v = 1;
    for (int j = 0; j < dim; ++j) v *= length(j);
    return v;
  }
};

// Uniform cell-midpoint sample set. Flat index runs axis 0 fastest.
struct Grid {
  Box box;
  std::array<int, 3> counts{1, 1, 1};

  std::size_t total() const {
    std::size_t n = 1;
    for (int j = 0; j < box.dim; ++j) n *= static_cast<std::size_t>(counts[j]);
    return n;
  }
  double cell_volume() const {
    double v = 1;
    for (int j = 0; j < box.dim; ++j) v *= box.length(j) / counts[j];
    return v;
  }
  void point(std::size_t flat, double* out) const {
    for (int j = 0; j < box.dim; ++j) {
      const std::size_t i = flat % counts[j];
      flat /= counts[j];
      out[j] = box.lo[j] + (i + 0.5) * (box.length(j) / counts[j]);
    }
  }
};

Grid midpoint_grid(const Box& box, const std::array<int, 3>& counts);

// Uniform node set including the box faces, for sup-norm probing.
struct ClosedGrid {
  Box box;
  std::array<int, 3> counts{2, 2, 2};

  std::size_t total() const {
    std::size_t n = 1;
    for (int j = 0; j < box.dim; ++j) n *= static_cast<std::size_t>(counts[j]);
    return n;
  }
  void point(std::size_t flat, double* out) const {
    for (int j = 0; j < box.dim; ++j) {
      const std::size_t i = flat % counts[j];
      flat /= counts[j];
      out[j] = counts[j] == 1 ? box.lo[j] + 0.5 * box.length(j)
                              : box.lo[j] + i * (box.length(j) / (counts[j] - 1));
    }
  }
};

// Midpoint value of the p-th power of the Lp norm: cellvol * sum over points
// and components of |f_c(x)|^p. Non-finite samples raise an error.
double lp_norm_midpoint(const Grid& g, int ncomp,
                        const std::function<void(const double*, double*)>& f, double p);

// Bound on |integral - midpoint sum| for one scalar integrand given
// per-axis bounds on sup |d^2 y / dx_j^2|.
double midpoint_error_bound(const Grid& g, const std::vector<double>& c2_sup_per_axis);

// Bound on the C norm of (|y|^p)'' from the C^2 norm of y; needs p >= 2.
double pc2_bound(double p, double y_c2_norm);

// Dense-grid estimate of max over |i| <= order of sup |d^i f|. A sampled
// maximum can under-report; report it as "surrogate (may under-report)".
extern const char* const kSupSurrogateLabel;
double sup_norm_surrogate(const ClosedGrid& g, int order,
                          const std::function<Jet(const std::array<double, 3>&)>& f);

// Sup of |f| over [a, b] by dense scan plus local ternary refinement.
double sup1d(double a, double b, const std::function<double(double)>& f, int samples = 4096);

}  // namespace pinncert
