#pragma once

#include <array>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "pinncert/multi_index.hpp"

namespace pinncert {

// Raw kernels on coefficient buffers. Buffers hold normalized Taylor
// coefficients c_i = (d^i f / i!) in table order. Kernels touch exactly the
// first nv coefficients (nv = table.count_upto[valid order]); callers keep
// the tail zeroed.
namespace jetk {

inline void constant(const JetTable& t, double* out, double value) {
  std::memset(out, 0, sizeof(double) * t.ncoef);
  out[0] = value;
}

inline void variable(const JetTable& t, double* out, double value, int axis) {
  constant(t, out, value);
  if (t.order >= 1) out[t.find(axis == 0, axis == 1, axis == 2)] = 1.0;
}

inline void abs_variable(const JetTable& t, double* out, double value, int axis) {
  constant(t, out, value < 0 ? -value : value);
  if (t.order >= 1)
    out[t.find(axis == 0, axis == 1, axis == 2)] = (value > 0) - (value < 0);
}

inline void mul_fwd(const JetTable& t, int nv, const double* a, const double* b, double* out) {
  for (int k = 0; k < nv; ++k) {
    double s = 0;
    const int e = t.pair_off[k + 1];
    for (int q = t.pair_off[k]; q < e; ++q) s += a[t.pairs[q].first] * b[t.pairs[q].second];
    out[k] = s;
  }
}

inline void mul_rev(const JetTable& t, int nv, const double* a, const double* b,
                    const double* adj_out, double* adj_a, double* adj_b) {
  for (int k = 0; k < nv; ++k) {
    const double g = adj_out[k];
    if (g == 0) continue;
    const int e = t.pair_off[k + 1];
    for (int q = t.pair_off[k]; q < e; ++q) {
      adj_a[t.pairs[q].first] += b[t.pairs[q].second] * g;
      adj_b[t.pairs[q].second] += a[t.pairs[q].first] * g;
    }
  }
}

// adj_in += w (*) adj_out, the reverse map of y = F(in) with stored F'(in) = w.
inline void corr_rev(const JetTable& t, int nv, const double* w, const double* adj_out,
                     double* adj_in) {
  for (int k = 0; k < nv; ++k) {
    const double g = adj_out[k];
    if (g == 0) continue;
    const int e = t.pair_off[k + 1];
    for (int q = t.pair_off[k]; q < e; ++q)
      adj_in[t.pairs[q].first] += w[t.pairs[q].second] * g;
  }
}

// Partial derivative along one axis; output is valid to one order less than
// the input. nv_out bounds the coefficients written.
inline void shift_fwd(const JetTable& t, int nv_out, int axis, const double* in, double* out) {
  for (int k = 0; k < nv_out; ++k) {
    const auto& s = t.shift[k][axis];
    out[k] = s.src >= 0 ? s.factor * in[s.src] : 0.0;
  }
}

inline void shift_rev(const JetTable& t, int nv_out, int axis, const double* adj_out,
                      double* adj_in) {
  for (int k = 0; k < nv_out; ++k) {
    const auto& s = t.shift[k][axis];
    if (s.src >= 0) adj_in[s.src] += s.factor * adj_out[k];
  }
}

// Normalized derivative coefficients f_k = f^(k)(x0) / k! for k = 0..order.
void tanh_coeffs(double x0, int order, double* f);
void sin_coeffs(double x0, int order, double* f);
void cos_coeffs(double x0, int order, double* f);
void exp_coeffs(double x0, int order, double* f);
void log_coeffs(double x0, int order, double* f);
void pow_coeffs(double x0, double a, int order, double* f);

// out = sum_k f[k] * (in - in[0])^k truncated, Horner form. valid is the
// input's valid order; scratch must hold 2 * t.ncoef doubles.
void compose(const JetTable& t, int valid, const double* f, const double* in, double* out,
             double* scratch);

// y = tanh(in); w = 1 - y (*) y stored for the reverse sweep.
void tanh_fwd(const JetTable& t, int valid, const double* in, double* y, double* w,
              double* scratch);

}  // namespace jetk

// Truncated Taylor expansion of a scalar field at a point, with the valid
// differentiation order tracked through every operation.
class Jet {
 public:
  Jet(const JetTable& tab, const std::array<double, 3>& point)
      : tab_(&tab), point_(point), valid_(tab.order), c_(tab.ncoef, 0.0) {}

  static Jet constant(const JetTable& tab, const std::array<double, 3>& pt, double v) {
    Jet j(tab, pt);
    j.c_[0] = v;
    return j;
  }
  static Jet variable(const JetTable& tab, const std::array<double, 3>& pt, int axis) {
    check_axis(tab, axis);
    Jet j(tab, pt);
    jetk::variable(tab, j.c_.data(), pt[axis], axis);
    return j;
  }
  static Jet abs_variable(const JetTable& tab, const std::array<double, 3>& pt, int axis) {
    check_axis(tab, axis);
    Jet j(tab, pt);
    jetk::abs_variable(tab, j.c_.data(), pt[axis], axis);
    return j;
  }

  const JetTable& table() const { return *tab_; }
  int nvars() const { return tab_->nvars; }
  int order() const { return tab_->order; }
  int valid_order() const { return valid_; }
  const std::array<double, 3>& point() const { return point_; }

  double coeff(int k) const { return c_[k]; }
  const double* data() const { return c_.data(); }
  double* data() { return c_.data(); }

  // Derivative value d^i f at the expansion point.
  double partial(const std::array<int, 3>& mi) const {
    int k = tab_->find(mi[0], mi[1], mi[2]);
    if (k < 0) throw std::invalid_argument("Jet::partial: multi-index above stored order");
    if (tab_->degree[k] > valid_)
      throw std::invalid_argument("Jet::partial: multi-index above valid order");
    return c_[k] * tab_->fact[k];
  }
  double partial(int i0, int i1 = 0, int i2 = 0) const { return partial({i0, i1, i2}); }

  void set_partial(const std::array<int, 3>& mi, double v) {
    int k = tab_->find(mi[0], mi[1], mi[2]);
    if (k < 0) throw std::invalid_argument("Jet::set_partial: multi-index above stored order");
    c_[k] = v / tab_->fact[k];
  }

  void clamp_valid(int v) {
    if (v < valid_) {
      valid_ = v;
      const int nv = tab_->count_upto[valid_];
      for (int k = nv; k < tab_->ncoef; ++k) c_[k] = 0;
    }
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r = a.binary_frame(b);
    const int nv = r.tab_->count_upto[r.valid_];
    for (int k = 0; k < nv; ++k) r.c_[k] = a.c_[k] + b.c_[k];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r = a.binary_frame(b);
    const int nv = r.tab_->count_upto[r.valid_];
    for (int k = 0; k < nv; ++k) r.c_[k] = a.c_[k] - b.c_[k];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r = a.binary_frame(b);
    jetk::mul_fwd(*r.tab_, r.tab_->count_upto[r.valid_], a.c_.data(), b.c_.data(), r.c_.data());
    return r;
  }
  friend Jet operator*(double s, const Jet& a) {
    Jet r = a;
    for (auto& v : r.c_) v *= s;
    return r;
  }
  friend Jet operator+(const Jet& a, double s) {
    Jet r = a;
    r.c_[0] += s;
    return r;
  }
  friend Jet operator-(const Jet& a, double s) { return a + (-s); }
  friend Jet operator-(const Jet& a) { return -1.0 * a; }

  Jet& operator+=(const Jet& b) { return *this = *this + b; }

 private:
  Jet binary_frame(const Jet& b) const {
    if (tab_ != b.tab_)
      throw std::invalid_argument("jet arithmetic: operands differ in order or variable count");
    if (point_ != b.point_)
      throw std::invalid_argument("jet arithmetic: operands expanded at different points");
    Jet r(*tab_, point_);
    r.valid_ = valid_ < b.valid_ ? valid_ : b.valid_;
    return r;
  }
  static void check_axis(const JetTable& tab, int axis) {
    if (axis < 0 || axis >= tab.nvars) throw std::invalid_argument("Jet: axis out of range");
  }

  const JetTable* tab_;
  std::array<double, 3> point_;
  int valid_;
  std::vector<double> c_;

  friend Jet dshift(const Jet&, int);
  friend Jet compose_univariate(const Jet&, const double*);
};

Jet dshift(const Jet& a, int axis);
Jet compose_univariate(const Jet& g, const double* f);

Jet tanh(const Jet& g);
Jet sin(const Jet& g);
Jet cos(const Jet& g);
Jet exp(const Jet& g);
Jet log(const Jet& g);
Jet pow(const Jet& g, double a);
Jet sech2(const Jet& g);

}  // namespace pinncert
