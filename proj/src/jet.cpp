#include "pinncert/jet.hpp"

#include <cmath>
#include <mutex>

namespace pinncert {
namespace jetk {

namespace {

// P_k(y) with d^k/dx^k tanh(x) = P_k(tanh x); P_1 = 1 - y^2 and
// P_{k+1} = P_k'(y) * (1 - y^2). deg P_k = k + 1.
const std::vector<std::vector<double>>& tanh_polys() {
  static std::once_flag once;
  static std::vector<std::vector<double>> polys;
  std::call_once(once, [] {
    std::vector<double> p = {1.0, 0.0, -1.0};
    polys.push_back(p);
    for (int k = 1; k < kMaxJetOrder; ++k) {
      std::vector<double> dp(p.size() - 1);
      for (size_t i = 1; i < p.size(); ++i) dp[i - 1] = p[i] * static_cast<double>(i);
      std::vector<double> next(dp.size() + 2, 0.0);
      for (size_t i = 0; i < dp.size(); ++i) {
        next[i] += dp[i];
        next[i + 2] -= dp[i];
      }
      p = std::move(next);
      polys.push_back(p);
    }
  });
  return polys;
}

double polyval(const std::vector<double>& p, double y) {
  double v = 0;
  for (size_t i = p.size(); i-- > 0;) v = v * y + p[i];
  return v;
}

}  // namespace

void tanh_coeffs(double x0, int order, double* f) {
  const double y = std::tanh(x0);
  f[0] = y;
  double kfact = 1;
  const auto& polys = tanh_polys();
  for (int k = 1; k <= order; ++k) {
    kfact *= k;
    f[k] = polyval(polys[k - 1], y) / kfact;
  }
}

void sin_coeffs(double x0, int order, double* f) {
  const double s = std::sin(x0), c = std::cos(x0);
  const double cyc[4] = {s, c, -s, -c};
  double kfact = 1;
  for (int k = 0; k <= order; ++k) {
    if (k > 1) kfact *= k;
    f[k] = cyc[k % 4] / kfact;
  }
}

void cos_coeffs(double x0, int order, double* f) {
  const double s = std::sin(x0), c = std::cos(x0);
  const double cyc[4] = {c, -s, -c, s};
  double kfact = 1;
  for (int k = 0; k <= order; ++k) {
    if (k > 1) kfact *= k;
    f[k] = cyc[k % 4] / kfact;
  }
}

void exp_coeffs(double x0, int order, double* f) {
  const double e = std::exp(x0);
  double kfact = 1;
  for (int k = 0; k <= order; ++k) {
    if (k > 1) kfact *= k;
    f[k] = e / kfact;
  }
}

void log_coeffs(double x0, int order, double* f) {
  f[0] = std::log(x0);
  double xp = 1;
  for (int k = 1; k <= order; ++k) {
    xp *= x0;
    f[k] = (k % 2 ? 1.0 : -1.0) / (k * xp);
  }
}

void pow_coeffs(double x0, double a, int order, double* f) {
  f[0] = std::pow(x0, a);
  double coef = 1;
  for (int k = 1; k <= order; ++k) {
    coef *= (a - (k - 1)) / k;
    f[k] = coef * std::pow(x0, a - k);
  }
}

void compose(const JetTable& t, int valid, const double* f, const double* in, double* out,
             double* scratch) {
  double* ghat = scratch;
  double* acc = scratch + t.ncoef;
  const int nv = t.count_upto[valid];

  std::memcpy(ghat, in, sizeof(double) * nv);
  ghat[0] = 0;
  std::memset(out, 0, sizeof(double) * t.ncoef);
  out[0] = f[valid];
  for (int k = valid - 1; k >= 0; --k) {
    mul_fwd(t, nv, out, ghat, acc);
    std::memcpy(out, acc, sizeof(double) * nv);
    out[0] += f[k];
  }
}

void tanh_fwd(const JetTable& t, int valid, const double* in, double* y, double* w,
              double* scratch) {
  double f[kMaxJetOrder + 1];
  tanh_coeffs(in[0], valid, f);
  compose(t, valid, f, in, y, scratch);
  const int nv = t.count_upto[valid];
  mul_fwd(t, nv, y, y, w);
  for (int k = 0; k < nv; ++k) w[k] = -w[k];
  w[0] += 1.0;
}

}  // namespace jetk

Jet dshift(const Jet& a, int axis) {
  if (axis < 0 || axis >= a.nvars()) throw std::invalid_argument("dshift: axis out of range");
  if (a.valid_ < 1) throw std::invalid_argument("dshift: jet has no valid order left");
  Jet r(*a.tab_, a.point_);
  r.valid_ = a.valid_ - 1;
  jetk::shift_fwd(*a.tab_, a.tab_->count_upto[r.valid_], axis, a.c_.data(), r.c_.data());
  return r;
}

Jet compose_univariate(const Jet& g, const double* f) {
  Jet r(*g.tab_, g.point_);
  r.valid_ = g.valid_;
  std::vector<double> scratch(2 * g.tab_->ncoef);
  jetk::compose(*g.tab_, g.valid_, f, g.c_.data(), r.c_.data(), scratch.data());
  return r;
}

namespace {
template <void (*Gen)(double, int, double*)>
Jet apply(const Jet& g) {
  double f[kMaxJetOrder + 1];
  Gen(g.coeff(0), g.valid_order(), f);
  return compose_univariate(g, f);
}
}  // namespace

Jet tanh(const Jet& g) { return apply<jetk::tanh_coeffs>(g); }
Jet sin(const Jet& g) { return apply<jetk::sin_coeffs>(g); }
Jet cos(const Jet& g) { return apply<jetk::cos_coeffs>(g); }
Jet exp(const Jet& g) { return apply<jetk::exp_coeffs>(g); }
Jet log(const Jet& g) { return apply<jetk::log_coeffs>(g); }

Jet pow(const Jet& g, double a) {
  double f[kMaxJetOrder + 1];
  jetk::pow_coeffs(g.coeff(0), a, g.valid_order(), f);
  return compose_univariate(g, f);
}

Jet sech2(const Jet& g) {
  Jet t = tanh(g);
  return -1.0 * (t * t) + 1.0;
}

}  // namespace pinncert
