#include "pinncert/consts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pinncert {

double poincare_const(double p) {
  if (!(p >= 1)) throw std::domain_error("poincare_const: p must be >= 1");
  constexpr double pi = 3.14159265358979323846;
  if (p < 2) return std::pow(pi, 2.0 / p - 2.0) * std::pow(2.0, 1.0 - 2.0 / p);
  return p * std::sin(pi / p) / (2.0 * pi * std::pow(p - 1.0, 1.0 / p));
}

namespace {

double log_factorial(int n) { return std::lgamma(n + 1.0); }

double log_binom(int n, int k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Exact for arguments small enough that every intermediate is an integer
// below 2^53.
double binom_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

double bramble_hilbert_const(int sigma, int nu, double p, int m) {
  if (nu > sigma) throw std::domain_error("bramble_hilbert_const: nu must not exceed sigma");
  if (nu < 0 || sigma < 0) throw std::domain_error("bramble_hilbert_const: negative order");
  if (!(p >= 1)) throw std::domain_error("bramble_hilbert_const: p must be >= 1");
  if (m < 1) throw std::domain_error("bramble_hilbert_const: m must be >= 1");

  const int d = sigma - nu;
  const int ceil_dm = (d + m - 1) / m;
  const double log_val = log_binom(m + nu - 1, nu) / p + log_factorial(d) / p -
                         static_cast<double>(m) / p * log_factorial(ceil_dm);
  return std::pow(poincare_const(p), d) * std::exp(log_val);
}

double jp_projection(const std::vector<double>& y, double p) {
  if (y.empty()) throw std::invalid_argument("jp_projection: empty sample");
  if (!(p >= 1)) throw std::domain_error("jp_projection: p must be >= 1");
  if (p < 2) {
    double s = 0;
    for (double v : y) s += v;
    return s / y.size();
  }

  double lo = y[0], hi = y[0];
  for (double v : y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) return lo;

  auto g = [&](double s) {
    double acc = 0;
    for (double v : y) {
      const double d = v - s;
      acc += std::pow(std::fabs(d), p - 2.0) * d;
    }
    return acc;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (g(mid) > 0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

TanhSizeBounds tanh_size_bounds(int sigma, int m, int N, const Box& box) {
  if (N <= 5) throw std::domain_error("tanh_size_bounds: needs N > 5");
  if (sigma < 3) throw std::domain_error("tanh_size_bounds: needs sigma >= 3");
  if (m < 2) throw std::domain_error("tanh_size_bounds: needs m >= 2");
  if (box.dim != m) throw std::invalid_argument("tanh_size_bounds: box dimension mismatch");
  for (int j = 0; j < m; ++j) {
    if (box.lo[j] != std::floor(box.lo[j]) || box.hi[j] != std::floor(box.hi[j]))
      throw std::domain_error("tanh_size_bounds: box endpoints must be integers");
    if (!(box.hi[j] > box.lo[j])) throw std::invalid_argument("tanh_size_bounds: empty box");
  }

  TanhSizeBounds r;
  double edge_sum = 0, vol = 1;
  for (int j = 0; j < m; ++j) {
    edge_sum += box.length(j);
    vol *= box.length(j);
  }
  const double ceil_s2 = (sigma + 1) / 2;
  const double ceil_m2 = (m + 3) / 2;
  r.width1 = 3.0 * ceil_s2 * binom_exact(sigma + m - 1, m + 1) + edge_sum * (N - 1);
  r.width2 = 3.0 * ceil_m2 * binom_exact(2 * m + 1, m + 1) * std::pow(N, m) * vol;
  r.weight_exponent =
      std::max(0.5 * sigma * sigma, m * (1.0 + 0.5 * sigma + 0.5 * m));
  for (int nu = 0; nu <= 2; ++nu) {
    r.rate_exponents[nu] = -(sigma - nu);
    r.rate_log_powers[nu] = nu;
  }
  return r;
}

double aux_gradient_factor(double p, double len) {
  if (!(p >= 1)) throw std::domain_error("aux_gradient_factor: p must be >= 1");
  if (!(len > 0)) throw std::invalid_argument("aux_gradient_factor: length must be positive");
  return std::pow(2.0, p - 2.0) * std::pow(len, p);
}

double aux_trace_factor(double p, double len) {
  if (!(p >= 1)) throw std::domain_error("aux_trace_factor: p must be >= 1");
  if (!(len > 0)) throw std::invalid_argument("aux_trace_factor: length must be positive");
  return std::pow(2.0, (p - 1.0) / p) * std::max(1.0, len) / std::pow(len, 1.0 / p);
}

double aux_boundary_mean_factor(double len) {
  if (!(len > 0)) throw std::invalid_argument("aux_boundary_mean_factor: length must be positive");
  return 0.5 * len;
}

}  // namespace pinncert
