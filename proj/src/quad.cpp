#include "pinncert/quad.hpp"

#include <cmath>
#include <stdexcept>

namespace pinncert {

Grid midpoint_grid(const Box& box, const std::array<int, 3>& counts) {
  if (box.dim < 1 || box.dim > 3) throw std::invalid_argument("midpoint_grid: dim must be 1..3");
  for (int j = 0; j < box.dim; ++j) {
    if (counts[j] < 1) throw std::invalid_argument("midpoint_grid: counts must be positive");
    if (!(box.hi[j] > box.lo[j])) throw std::invalid_argument("midpoint_grid: empty box");
  }
  Grid g;
  g.box = box;
  g.counts = counts;
  return g;
}

double lp_norm_midpoint(const Grid& g, int ncomp,
                        const std::function<void(const double*, double*)>& f, double p) {
  if (ncomp < 1) throw std::invalid_argument("lp_norm_midpoint: need at least one component");
  if (!(p >= 1)) throw std::domain_error("lp_norm_midpoint: p must be >= 1");
  std::vector<double> comps(ncomp);
  double pt[3] = {0, 0, 0};
  double acc = 0;
  const std::size_t n = g.total();
  for (std::size_t i = 0; i < n; ++i) {
    g.point(i, pt);
    f(pt, comps.data());
    for (int c = 0; c < ncomp; ++c) {
      if (!std::isfinite(comps[c]))
        throw std::runtime_error("lp_norm_midpoint: non-finite sample value");
      acc += std::pow(std::fabs(comps[c]), p);
    }
  }
  return acc * g.cell_volume();
}

double midpoint_error_bound(const Grid& g, const std::vector<double>& c2_sup_per_axis) {
  if (static_cast<int>(c2_sup_per_axis.size()) != g.box.dim)
    throw std::invalid_argument("midpoint_error_bound: need one second-derivative sup per axis");
  double s = 0;
  for (int j = 0; j < g.box.dim; ++j) {
    if (!(c2_sup_per_axis[j] >= 0))
      throw std::invalid_argument("midpoint_error_bound: negative derivative sup");
    const double len = g.box.length(j);
    const double nj = g.counts[j];
    s += len * len / (nj * nj) * c2_sup_per_axis[j];
  }
  return g.box.volume() / 24.0 * s;
}

double pc2_bound(double p, double y_c2_norm) {
  if (!(p >= 2)) throw std::domain_error("pc2_bound: needs p >= 2");
  if (!(y_c2_norm >= 0)) throw std::invalid_argument("pc2_bound: negative norm");
  return p * p * std::pow(y_c2_norm, p);
}

const char* const kSupSurrogateLabel = "surrogate (may under-report)";

double sup_norm_surrogate(const ClosedGrid& g, int order,
                          const std::function<Jet(const std::array<double, 3>&)>& f) {
  double best = 0;
  double pt[3] = {0, 0, 0};
  const std::size_t n = g.total();
  for (std::size_t i = 0; i < n; ++i) {
    g.point(i, pt);
    Jet j = f({pt[0], pt[1], pt[2]});
    if (j.valid_order() < order)
      throw std::invalid_argument("sup_norm_surrogate: jet order below requested sup order");
    const JetTable& t = j.table();
    const int nv = t.count_upto[order];
    for (int k = 0; k < nv; ++k) {
      const double d = std::fabs(j.coeff(k) * t.fact[k]);
      if (!std::isfinite(d)) throw std::runtime_error("sup_norm_surrogate: non-finite derivative");
      if (d > best) best = d;
    }
  }
  return best;
}

double sup1d(double a, double b, const std::function<double(double)>& f, int samples) {
  if (!(b >= a)) throw std::invalid_argument("sup1d: empty interval");
  if (samples < 2) samples = 2;
  const double h = (b - a) / (samples - 1);
  double best = 0;
  int best_i = 0;
  for (int i = 0; i < samples; ++i) {
    const double v = std::fabs(f(a + i * h));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double lo = a + std::max(0, best_i - 1) * h;
  double hi = a + std::min(samples - 1, best_i + 1) * h;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (std::fabs(f(m1)) < std::fabs(f(m2)))
      lo = m1;
    else
      hi = m2;
  }
  best = std::max(best, std::fabs(f(0.5 * (lo + hi))));
  return best;
}

}  // namespace pinncert
