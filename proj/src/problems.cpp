#include "pinncert/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pinncert {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Where each differentiation variable of a program gets its value: a grid
// coordinate, or a face value pinned for the whole program.
struct VarMap {
  std::array<int, 3> grid_axis{-1, -1, -1};
  std::array<double, 3> fixed{0, 0, 0};

  std::array<double, 3> point(const double* gpt, int nvars) const {
    std::array<double, 3> pt{0, 0, 0};
    for (int v = 0; v < nvars; ++v)
      pt[v] = grid_axis[v] >= 0 ? gpt[grid_axis[v]] : fixed[v];
    return pt;
  }
};

std::vector<InputSpec> plain_specs(const VarMap& vm, int nvars) {
  std::vector<InputSpec> specs;
  specs.reserve(static_cast<std::size_t>(nvars));
  for (int v = 0; v < nvars; ++v)
    specs.push_back({vm.grid_axis[v], vm.fixed[v], v, false});
  return specs;
}

using JetFn = std::function<Jet(const JetTable&, const std::array<double, 3>&)>;

DataFn make_data_fn(const JetTable& tab, const VarMap& vm, JetFn f) {
  return [&tab, vm, f = std::move(f)](const double* gpt, double* coeffs) {
    const auto pt = vm.point(gpt, tab.nvars);
    const Jet j = f(tab, pt);
    std::memcpy(coeffs, j.data(), sizeof(double) * static_cast<std::size_t>(tab.ncoef));
  };
}

// Derivative trace of the closed-form solution, used as problem data.
JetFn exact_trace(const Problem& prob, int comp, std::array<int, 3> d = {0, 0, 0}) {
  return [&prob, comp, d](const JetTable& tab, const std::array<double, 3>& pt) {
    Jet j = prob.exact_jet(tab, pt, comp);
    for (int ax = 0; ax < 3; ++ax)
      for (int k = 0; k < d[ax]; ++k) j = dshift(j, ax);
    return j;
  };
}

int trace_valid(const JetTable& tab, std::array<int, 3> d) {
  return tab.order - d[0] - d[1] - d[2];
}

// Network slots, or closed-form solution slots when exact_field is set.
std::vector<int> add_field(TapeBuilder& b, const JetTable& tab, const VarMap& vm,
                           const Problem& prob, bool exact_field,
                           const std::vector<InputSpec>& extra = {}) {
  if (!exact_field) {
    auto specs = plain_specs(vm, prob.jet_vars());
    specs.insert(specs.end(), extra.begin(), extra.end());
    return b.add_network(b.add_inputs(specs));
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(prob.net_output_count()));
  for (int c = 0; c < prob.net_output_count(); ++c)
    out.push_back(b.add_fn(make_data_fn(tab, vm, exact_trace(prob, c))));
  return out;
}

// One quadrature-defect addition coef * S^p * M^(-mexp); zero numerators
// short-circuit so synthetic inputs without sample counts stay usable.
double quad_piece(double coef, double S_pow_p, double M, double mexp) {
  const double num = coef * S_pow_p;
  if (num == 0) return 0.0;
  if (!(M > 0))
    throw std::invalid_argument(
        "certificate assembly: positive sample count required for a quadrature term");
  return num * std::pow(M, -mexp);
}

double inv_pow(double M, double mexp) {
  if (!(M > 0))
    throw std::invalid_argument(
        "certificate assembly: positive sample count required for a trend term");
  return std::pow(M, -mexp);
}

// Plain sum of contributions with the same required-name discipline the
// growth-wrapped assemblies use.
BoundBreakdown sum_bound(std::vector<PoweredTerm> terms,
                         const std::vector<std::string>& required) {
  for (const auto& name : required) {
    bool found = false;
    for (const auto& t : terms) found = found || t.name == name;
    if (!found)
      throw std::invalid_argument("bound assembly: missing term '" + name + "'");
  }
  BoundBreakdown b;
  b.terms = std::move(terms);
  b.aggregate = 0;
  for (const auto& t : b.terms) b.aggregate += t.value();
  b.factor = 1;
  b.value = b.aggregate;
  return b;
}

}  // namespace

const KindData& CertificateInputs::at(ResidualKind k) const {
  const auto& kd = kind[static_cast<int>(k)];
  if (!kd.present)
    throw std::invalid_argument(std::string("certificate assembly: no measurements for kind '") +
                                residual_kind_name(k) + "'");
  return kd;
}

double CertificateInputs::sup(const std::string& name) const {
  auto it = sups.find(name);
  if (it == sups.end())
    throw std::invalid_argument("certificate assembly: missing sup '" + name + "'");
  return it->second;
}

void Problem::net_inputs_from_point(const double* pt, double* in) const {
  for (int v = 0; v < jet_vars(); ++v) in[v] = pt[v];
}

void Problem::require_inside(const double* pt) const {
  const Box box = domain();
  for (int j = 0; j < box.dim; ++j) {
    const double tol = 1e-9 * (1.0 + std::fabs(box.lo[j]) + std::fabs(box.hi[j]));
    if (pt[j] < box.lo[j] - tol || pt[j] > box.hi[j] + tol)
      throw std::domain_error(std::string(name()) + ": point outside the domain");
  }
}

std::vector<ResSupRequest> Problem::res_sup_requests() const {
  std::vector<ResSupRequest> reqs;
  for (const auto& ks : kinds())
    reqs.push_back({std::string(residual_kind_name(ks.kind)) + "_c2", ks.kind, -1, 2});
  return reqs;
}

const KindSpec* Problem::find_kind(ResidualKind k) const {
  for (const auto& ks : kinds())
    if (ks.kind == k) return &ks;
  return nullptr;
}

int Problem::required_order(ResidualKind k) const {
  const KindSpec* ks = find_kind(k);
  if (!ks)
    throw std::invalid_argument(std::string(name()) + ": no residual family '" +
                                residual_kind_name(k) + "'");
  return ks->train_order;
}

// ---------------------------------------------------------------------------
// Heat: d_t u = d_x(phi1 d_x u) on (1,2), phi1 = x^2 sin t, homogeneous
// Dirichlet walls, u0 = sin(pi ln x / ln 2) / sqrt(x).

class HeatProblem final : public Problem {
 public:
  HeatProblem() {
    c_ = kPi / std::log(2.0);
    kappa_ = c_ * c_ + 0.25;
    phi1_gamma_ = std::max(kA * kA, kB * kB) *
                  sup1d(0, kT, [](double t) { return std::abs(std::sin(t)); });
    const auto u0p = [this](double x) {
      const double lx = std::log(x);
      return (c_ * std::cos(c_ * lx) - 0.5 * std::sin(c_ * lx)) * std::pow(x, -1.5);
    };
    dux_gamma_exact_ = std::max(std::abs(u0p(kA)), std::abs(u0p(kB)));
    kinds_ = {
        {ResidualKind::eq, 2, {{Box{2, {0, kA, 0}, {kT, kB, 0}}, 1}}},
        {ResidualKind::in, 0, {{Box{1, {kA, 0, 0}, {kB, 0, 0}}, 1}}},
        {ResidualKind::bn, 0, {{Box{1, {0, 0, 0}, {kT, 0, 0}}, 2}}},
    };
  }

  ProblemId id() const override { return ProblemId::heat; }
  const char* name() const override { return "heat"; }
  int jet_vars() const override { return 2; }
  int net_input_count() const override { return 2; }
  int net_output_count() const override { return 1; }
  Box domain() const override { return {2, {0, kA, 0}, {kT, kB, 0}}; }
  double time_horizon() const override { return kT; }
  void validate_p(double p) const override {
    if (!(p >= 2)) throw std::domain_error("heat: needs p >= 2");
  }
  const std::vector<KindSpec>& kinds() const override { return kinds_; }

  std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                          const MlpParams& proto,
                                          bool exact_field) const override {
    const JetTable& tab = JetTable::get(2, order);
    TapeBuilder b(tab, proto);
    switch (kind) {
      case ResidualKind::eq: {
        const VarMap vm{{0, 1, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int phi1 = b.add_fn(make_data_fn(
            tab, vm, [](const JetTable& t, const std::array<double, 3>& pt) {
              const Jet tt = Jet::variable(t, pt, 0);
              const Jet xx = Jet::variable(t, pt, 1);
              return (xx * xx) * sin(tt);
            }));
        const int flux = b.shift(b.mul(phi1, b.shift(u[0], 1)), 1);
        b.emit(ResidualKind::eq, b.sub(b.shift(u[0], 0), flux));
        break;
      }
      case ResidualKind::in: {
        const VarMap vm{{-1, 0, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(make_data_fn(tab, vm, exact_trace(*this, 0)));
        b.emit(ResidualKind::in, b.sub(u[0], data));
        break;
      }
      case ResidualKind::bn: {
        for (const double face : {kA, kB}) {
          const VarMap vm{{0, -1, -1}, {0, face, 0}};
          const auto u = add_field(b, tab, vm, *this, exact_field);
          b.emit(ResidualKind::bn, u[0]);
        }
        break;
      }
      default:
        throw std::invalid_argument("heat: no residual family of that kind");
    }
    std::vector<TapeProgram> progs;
    progs.push_back(b.build());
    return progs;
  }

  void exact_values(const double* pt, double* out) const override {
    require_inside(pt);
    out[0] = u0(pt[1]) * std::exp(kappa_ * (std::cos(pt[0]) - 1.0));
  }

  Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt, int) const override {
    require_inside(pt.data());
    const Jet tt = Jet::variable(tab, pt, 0);
    const Jet xx = Jet::variable(tab, pt, 1);
    return sin(c_ * log(xx)) * pow(xx, -0.5) * exp(kappa_ * (cos(tt) - 1.0));
  }

  std::vector<NetSupRequest> net_sup_requests() const override {
    std::vector<NetSupRequest> reqs;
    for (const double face : {kA, kB}) {
      NetSupRequest r;
      r.name = "net_dx_gamma";
      r.grid_box = {1, {0, 0, 0}, {kT, 0, 0}};
      r.counts = {513, 1, 1};
      r.inputs = {{0, 0, 0, false}, {-1, face, 1, false}};
      r.deriv = {0, 1, 0};
      reqs.push_back(std::move(r));
    }
    return reqs;
  }

  Certificates assemble_certificates(const CertificateInputs& in) const override {
    const double p = in.p, q = in.q, T = kT, L = kB - kA;
    const auto& eq = in.at(ResidualKind::eq);
    const auto& ini = in.at(ResidualKind::in);
    const auto& bn = in.at(ResidualKind::bn);
    const double D = std::max(dux_gamma_exact_, in.sup("net_dx_gamma"));
    const double bn_coef = 2.0 * p * std::pow(2.0 * T, 1.0 / p) * phi1_gamma_ * D;
    const double Seq = in.sup("eq_c2"), Sin = in.sup("in_c2"), Sbn = in.sup("bn_c2");
    const std::vector<std::string> req{"r_eq", "r_in", "r_bn"};

    const std::vector<PoweredTerm> ex{
        {"r_eq", 1.0, eq.Ee + eq.quad_err, 1.0},
        {"r_in", 1.0, ini.Ee + ini.quad_err, 1.0},
        {"r_bn", bn_coef, bn.Ee + bn.quad_err, (p - 1.0) / p},
    };
    const std::vector<PoweredTerm> tr{
        {"r_eq", 1.0,
         eq.Et + quad_piece(p * p * L * T / 24.0 * (L * L + T * T), std::pow(Seq, p), eq.M, 1.0),
         1.0},
        {"r_in", 1.0,
         ini.Et + quad_piece(p * p * L * L * L / 24.0, std::pow(Sin, p), ini.M, 2.0), 1.0},
        {"r_bn", bn_coef,
         bn.Et + quad_piece(p * p * T * T * T / 12.0, std::pow(Sbn, p), bn.M, 2.0),
         (p - 1.0) / p},
    };

    Certificates c;
    c.exact_detail = parabolic_bound(ex, req, p, q, T, 0.0);
    c.training_detail = parabolic_bound(tr, req, p, q, T, 0.0);
    c.E_exact = c.exact_detail.value;
    c.E_training = c.training_detail.value;
    c.E_asymp = asymptotic_bound({
        {"eq", 1.0, eq.Et + inv_pow(eq.M, 1.0), 1.0},
        {"in", 1.0, ini.Et + inv_pow(ini.M, 2.0), 1.0},
        {"bn", 1.0, bn.Et + inv_pow(bn.M, 2.0), (p - 1.0) / p},
    });
    return c;
  }

 private:
  double u0(double x) const {
    return std::sin(c_ * std::log(x)) / std::sqrt(x);
  }

  static constexpr double kA = 1, kB = 2, kT = 1;
  double c_ = 0, kappa_ = 0;
  double phi1_gamma_ = 0, dux_gamma_exact_ = 0;
  std::vector<KindSpec> kinds_;
};

// ---------------------------------------------------------------------------
// KdV: d_t u = 6 u d_x u - d_x^3 u on (-1,1), soliton data, Dirichlet values
// on both walls plus the slope on the right wall.

class KdvProblem final : public Problem {
 public:
  KdvProblem() {
    const auto dux = [](double z) {
      const double s = 1.0 / std::cosh(z);
      return std::abs(0.5 * std::tanh(z) * s * s);
    };
    const auto uval = [](double z) {
      const double s = 1.0 / std::cosh(z);
      return std::abs(0.5 * s * s);
    };
    const auto uxx = [](double z) {
      const double s2 = 1.0 / (std::cosh(z) * std::cosh(z));
      return std::abs(0.25 * s2 * (3.0 * s2 - 2.0));
    };
    dux_wrap_ = sup1d((kA - kT) / 2, kB / 2, dux);
    const double za0 = (kA - kT) / 2, za1 = kA / 2;  // z on the left wall
    const double zb0 = (kB - kT) / 2, zb1 = kB / 2;  // z on the right wall
    mu_exact_ = std::max({sup1d(za0, za1, uval), sup1d(zb0, zb1, uval),
                          sup1d(za0, za1, uxx), sup1d(zb0, zb1, uxx)});
    kinds_ = {
        {ResidualKind::eq, 3, {{Box{2, {0, kA, 0}, {kT, kB, 0}}, 1}}},
        {ResidualKind::in, 0, {{Box{1, {kA, 0, 0}, {kB, 0, 0}}, 1}}},
        {ResidualKind::bn, 1, {{Box{1, {0, 0, 0}, {kT, 0, 0}}, 3}}},
    };
  }

  ProblemId id() const override { return ProblemId::kdv; }
  const char* name() const override { return "kdv"; }
  int jet_vars() const override { return 2; }
  int net_input_count() const override { return 2; }
  int net_output_count() const override { return 1; }
  Box domain() const override { return {2, {0, kA, 0}, {kT, kB, 0}}; }
  double time_horizon() const override { return kT; }
  void validate_p(double p) const override {
    if (!(p == 2 || p > 3)) throw std::domain_error("kdv: needs p = 2 or p > 3");
  }
  const std::vector<KindSpec>& kinds() const override { return kinds_; }

  std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                          const MlpParams& proto,
                                          bool exact_field) const override {
    const JetTable& tab = JetTable::get(2, order);
    TapeBuilder b(tab, proto);
    switch (kind) {
      case ResidualKind::eq: {
        const VarMap vm{{0, 1, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int ut = b.shift(u[0], 0);
        const int uux = b.scale(b.mul(u[0], b.shift(u[0], 1)), 6.0);
        const int uxxx = b.shift(b.shift(b.shift(u[0], 1), 1), 1);
        b.emit(ResidualKind::eq, b.add(b.sub(ut, uux), uxxx));
        break;
      }
      case ResidualKind::in: {
        const VarMap vm{{-1, 0, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(make_data_fn(tab, vm, exact_trace(*this, 0)));
        b.emit(ResidualKind::in, b.sub(u[0], data));
        break;
      }
      case ResidualKind::bn: {
        const VarMap vma{{0, -1, -1}, {0, kA, 0}};
        const auto ua = add_field(b, tab, vma, *this, exact_field);
        b.emit(ResidualKind::bn,
               b.sub(ua[0], b.add_fn(make_data_fn(tab, vma, exact_trace(*this, 0)))));
        const VarMap vmb{{0, -1, -1}, {0, kB, 0}};
        const auto ub = add_field(b, tab, vmb, *this, exact_field);
        b.emit(ResidualKind::bn,
               b.sub(ub[0], b.add_fn(make_data_fn(tab, vmb, exact_trace(*this, 0)))));
        const int slope_data = b.add_fn(
            make_data_fn(tab, vmb, exact_trace(*this, 0, {0, 1, 0})), order - 1);
        b.emit(ResidualKind::bn, b.sub(b.shift(ub[0], 1), slope_data));
        break;
      }
      default:
        throw std::invalid_argument("kdv: no residual family of that kind");
    }
    std::vector<TapeProgram> progs;
    progs.push_back(b.build());
    return progs;
  }

  void exact_values(const double* pt, double* out) const override {
    require_inside(pt);
    const double th = std::tanh((pt[1] - pt[0]) / 2);
    out[0] = 0.5 * (th * th - 1.0);
  }

  Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt, int) const override {
    require_inside(pt.data());
    const Jet z = 0.5 * (Jet::variable(tab, pt, 1) - Jet::variable(tab, pt, 0));
    const Jet th = tanh(z);
    return 0.5 * (th * th - 1.0);
  }

  std::vector<NetSupRequest> net_sup_requests() const override {
    std::vector<NetSupRequest> reqs;
    for (const double face : {kA, kB}) {
      NetSupRequest v;
      v.name = "net_u_gamma";
      v.grid_box = {1, {0, 0, 0}, {kT, 0, 0}};
      v.counts = {513, 1, 1};
      v.inputs = {{0, 0, 0, false}, {-1, face, 1, false}};
      v.deriv = {0, 0, 0};
      reqs.push_back(v);
      v.name = "net_dxx_gamma";
      v.deriv = {0, 2, 0};
      reqs.push_back(std::move(v));
    }
    return reqs;
  }

  Certificates assemble_certificates(const CertificateInputs& in) const override {
    const double p = in.p, q = in.q, T = kT, L = kB - kA;
    const auto& eq = in.at(ResidualKind::eq);
    const auto& ini = in.at(ResidualKind::in);
    const auto& bn = in.at(ResidualKind::bn);
    const double mu =
        std::max({mu_exact_, in.sup("net_u_gamma"), in.sup("net_dxx_gamma")});
    const double lam = std::max(
        6.0 * (1.0 + 1.0 / p) * dux_wrap_ -
            27.0 * (p - 1.0) * (p - 2.0) / (4.0 * p * p * p * L * L * L),
        0.0);
    const double B1 = std::pow(2.0 * T, 1.0 / p) * mu * p;
    const double B2 = 6.0 * mu * (2.0 * p + 1.0) / (p + 1.0) +
                      std::max((p - 1.0) * (p - 2.0) / 2.0, p - 1.0) +
                      27.0 * (p - 1.0) * (p - 2.0) / (2.0 * p * p * L * L);
    const double Seq = in.sup("eq_c2"), Sin = in.sup("in_c2"), Sbn = in.sup("bn_c2");
    const std::vector<std::string> req{"r_eq", "r_in", "r_bn", "r_bn_tr"};

    const std::vector<PoweredTerm> ex{
        {"r_eq", 1.0, eq.Ee + eq.quad_err, 1.0},
        {"r_in", 1.0, ini.Ee + ini.quad_err, 1.0},
        {"r_bn_tr", B1, bn.Ee + bn.quad_err, (p - 1.0) / p},
        {"r_bn", B2, bn.Ee + bn.quad_err, 1.0},
    };
    const double qc_eq =
        quad_piece(p * p * L * T / 24.0 * (L * L + T * T), std::pow(Seq, p), eq.M, 1.0);
    const double qc_in = quad_piece(p * p * L * L * L / 24.0, std::pow(Sin, p), ini.M, 2.0);
    const double qc_bn = quad_piece(p * p * std::pow(3.0, p) * L * L * L / 24.0,
                                    std::pow(Sbn, p), bn.M, 2.0);
    const std::vector<PoweredTerm> tr{
        {"r_eq", 1.0, eq.Et + qc_eq, 1.0},
        {"r_in", 1.0, ini.Et + qc_in, 1.0},
        {"r_bn_tr", B1, bn.Et + qc_bn, (p - 1.0) / p},
        {"r_bn", B2, bn.Et + qc_bn, 1.0},
    };

    Certificates c;
    c.exact_detail = parabolic_bound(ex, req, p, q, T, T * lam);
    c.training_detail = parabolic_bound(tr, req, p, q, T, T * lam);
    c.E_exact = c.exact_detail.value;
    c.E_training = c.training_detail.value;
    c.E_asymp = asymptotic_bound({
        {"eq", 1.0, eq.Et + inv_pow(eq.M, 1.0), 1.0},
        {"in", 1.0, ini.Et + inv_pow(ini.M, 2.0), 1.0},
        {"bn", 1.0, bn.Et + inv_pow(bn.M, 2.0), (p - 1.0) / p},
    });
    return c;
  }

 private:
  static constexpr double kA = -1, kB = 1, kT = 1;
  double dux_wrap_ = 0, mu_exact_ = 0;
  std::vector<KindSpec> kinds_;
};

// ---------------------------------------------------------------------------
// Maxwell: eps1 d_t u1 = d_1 u3 - d_2 u2, eps2 d_t u2 = -d_2 u1,
// eps2 d_t u3 = d_1 u1 on the unit square, u1 pinned to zero on all walls.

class MaxwellProblem final : public Problem {
 public:
  MaxwellProblem() {
    amp_ = std::sqrt(kEps1 / (2.0 * kEps2));
    omega_ = kPi * std::sqrt(2.0 / (kEps1 * kEps2));
    const double st =
        sup1d(0, kT, [this](double t) { return std::abs(std::sin(omega_ * t)); });
    u2_gamma_exact_ = amp_ * st;
    u3_gamma_exact_ = amp_ * st;
    kinds_ = {
        {ResidualKind::eq, 1, {{Box{3, {0, 0, 0}, {kT, 1, 1}}, 3}}},
        {ResidualKind::in, 0, {{Box{2, {0, 0, 0}, {1, 1, 0}}, 3}}},
        {ResidualKind::bn,
         0,
         {{Box{2, {0, 0, 0}, {kT, 1, 0}}, 1},
          {Box{2, {0, 0, 0}, {kT, 1, 0}}, 1},
          {Box{2, {0, 0, 0}, {kT, 1, 0}}, 1},
          {Box{2, {0, 0, 0}, {kT, 1, 0}}, 1}}},
    };
  }

  ProblemId id() const override { return ProblemId::maxwell; }
  const char* name() const override { return "maxwell"; }
  int jet_vars() const override { return 3; }
  int net_input_count() const override { return 3; }
  int net_output_count() const override { return 3; }
  Box domain() const override { return {3, {0, 0, 0}, {kT, 1, 1}}; }
  double time_horizon() const override { return kT; }
  void validate_p(double p) const override {
    if (p != 2) throw std::domain_error("maxwell: needs p = 2");
  }
  const std::vector<KindSpec>& kinds() const override { return kinds_; }

  std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                          const MlpParams& proto,
                                          bool exact_field) const override {
    const JetTable& tab = JetTable::get(3, order);
    std::vector<TapeProgram> progs;
    switch (kind) {
      case ResidualKind::eq: {
        TapeBuilder b(tab, proto);
        const VarMap vm{{0, 1, 2}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        b.emit(ResidualKind::eq,
               b.add(b.sub(b.scale(b.shift(u[0], 0), kEps1), b.shift(u[2], 1)),
                     b.shift(u[1], 2)));
        b.emit(ResidualKind::eq,
               b.add(b.scale(b.shift(u[1], 0), kEps2), b.shift(u[0], 2)));
        b.emit(ResidualKind::eq,
               b.sub(b.scale(b.shift(u[2], 0), kEps2), b.shift(u[0], 1)));
        progs.push_back(b.build());
        break;
      }
      case ResidualKind::in: {
        TapeBuilder b(tab, proto);
        const VarMap vm{{-1, 0, 1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(make_data_fn(tab, vm, exact_trace(*this, 0)));
        b.emit(ResidualKind::in, b.sub(u[0], data));
        b.emit(ResidualKind::in, u[1]);
        b.emit(ResidualKind::in, u[2]);
        progs.push_back(b.build());
        break;
      }
      case ResidualKind::bn: {
        // Four wall programs over (t, tangential coordinate); u1 vanishes.
        for (const int wall_axis : {1, 2}) {
          for (const double face : {0.0, 1.0}) {
            TapeBuilder b(tab, proto);
            VarMap vm;
            vm.grid_axis = {0, -1, -1};
            vm.fixed = {0, 0, 0};
            vm.grid_axis[wall_axis] = -1;
            vm.fixed[wall_axis] = face;
            vm.grid_axis[wall_axis == 1 ? 2 : 1] = 1;
            const auto u = add_field(b, tab, vm, *this, exact_field);
            b.emit(ResidualKind::bn, u[0]);
            progs.push_back(b.build());
          }
        }
        break;
      }
      default:
        throw std::invalid_argument("maxwell: no residual family of that kind");
    }
    return progs;
  }

  void exact_values(const double* pt, double* out) const override {
    require_inside(pt);
    const double s1 = std::sin(kPi * pt[1]), c1 = std::cos(kPi * pt[1]);
    const double s2 = std::sin(kPi * pt[2]), c2 = std::cos(kPi * pt[2]);
    out[0] = s1 * s2 * std::cos(omega_ * pt[0]);
    out[1] = -amp_ * s1 * c2 * std::sin(omega_ * pt[0]);
    out[2] = amp_ * c1 * s2 * std::sin(omega_ * pt[0]);
  }

  Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt, int comp) const override {
    require_inside(pt.data());
    const Jet t = Jet::variable(tab, pt, 0);
    const Jet x1 = Jet::variable(tab, pt, 1);
    const Jet x2 = Jet::variable(tab, pt, 2);
    switch (comp) {
      case 0:
        return sin(kPi * x1) * sin(kPi * x2) * cos(omega_ * t);
      case 1:
        return -amp_ * (sin(kPi * x1) * cos(kPi * x2) * sin(omega_ * t));
      default:
        return amp_ * (cos(kPi * x1) * sin(kPi * x2) * sin(omega_ * t));
    }
  }

  std::vector<NetSupRequest> net_sup_requests() const override {
    std::vector<NetSupRequest> reqs;
    for (const double face : {0.0, 1.0}) {
      NetSupRequest r2;
      r2.name = "net_u2_g2";
      r2.grid_box = {2, {0, 0, 0}, {kT, 1, 0}};
      r2.counts = {129, 129, 1};
      r2.inputs = {{0, 0, 0, false}, {1, 0, 1, false}, {-1, face, 2, false}};
      r2.out_comp = 1;
      reqs.push_back(std::move(r2));
      NetSupRequest r3;
      r3.name = "net_u3_g1";
      r3.grid_box = {2, {0, 0, 0}, {kT, 1, 0}};
      r3.counts = {129, 129, 1};
      r3.inputs = {{0, 0, 0, false}, {-1, face, 1, false}, {1, 0, 2, false}};
      r3.out_comp = 2;
      reqs.push_back(std::move(r3));
    }
    return reqs;
  }

  Certificates assemble_certificates(const CertificateInputs& in) const override {
    const double T = kT, L1 = 1, L2 = 1;
    const double mineps = std::min(kEps1, kEps2), maxeps = std::max(kEps1, kEps2);
    const auto& eq = in.at(ResidualKind::eq);
    const auto& ini = in.at(ResidualKind::in);
    const auto& bn = in.at(ResidualKind::bn);
    const double mu =
        std::max(std::sqrt(L1) * std::max(u2_gamma_exact_, in.sup("net_u2_g2")),
                 std::sqrt(L2) * std::max(u3_gamma_exact_, in.sup("net_u3_g1")));
    const double bn_coef = 8.0 * std::sqrt(T) * mu;
    const double Seq = in.sup("eq_c2"), Sin = in.sup("in_c2"), Sbn = in.sup("bn_c2");
    const std::vector<std::string> req{"r_eq", "r_in", "r_bn"};

    const std::vector<PoweredTerm> ex{
        {"r_eq", 1.0, eq.Ee + eq.quad_err, 1.0},
        {"r_in", maxeps, ini.Ee + ini.quad_err, 1.0},
        {"r_bn", bn_coef, bn.Ee + bn.quad_err, 0.5},
    };
    const std::vector<PoweredTerm> tr{
        {"r_eq", 1.0,
         eq.Et + quad_piece(T * L2 * L1 / 2.0 * (T * T + L1 * L1 + L2 * L2), Seq * Seq,
                            eq.M, 2.0 / 3.0),
         1.0},
        {"r_in", 1.0,
         maxeps * ini.Et +
             quad_piece(L2 * L1 / 2.0 * (L1 * L1 + L2 * L2), Sin * Sin, ini.M, 1.0),
         1.0},
        {"r_bn", bn_coef,
         bn.Et + quad_piece(T * L2 / 3.0 * (T * T + L2 * L2) +
                                T * L1 / 3.0 * (T * T + L1 * L1),
                            Sbn * Sbn, bn.M, 1.0),
         0.5},
    };

    Certificates c;
    c.exact_detail = genpar_bound(ex, req, 1.0 / mineps, 2.0, T, 0.0);
    c.training_detail = genpar_bound(tr, req, 1.0 / mineps, 2.0, T, 0.0);
    c.E_exact = c.exact_detail.value;
    c.E_training = c.training_detail.value;
    c.E_asymp = asymptotic_bound({
        {"eq", 1.0, eq.Et + inv_pow(eq.M, 2.0 / 3.0), 1.0},
        {"in", 1.0, ini.Et + inv_pow(ini.M, 1.0), 1.0},
        {"bn", 1.0, bn.Et + inv_pow(bn.M, 1.0), 0.5},
    });
    return c;
  }

 private:
  static constexpr double kT = 1, kEps1 = 2, kEps2 = 3;
  double amp_ = 0, omega_ = 0;
  double u2_gamma_exact_ = 0, u3_gamma_exact_ = 0;
  std::vector<KindSpec> kinds_;
};

// ---------------------------------------------------------------------------
// Boussinesq: d_t^2 u = d_x^2 u - d_x^4 u - d_x^2(u^2) on (-1,1), traveling
// sech^2 pulse, wall data on d_x^2 u and d_t u.

class BoussinesqProblem final : public Problem {
 public:
  BoussinesqProblem() {
    const double xi_lo = kA - kC * kT, xi_hi = kB;
    u_c2_exact_ = std::max({sup1d(xi_lo, xi_hi, [this](double x) { return std::abs(f0(x)); }),
                            sup1d(xi_lo, xi_hi, [this](double x) { return std::abs(f1(x)); }),
                            sup1d(xi_lo, xi_hi, [this](double x) { return std::abs(f2(x)); })});
    const double a0 = kA - kC * kT, a1 = kA;  // pulse coordinate on the left wall
    const double b0 = kB - kC * kT, b1 = kB;  // and on the right wall
    const auto wall_sup = [&](const std::function<double(double)>& g) {
      return std::max(sup1d(a0, a1, g), sup1d(b0, b1, g));
    };
    dtdx_gamma_exact_ = kC * wall_sup([this](double x) { return std::abs(f2(x)); });
    dx_gamma_exact_ = wall_sup([this](double x) { return std::abs(f1(x)); });
    d3x_gamma_exact_ = wall_sup([this](double x) { return std::abs(f3(x)); });
    kinds_ = {
        {ResidualKind::eq, 4, {{Box{2, {0, kA, 0}, {kT, kB, 0}}, 1}}},
        {ResidualKind::in, 2, {{Box{1, {kA, 0, 0}, {kB, 0, 0}}, 3}}},
        {ResidualKind::in_t, 1, {{Box{1, {kA, 0, 0}, {kB, 0, 0}}, 1}}},
        {ResidualKind::bn, 2, {{Box{1, {0, 0, 0}, {kT, 0, 0}}, 2}}},
        {ResidualKind::bn_t, 1, {{Box{1, {0, 0, 0}, {kT, 0, 0}}, 2}}},
    };
  }

  ProblemId id() const override { return ProblemId::boussinesq; }
  const char* name() const override { return "boussinesq"; }
  int jet_vars() const override { return 2; }
  int net_input_count() const override { return 2; }
  int net_output_count() const override { return 1; }
  Box domain() const override { return {2, {0, kA, 0}, {kT, kB, 0}}; }
  double time_horizon() const override { return kT; }
  void validate_p(double p) const override {
    if (p != 2) throw std::domain_error("boussinesq: needs p = 2");
  }
  const std::vector<KindSpec>& kinds() const override { return kinds_; }

  std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                          const MlpParams& proto,
                                          bool exact_field) const override {
    const JetTable& tab = JetTable::get(2, order);
    TapeBuilder b(tab, proto);
    switch (kind) {
      case ResidualKind::eq: {
        const VarMap vm{{0, 1, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int utt = b.shift(b.shift(u[0], 0), 0);
        const int uxx = b.shift(b.shift(u[0], 1), 1);
        const int uxxxx = b.shift(b.shift(uxx, 1), 1);
        const int d2u2 = b.shift(b.shift(b.mul(u[0], u[0]), 1), 1);
        b.emit(ResidualKind::eq, b.add(b.add(b.sub(utt, uxx), uxxxx), d2u2));
        break;
      }
      case ResidualKind::in: {
        const VarMap vm{{-1, 0, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(make_data_fn(tab, vm, exact_trace(*this, 0)));
        const int r = b.sub(u[0], data);
        b.emit(ResidualKind::in, r);
        const int rx = b.shift(r, 1);
        b.emit(ResidualKind::in, rx);
        b.emit(ResidualKind::in, b.shift(rx, 1));
        break;
      }
      case ResidualKind::in_t: {
        const VarMap vm{{-1, 0, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(
            make_data_fn(tab, vm, exact_trace(*this, 0, {1, 0, 0})), order - 1);
        b.emit(ResidualKind::in_t, b.sub(b.shift(u[0], 0), data));
        break;
      }
      case ResidualKind::bn: {
        for (const double face : {kA, kB}) {
          const VarMap vm{{0, -1, -1}, {0, face, 0}};
          const auto u = add_field(b, tab, vm, *this, exact_field);
          const int data = b.add_fn(
              make_data_fn(tab, vm, exact_trace(*this, 0, {0, 2, 0})), order - 2);
          b.emit(ResidualKind::bn, b.sub(b.shift(b.shift(u[0], 1), 1), data));
        }
        break;
      }
      case ResidualKind::bn_t: {
        for (const double face : {kA, kB}) {
          const VarMap vm{{0, -1, -1}, {0, face, 0}};
          const auto u = add_field(b, tab, vm, *this, exact_field);
          const int data = b.add_fn(
              make_data_fn(tab, vm, exact_trace(*this, 0, {1, 0, 0})), order - 1);
          b.emit(ResidualKind::bn_t, b.sub(b.shift(u[0], 0), data));
        }
        break;
      }
    }
    std::vector<TapeProgram> progs;
    progs.push_back(b.build());
    return progs;
  }

  void exact_values(const double* pt, double* out) const override {
    require_inside(pt);
    const double s = 1.0 / std::cosh(kBc * (pt[1] - kC * pt[0]));
    out[0] = kAmp * s * s;
  }

  Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt, int) const override {
    require_inside(pt.data());
    const Jet xi = Jet::variable(tab, pt, 1) - kC * Jet::variable(tab, pt, 0);
    return kAmp * sech2(kBc * xi);
  }

  std::vector<ResSupRequest> res_sup_requests() const override {
    auto reqs = Problem::res_sup_requests();
    reqs.push_back({"in_c4", ResidualKind::in, 0, 4});
    return reqs;
  }

  std::vector<NetSupRequest> net_sup_requests() const override {
    std::vector<NetSupRequest> reqs;
    NetSupRequest w;
    w.name = "net_u_c2";
    w.grid_box = {2, {0, kA, 0}, {kT, kB, 0}};
    w.counts = {129, 129, 1};
    w.inputs = {{0, 0, 0, false}, {1, 0, 1, false}};
    w.sup_order = 2;
    reqs.push_back(std::move(w));
    for (const double face : {kA, kB}) {
      NetSupRequest r;
      r.grid_box = {1, {0, 0, 0}, {kT, 0, 0}};
      r.counts = {513, 1, 1};
      r.inputs = {{0, 0, 0, false}, {-1, face, 1, false}};
      r.name = "net_dtdx_gamma";
      r.deriv = {1, 1, 0};
      reqs.push_back(r);
      r.name = "net_dx_gamma";
      r.deriv = {0, 1, 0};
      reqs.push_back(r);
      r.name = "net_d3x_gamma";
      r.deriv = {0, 3, 0};
      reqs.push_back(std::move(r));
    }
    return reqs;
  }

  Certificates assemble_certificates(const CertificateInputs& in) const override {
    const double T = kT, L = kB - kA;
    const auto& eq = in.at(ResidualKind::eq);
    const auto& ini = in.at(ResidualKind::in);
    const auto& int_ = in.at(ResidualKind::in_t);
    const auto& bn = in.at(ResidualKind::bn);
    const auto& bnt = in.at(ResidualKind::bn_t);
    const double W = std::max(u_c2_exact_, in.sup("net_u_c2"));
    const double Dtx = std::max(dtdx_gamma_exact_, in.sup("net_dtdx_gamma"));
    const double Dx3 = std::max({dx_gamma_exact_, d3x_gamma_exact_,
                                 in.sup("net_dx_gamma"), in.sup("net_d3x_gamma")});
    const double bn_coef = 4.0 * std::sqrt(2.0 * T) * Dtx;
    const double bnt_coef = 8.0 * std::sqrt(2.0 * T) * Dx3;
    const double Seq = in.sup("eq_c2"), Sin4 = in.sup("in_c4");
    const double Sint = in.sup("in_t_c2"), Sbn = in.sup("bn_c2"), Sbnt = in.sup("bn_t_c2");
    const std::vector<std::string> req{"r_eq", "r_in", "r_in_t", "r_bn", "r_bn_t"};

    const std::vector<PoweredTerm> ex{
        {"r_eq", 1.0, eq.Ee + eq.quad_err, 1.0},
        {"r_in", 1.0, ini.Ee + ini.quad_err, 1.0},
        {"r_in_t", 1.0, int_.Ee + int_.quad_err, 1.0},
        {"r_bn", bn_coef, bn.Ee + bn.quad_err, 0.5},
        {"r_bn_t", bnt_coef, bnt.Ee + bnt.quad_err, 0.5},
    };
    const std::vector<PoweredTerm> tr{
        {"r_eq", 1.0,
         eq.Et + quad_piece(L * T / 6.0 * (L * L + T * T), Seq * Seq, eq.M, 1.0), 1.0},
        {"r_in", 1.0, ini.Et + quad_piece(L * L * L / 2.0, Sin4 * Sin4, ini.M, 2.0), 1.0},
        {"r_in_t", 1.0, int_.Et + quad_piece(L * L * L / 6.0, Sint * Sint, int_.M, 2.0),
         1.0},
        {"r_bn", bn_coef, bn.Et + quad_piece(T * T * T / 3.0, Sbn * Sbn, bn.M, 2.0), 0.5},
        {"r_bn_t", bnt_coef,
         bnt.Et + quad_piece(T * T * T / 3.0, Sbnt * Sbnt, bnt.M, 2.0), 0.5},
    };

    Certificates c;
    c.exact_detail = hyperbolic_bound(ex, req, T, 18.0 * T * W * W, 0.0);
    c.training_detail = hyperbolic_bound(tr, req, T, 18.0 * T * W * W, 0.0);
    c.E_exact = c.exact_detail.value;
    c.E_training = c.training_detail.value;
    c.E_asymp = asymptotic_bound({
        {"eq", 1.0, eq.Et + inv_pow(eq.M, 1.0), 1.0},
        {"in", 1.0, ini.Et + inv_pow(ini.M, 2.0), 1.0},
        {"in_t", 1.0, int_.Et + inv_pow(int_.M, 2.0), 1.0},
        {"bn", 1.0, bn.Et + inv_pow(bn.M, 2.0), 0.5},
        {"bn_t", 1.0, bnt.Et + inv_pow(bnt.M, 2.0), 0.5},
    });
    return c;
  }

 private:
  // Pulse profile f(xi) = Amp sech^2(Bc xi) and its first three derivatives.
  double f0(double xi) const {
    const double s = 1.0 / std::cosh(kBc * xi);
    return kAmp * s * s;
  }
  double f1(double xi) const {
    const double s = 1.0 / std::cosh(kBc * xi);
    return -2.0 * kAmp * kBc * s * s * std::tanh(kBc * xi);
  }
  double f2(double xi) const {
    const double s2 = 1.0 / (std::cosh(kBc * xi) * std::cosh(kBc * xi));
    return 2.0 * kAmp * kBc * kBc * s2 * (2.0 - 3.0 * s2);
  }
  double f3(double xi) const {
    const double s2 = 1.0 / (std::cosh(kBc * xi) * std::cosh(kBc * xi));
    return 8.0 * kAmp * kBc * kBc * kBc * s2 * std::tanh(kBc * xi) * (3.0 * s2 - 1.0);
  }

  static constexpr double kA = -1, kB = 1, kT = 1;
  static constexpr double kAmp = 9.0 / 8.0, kC = 0.5;
  static inline const double kBc = std::sqrt(3.0) / 4.0;
  double u_c2_exact_ = 0, dtdx_gamma_exact_ = 0, dx_gamma_exact_ = 0, d3x_gamma_exact_ = 0;
  std::vector<KindSpec> kinds_;
};

// ---------------------------------------------------------------------------
// Rayleigh: d_t^2 u = d_x^2 u + eps (d_t u - (d_t u)^3) + phi on (0, 2pi)
// with periodic walls matched through slope and velocity differences.

class RayleighProblem final : public Problem {
 public:
  RayleighProblem() {
    const auto cost = [](double t) { return std::abs(std::cos(t)); };
    dt_gamma_exact_ = sup1d(0, kT, cost);  // both walls reduce to |cos t|
    dx_gamma_exact_ = sup1d(0, kT, cost);
    kinds_ = {
        {ResidualKind::eq, 2, {{Box{2, {0, kA, 0}, {kT, kB, 0}}, 1}}},
        {ResidualKind::in, 1, {{Box{1, {kA, 0, 0}, {kB, 0, 0}}, 2}}},
        {ResidualKind::in_t, 1, {{Box{1, {kA, 0, 0}, {kB, 0, 0}}, 1}}},
        {ResidualKind::bn, 1, {{Box{1, {0, 0, 0}, {kT, 0, 0}}, 1}}},
        {ResidualKind::bn_t, 1, {{Box{1, {0, 0, 0}, {kT, 0, 0}}, 1}}},
    };
  }

  ProblemId id() const override { return ProblemId::rayleigh; }
  const char* name() const override { return "rayleigh"; }
  int jet_vars() const override { return 2; }
  int net_input_count() const override { return 2; }
  int net_output_count() const override { return 1; }
  Box domain() const override { return {2, {0, kA, 0}, {kT, kB, 0}}; }
  double time_horizon() const override { return kT; }
  void validate_p(double p) const override {
    if (p != 2) throw std::domain_error("rayleigh: needs p = 2");
  }
  const std::vector<KindSpec>& kinds() const override { return kinds_; }

  std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                          const MlpParams& proto,
                                          bool exact_field) const override {
    const JetTable& tab = JetTable::get(2, order);
    TapeBuilder b(tab, proto);
    switch (kind) {
      case ResidualKind::eq: {
        const VarMap vm{{0, 1, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int ut = b.shift(u[0], 0);
        const int utt = b.shift(ut, 0);
        const int uxx = b.shift(b.shift(u[0], 1), 1);
        const int damp = b.sub(ut, b.mul(b.mul(ut, ut), ut));
        const int phi = b.add_fn(make_data_fn(
            tab, vm, [](const JetTable& t, const std::array<double, 3>& pt) {
              const Jet w = Jet::variable(t, pt, 1) - Jet::variable(t, pt, 0);
              return (0.5 * kEps) * (sin(w) * sin(2.0 * w));
            }));
        b.emit(ResidualKind::eq,
               b.sub(b.sub(b.sub(utt, uxx), b.scale(damp, kEps)), phi));
        break;
      }
      case ResidualKind::in: {
        const VarMap vm{{-1, 0, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(make_data_fn(tab, vm, exact_trace(*this, 0)));
        const int r = b.sub(u[0], data);
        b.emit(ResidualKind::in, r);
        b.emit(ResidualKind::in, b.shift(r, 1));
        break;
      }
      case ResidualKind::in_t: {
        const VarMap vm{{-1, 0, -1}, {0, 0, 0}};
        const auto u = add_field(b, tab, vm, *this, exact_field);
        const int data = b.add_fn(
            make_data_fn(tab, vm, exact_trace(*this, 0, {1, 0, 0})), order - 1);
        b.emit(ResidualKind::in_t, b.sub(b.shift(u[0], 0), data));
        break;
      }
      case ResidualKind::bn:
      case ResidualKind::bn_t: {
        const int axis = kind == ResidualKind::bn ? 1 : 0;
        const VarMap vma{{0, -1, -1}, {0, kA, 0}};
        const VarMap vmb{{0, -1, -1}, {0, kB, 0}};
        const auto ua = add_field(b, tab, vma, *this, exact_field);
        const auto ub = add_field(b, tab, vmb, *this, exact_field);
        b.emit(kind, b.sub(b.shift(ua[0], axis), b.shift(ub[0], axis)));
        break;
      }
    }
    std::vector<TapeProgram> progs;
    progs.push_back(b.build());
    return progs;
  }

  void exact_values(const double* pt, double* out) const override {
    require_inside(pt);
    out[0] = std::sin(pt[1] - pt[0]);
  }

  Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt, int) const override {
    require_inside(pt.data());
    return sin(Jet::variable(tab, pt, 1) - Jet::variable(tab, pt, 0));
  }

  std::vector<ResSupRequest> res_sup_requests() const override {
    auto reqs = Problem::res_sup_requests();
    reqs.push_back({"in_c3", ResidualKind::in, 0, 3});
    return reqs;
  }

  std::vector<NetSupRequest> net_sup_requests() const override {
    std::vector<NetSupRequest> reqs;
    for (const double face : {kA, kB}) {
      NetSupRequest r;
      r.grid_box = {1, {0, 0, 0}, {kT, 0, 0}};
      r.counts = {513, 1, 1};
      r.inputs = {{0, 0, 0, false}, {-1, face, 1, false}};
      r.name = "net_dt_gamma";
      r.deriv = {1, 0, 0};
      reqs.push_back(r);
      r.name = "net_dx_gamma";
      r.deriv = {0, 1, 0};
      reqs.push_back(std::move(r));
    }
    return reqs;
  }

  Certificates assemble_certificates(const CertificateInputs& in) const override {
    const double T = kT, L = kB - kA;
    const auto& eq = in.at(ResidualKind::eq);
    const auto& ini = in.at(ResidualKind::in);
    const auto& int_ = in.at(ResidualKind::in_t);
    const auto& bn = in.at(ResidualKind::bn);
    const auto& bnt = in.at(ResidualKind::bn_t);
    const double Dt = std::max(dt_gamma_exact_, in.sup("net_dt_gamma"));
    const double Dx = std::max(dx_gamma_exact_, in.sup("net_dx_gamma"));
    const double bn_coef = 4.0 * std::sqrt(T) * Dt;
    const double bnt_coef = 4.0 * std::sqrt(T) * Dx;
    const double Seq = in.sup("eq_c2"), Sin3 = in.sup("in_c3");
    const double Sint = in.sup("in_t_c2"), Sbn = in.sup("bn_c2"), Sbnt = in.sup("bn_t_c2");
    const std::vector<std::string> req{"r_eq", "r_in", "r_in_t", "r_bn", "r_bn_t"};

    const std::vector<PoweredTerm> ex{
        {"r_eq", 1.0, eq.Ee + eq.quad_err, 1.0},
        {"r_in", 1.0, ini.Ee + ini.quad_err, 1.0},
        {"r_in_t", 1.0, int_.Ee + int_.quad_err, 1.0},
        {"r_bn", bn_coef, bn.Ee + bn.quad_err, 0.5},
        {"r_bn_t", bnt_coef, bnt.Ee + bnt.quad_err, 0.5},
    };
    const std::vector<PoweredTerm> tr{
        {"r_eq", 1.0,
         eq.Et + quad_piece(L * T / 6.0 * (L * L + T * T), Seq * Seq, eq.M, 1.0), 1.0},
        {"r_in", 1.0, ini.Et + quad_piece(L * L * L / 3.0, Sin3 * Sin3, ini.M, 2.0), 1.0},
        {"r_in_t", 1.0, int_.Et + quad_piece(L * L * L / 6.0, Sint * Sint, int_.M, 2.0),
         1.0},
        {"r_bn", bn_coef, bn.Et + quad_piece(T * T * T / 6.0, Sbn * Sbn, bn.M, 2.0), 0.5},
        {"r_bn_t", bnt_coef,
         bnt.Et + quad_piece(T * T * T / 6.0, Sbnt * Sbnt, bnt.M, 2.0), 0.5},
    };

    Certificates c;
    c.exact_detail = hyperbolic_bound(ex, req, T, kEps * T, 0.0);
    c.training_detail = hyperbolic_bound(tr, req, T, kEps * T, 0.0);
    c.E_exact = c.exact_detail.value;
    c.E_training = c.training_detail.value;
    c.E_asymp = asymptotic_bound({
        {"eq", 1.0, eq.Et + inv_pow(eq.M, 1.0), 1.0},
        {"in", 1.0, ini.Et + inv_pow(ini.M, 2.0), 1.0},
        {"in_t", 1.0, int_.Et + inv_pow(int_.M, 2.0), 1.0},
        {"bn", 1.0, bn.Et + inv_pow(bn.M, 2.0), 0.5},
        {"bn_t", 1.0, bnt.Et + inv_pow(bnt.M, 2.0), 0.5},
    });
    return c;
  }

 private:
  static constexpr double kA = 0, kT = 1, kEps = 1;
  static inline const double kB = 2.0 * kPi;
  double dt_gamma_exact_ = 0, dx_gamma_exact_ = 0;
  std::vector<KindSpec> kinds_;
};

// ---------------------------------------------------------------------------
// Poisson: -lap y = 2 sgn(x1) + 2 sgn(x2) on (-1,1)^2 minus the axes,
// y = -|x1| x1 - |x2| x2, network fed (x1, x2, |x1|, |x2|).

class PoissonProblem final : public Problem {
 public:
  PoissonProblem() {
    kinds_ = {
        {ResidualKind::eq, 2, {{Box{2, {-1, -1, 0}, {1, 1, 0}}, 1}}},
        {ResidualKind::bn,
         0,
         {{Box{1, {-1, 0, 0}, {1, 0, 0}}, 1},
          {Box{1, {-1, 0, 0}, {1, 0, 0}}, 1},
          {Box{1, {-1, 0, 0}, {1, 0, 0}}, 1},
          {Box{1, {-1, 0, 0}, {1, 0, 0}}, 1}}},
    };
  }

  ProblemId id() const override { return ProblemId::poisson; }
  const char* name() const override { return "poisson"; }
  int jet_vars() const override { return 2; }
  int net_input_count() const override { return 4; }
  int net_output_count() const override { return 1; }
  Box domain() const override { return {2, {-1, -1, 0}, {1, 1, 0}}; }
  double time_horizon() const override { return 0; }
  void validate_p(double p) const override {
    if (!(p >= 2)) throw std::domain_error("poisson: needs p >= 2");
  }
  const std::vector<KindSpec>& kinds() const override { return kinds_; }

  std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                          const MlpParams& proto,
                                          bool exact_field) const override {
    const JetTable& tab = JetTable::get(2, order);
    std::vector<TapeProgram> progs;
    switch (kind) {
      case ResidualKind::eq: {
        TapeBuilder b(tab, proto);
        const VarMap vm{{0, 1, -1}, {0, 0, 0}};
        const auto y = add_field(b, tab, vm, *this, exact_field, abs_specs(vm));
        const int lap = b.add(b.shift(b.shift(y[0], 0), 0), b.shift(b.shift(y[0], 1), 1));
        const int phi = b.add_fn(make_data_fn(
            tab, vm, [](const JetTable& t, const std::array<double, 3>& pt) {
              const double v = 2.0 * ((pt[0] > 0) - (pt[0] < 0)) +
                               2.0 * ((pt[1] > 0) - (pt[1] < 0));
              return Jet::constant(t, pt, v);
            }));
        b.emit(ResidualKind::eq, b.sub(b.scale(lap, -1.0), phi));
        progs.push_back(b.build());
        break;
      }
      case ResidualKind::bn: {
        // Four segment programs: x1 = -1, x1 = 1, x2 = -1, x2 = 1.
        for (const int wall_var : {0, 1}) {
          for (const double face : {-1.0, 1.0}) {
            TapeBuilder b(tab, proto);
            VarMap vm;
            vm.grid_axis = {-1, -1, -1};
            vm.grid_axis[wall_var == 0 ? 1 : 0] = 0;
            vm.fixed[wall_var] = face;
            const auto y = add_field(b, tab, vm, *this, exact_field, abs_specs(vm));
            const int data = b.add_fn(make_data_fn(tab, vm, exact_trace(*this, 0)));
            b.emit(ResidualKind::bn, b.sub(y[0], data));
            progs.push_back(b.build());
          }
        }
        break;
      }
      default:
        throw std::invalid_argument("poisson: no residual family of that kind");
    }
    return progs;
  }

  void exact_values(const double* pt, double* out) const override {
    require_inside(pt);
    out[0] = -std::abs(pt[0]) * pt[0] - std::abs(pt[1]) * pt[1];
  }

  Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt, int) const override {
    require_inside(pt.data());
    const Jet x1 = Jet::variable(tab, pt, 0), a1 = Jet::abs_variable(tab, pt, 0);
    const Jet x2 = Jet::variable(tab, pt, 1), a2 = Jet::abs_variable(tab, pt, 1);
    return -1.0 * (a1 * x1) - a2 * x2;
  }

  void net_inputs_from_point(const double* pt, double* in) const override {
    in[0] = pt[0];
    in[1] = pt[1];
    in[2] = std::abs(pt[0]);
    in[3] = std::abs(pt[1]);
  }

  std::vector<NetSupRequest> net_sup_requests() const override {
    std::vector<NetSupRequest> reqs;
    for (const int axis : {0, 1}) {
      NetSupRequest r;
      r.name = "net_dy";
      r.grid_box = {2, {-1, -1, 0}, {1, 1, 0}};
      r.counts = {128, 128, 1};
      r.inputs = {{0, 0, 0, false}, {1, 0, 1, false}, {0, 0, 0, true}, {1, 0, 1, true}};
      r.deriv = {axis == 0 ? 1 : 0, axis == 1 ? 1 : 0, 0};
      r.open_grid = true;  // cell midpoints keep the probes off the axes
      reqs.push_back(std::move(r));
    }
    return reqs;
  }

  Certificates assemble_certificates(const CertificateInputs& in) const override {
    const double p = in.p;
    const double pi2 = in.pi_2_tr;
    const auto& eq = in.at(ResidualKind::eq);
    const auto& bn = in.at(ResidualKind::bn);
    const double Dy = std::max(2.0, in.sup("net_dy"));
    const double A_eq =
        std::pow(pi2, p) * std::pow(p, 2.0 * p) / (std::pow(2.0, p) * std::pow(p - 1.0, p));
    const double A_b1 = 2.0 * pi2 * p * std::pow(2.0, p - 1.0);
    const double A_b2 = 2.0 * pi2 * p *
                        std::pow(2.0, (p + 1.0) * std::pow(p - 1.0, 3.0) / (p * p * p) - 2.0) *
                        p / (p - 1.0) * Dy;
    const double Seq = in.sup("eq_c2"), Sbn = in.sup("bn_c2");
    const std::vector<std::string> req{"r_eq", "r_bn", "r_bn_tr"};

    const std::vector<PoweredTerm> ex{
        {"r_eq", A_eq, eq.Ee + eq.quad_err, 1.0},
        {"r_bn", A_b1, bn.Ee + bn.quad_err, 1.0},
        {"r_bn_tr", A_b2, bn.Ee + bn.quad_err, (p - 1.0) / p},
    };
    const double qc_eq = quad_piece(4.0 * p * p / 3.0, std::pow(Seq, p), eq.M, 1.0);
    const double qc_bn = quad_piece(4.0 * p * p / 3.0, std::pow(Sbn, p), bn.M, 2.0);
    const std::vector<PoweredTerm> tr{
        {"r_eq", A_eq, eq.Et + qc_eq, 1.0},
        {"r_bn", A_b1, bn.Et + qc_bn, 1.0},
        {"r_bn_tr", A_b2, bn.Et + qc_bn, (p - 1.0) / p},
    };

    Certificates c;
    c.exact_detail = sum_bound(ex, req);
    c.training_detail = sum_bound(tr, req);
    c.E_exact = c.exact_detail.value;
    c.E_training = c.training_detail.value;
    c.E_asymp = asymptotic_bound({
        {"eq", 1.0, eq.Et + inv_pow(eq.M, 1.0), 1.0},
        {"bn", 1.0, bn.Et + inv_pow(bn.M, 2.0), (p - 1.0) / p},
    });
    return c;
  }

 private:
  static std::vector<InputSpec> abs_specs(const VarMap& vm) {
    return {{vm.grid_axis[0], vm.fixed[0], 0, true}, {vm.grid_axis[1], vm.fixed[1], 1, true}};
  }

  std::vector<KindSpec> kinds_;
};

// ---------------------------------------------------------------------------

std::unique_ptr<Problem> Problem::make(ProblemId id) {
  switch (id) {
    case ProblemId::heat:
      return std::make_unique<HeatProblem>();
    case ProblemId::kdv:
      return std::make_unique<KdvProblem>();
    case ProblemId::maxwell:
      return std::make_unique<MaxwellProblem>();
    case ProblemId::boussinesq:
      return std::make_unique<BoussinesqProblem>();
    case ProblemId::rayleigh:
      return std::make_unique<RayleighProblem>();
    case ProblemId::poisson:
      return std::make_unique<PoissonProblem>();
  }
  throw std::invalid_argument("Problem::make: unknown id");
}

ProblemId Problem::parse_id(const std::string& name) {
  static const std::pair<const char*, ProblemId> table[] = {
      {"heat", ProblemId::heat},           {"kdv", ProblemId::kdv},
      {"maxwell", ProblemId::maxwell},     {"boussinesq", ProblemId::boussinesq},
      {"rayleigh", ProblemId::rayleigh},   {"poisson", ProblemId::poisson},
  };
  for (const auto& [n, id] : table)
    if (name == n) return id;
  throw std::invalid_argument(
      "unknown problem '" + name +
      "' (expected heat, kdv, maxwell, boussinesq, rayleigh, or poisson)");
}

const char* Problem::id_name(ProblemId id) {
  switch (id) {
    case ProblemId::heat:
      return "heat";
    case ProblemId::kdv:
      return "kdv";
    case ProblemId::maxwell:
      return "maxwell";
    case ProblemId::boussinesq:
      return "boussinesq";
    case ProblemId::rayleigh:
      return "rayleigh";
    case ProblemId::poisson:
      return "poisson";
  }
  return "?";
}

double eval_net_sup(const MlpParams& params, const NetSupRequest& req) {
  int nvars = 0;
  for (const auto& s : req.inputs) nvars = std::max(nvars, s.var_axis + 1);
  int order = std::max(req.sup_order, 0);
  order = std::max(order, req.deriv[0] + req.deriv[1] + req.deriv[2]);
  const JetTable& tab = JetTable::get(nvars, order);

  const auto probe = [&](const double* gpt) {
    std::array<double, 3> pt{0, 0, 0};
    for (const auto& s : req.inputs)
      pt[s.var_axis] = s.grid_axis >= 0 ? gpt[s.grid_axis] : s.fixed_value;
    std::vector<Jet> jin;
    jin.reserve(req.inputs.size());
    for (const auto& s : req.inputs)
      jin.push_back(s.abs ? Jet::abs_variable(tab, pt, s.var_axis)
                          : Jet::variable(tab, pt, s.var_axis));
    const auto out = mlp_forward_jets(params, jin);
    const Jet& y = out[static_cast<std::size_t>(req.out_comp)];
    if (req.sup_order >= 0) {
      double m = 0;
      for (int k = 0; k < tab.count_upto[req.sup_order]; ++k)
        m = std::max(m, std::abs(y.coeff(k) * tab.fact[k]));
      return m;
    }
    return std::abs(y.partial({req.deriv[0], req.deriv[1], req.deriv[2]}));
  };

  double best = 0;
  double gpt[3] = {0, 0, 0};
  if (req.open_grid) {
    const Grid g = midpoint_grid(req.grid_box, req.counts);
    for (std::size_t i = 0; i < g.total(); ++i) {
      g.point(i, gpt);
      best = std::max(best, probe(gpt));
    }
  } else {
    const ClosedGrid g{req.grid_box, req.counts};
    for (std::size_t i = 0; i < g.total(); ++i) {
      g.point(i, gpt);
      best = std::max(best, probe(gpt));
    }
  }
  return best;
}

void add_net_sups(std::map<std::string, double>& sups, const MlpParams& params,
                  const std::vector<NetSupRequest>& reqs) {
  for (const auto& r : reqs) {
    const double v = eval_net_sup(params, r);
    auto [it, fresh] = sups.try_emplace(r.name, v);
    if (!fresh) it->second = std::max(it->second, v);
  }
}

double true_error_fn(const Problem& prob,
                     const std::function<void(const double*, double*)>& field,
                     double p, const std::array<int, 3>& counts) {
  const Grid g = midpoint_grid(prob.domain(), counts);
  const int nc = prob.net_output_count();
  std::vector<double> fv(static_cast<std::size_t>(nc)), ev(static_cast<std::size_t>(nc));
  double pt[3] = {0, 0, 0};
  double acc = 0;
  for (std::size_t i = 0; i < g.total(); ++i) {
    g.point(i, pt);
    field(pt, fv.data());
    prob.exact_values(pt, ev.data());
    for (int c = 0; c < nc; ++c) acc += std::pow(std::abs(fv[c] - ev[c]), p);
  }
  return acc * g.cell_volume();
}

double true_error(const Problem& prob, const MlpParams& params, double p,
                  const std::array<int, 3>& counts) {
  std::vector<double> nin(static_cast<std::size_t>(prob.net_input_count()));
  return true_error_fn(
      prob,
      [&](const double* pt, double* out) {
        prob.net_inputs_from_point(pt, nin.data());
        mlp_forward(params, nin.data(), out);
      },
      p, counts);
}

}  // namespace pinncert
