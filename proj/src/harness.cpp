#include "pinncert/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "pinncert/consts.hpp"
#include "pinncert/kernels.hpp"

namespace fs = std::filesystem;

namespace pinncert {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double pow_abs(double v, double p) { return p == 2 ? v * v : std::pow(std::abs(v), p); }

// d|v|^p / dv
double dpow_abs(double v, double p) {
  if (p == 2) return 2 * v;
  if (v == 0) return 0;
  return p * std::pow(std::abs(v), p - 1) * (v > 0 ? 1.0 : -1.0);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double r = 0;
  try {
    r = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: value of '" + key + "' is not a number: " + v);
  }
  if (used != v.size())
    throw std::invalid_argument("config: value of '" + key + "' is not a number: " + v);
  return r;
}

long long parse_ll(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long r = 0;
  try {
    r = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: value of '" + key + "' is not an integer: " + v);
  }
  if (used != v.size())
    throw std::invalid_argument("config: value of '" + key + "' is not an integer: " + v);
  return r;
}

int parse_int(const std::string& key, const std::string& v) {
  const long long r = parse_ll(key, v);
  if (r < std::numeric_limits<int>::min() || r > std::numeric_limits<int>::max())
    throw std::invalid_argument("config: value of '" + key + "' is out of range: " + v);
  return static_cast<int>(r);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t r = 0;
  try {
    r = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: value of '" + key + "' is not an integer: " + v);
  }
  if (used != v.size())
    throw std::invalid_argument("config: value of '" + key + "' is not an integer: " + v);
  return r;
}

void validate_config(const ExperimentConfig& c) {
  if (c.q != c.p) throw std::invalid_argument("config: q must equal p");
  if (c.width < 1) throw std::invalid_argument("config: width must be positive");
  if (c.depth < 1) throw std::invalid_argument("config: depth must be positive");
  if (c.epochs < 1) throw std::invalid_argument("config: epochs must be positive");
  if (!(c.lr > 0)) throw std::invalid_argument("config: lr must be positive");
  if (c.checkpoint_stride < 1)
    throw std::invalid_argument("config: checkpoint_stride must be positive");
  if (c.eval_factor < 1) throw std::invalid_argument("config: eval_factor must be positive");
  if (c.sup_factor < 1) throw std::invalid_argument("config: sup_factor must be positive");
  if (!(c.pi_2_tr > 0)) throw std::invalid_argument("config: pi_2_tr must be positive");
  static const char* mkeys[5] = {"M_eq", "M_in", "M_in_t", "M_bn", "M_bn_t"};
  static const char* wkeys[5] = {"w_eq", "w_in", "w_in_t", "w_bn", "w_bn_t"};
  for (int k = 0; k < 5; ++k) {
    if (c.samples[k] < 1)
      throw std::invalid_argument(std::string("config: ") + mkeys[k] + " must be positive");
    if (!(c.weight[k] >= 0))
      throw std::invalid_argument(std::string("config: ") + wkeys[k] + " must be nonnegative");
  }
}

}  // namespace

std::vector<int> ExperimentConfig::mlp_sizes(const Problem& prob) const {
  std::vector<int> sizes;
  sizes.push_back(prob.net_input_count());
  for (int l = 0; l < depth; ++l) sizes.push_back(width);
  sizes.push_back(prob.net_output_count());
  return sizes;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> kv;
  std::vector<std::string> unknown;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key = value: " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " has no key");
    if (!kv.emplace(key, val).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }

  static const char* known[] = {
      "problem", "p", "q", "seed", "width", "depth", "epochs", "lr",
      "checkpoint_stride", "M_eq", "M_in", "M_in_t", "M_bn", "M_bn_t",
      "w_eq", "w_in", "w_in_t", "w_bn", "w_bn_t",
      "pi_2_tr", "eval_factor", "sup_factor", "output_dir", "run_name"};
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* n : known) ok = ok || k == n;
    if (!ok) unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw std::invalid_argument(msg);
  }

  const auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("problem")) cfg.problem = Problem::parse_id(*v);
  if (const auto* v = get("p")) cfg.p = parse_double("p", *v);
  cfg.q = cfg.p;
  if (const auto* v = get("q")) cfg.q = parse_double("q", *v);
  if (const auto* v = get("seed")) cfg.seed = parse_u64("seed", *v);
  if (const auto* v = get("width")) cfg.width = parse_int("width", *v);
  if (const auto* v = get("depth")) cfg.depth = parse_int("depth", *v);
  if (const auto* v = get("epochs")) cfg.epochs = parse_int("epochs", *v);
  if (const auto* v = get("lr")) cfg.lr = parse_double("lr", *v);
  if (const auto* v = get("checkpoint_stride"))
    cfg.checkpoint_stride = parse_int("checkpoint_stride", *v);
  static const char* mkeys[5] = {"M_eq", "M_in", "M_in_t", "M_bn", "M_bn_t"};
  static const char* wkeys[5] = {"w_eq", "w_in", "w_in_t", "w_bn", "w_bn_t"};
  for (int k = 0; k < 5; ++k) {
    if (const auto* v = get(mkeys[k])) cfg.samples[k] = parse_ll(mkeys[k], *v);
    if (const auto* v = get(wkeys[k])) cfg.weight[k] = parse_double(wkeys[k], *v);
  }
  if (const auto* v = get("pi_2_tr")) cfg.pi_2_tr = parse_double("pi_2_tr", *v);
  if (const auto* v = get("eval_factor")) cfg.eval_factor = parse_int("eval_factor", *v);
  if (const auto* v = get("sup_factor")) cfg.sup_factor = parse_int("sup_factor", *v);
  if (const auto* v = get("output_dir")) cfg.output_dir = *v;
  if (const auto* v = get("run_name")) cfg.run_name = *v;

  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "problem = " << Problem::id_name(c.problem) << "\n";
  os << "p = " << fmt17(c.p) << "\n";
  os << "q = " << fmt17(c.q) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "width = " << c.width << "\n";
  os << "depth = " << c.depth << "\n";
  os << "epochs = " << c.epochs << "\n";
  os << "lr = " << fmt17(c.lr) << "\n";
  os << "checkpoint_stride = " << c.checkpoint_stride << "\n";
  static const char* mkeys[5] = {"M_eq", "M_in", "M_in_t", "M_bn", "M_bn_t"};
  static const char* wkeys[5] = {"w_eq", "w_in", "w_in_t", "w_bn", "w_bn_t"};
  for (int k = 0; k < 5; ++k) os << mkeys[k] << " = " << c.samples[k] << "\n";
  for (int k = 0; k < 5; ++k) os << wkeys[k] << " = " << fmt17(c.weight[k]) << "\n";
  os << "pi_2_tr = " << fmt17(c.pi_2_tr) << "\n";
  os << "eval_factor = " << c.eval_factor << "\n";
  os << "sup_factor = " << c.sup_factor << "\n";
  os << "output_dir = " << c.output_dir << "\n";
  os << "run_name = " << c.run_name << "\n";
  return os.str();
}

std::array<int, 3> counts_for_box(long long M, const Box& box, const char* what,
                                  ProblemId problem) {
  const int dim = box.dim;
  long long n = std::llround(std::pow(static_cast<double>(M), 1.0 / dim));
  long long found = -1;
  for (long long c = std::max<long long>(1, n - 2); c <= n + 2; ++c) {
    long long pw = 1;
    for (int j = 0; j < dim; ++j) pw *= c;
    if (pw == M) {
      found = c;
      break;
    }
  }
  if (found < 0)
    throw std::invalid_argument("config: " + std::string(what) + " = " + std::to_string(M) +
                                " has no integral per-axis root for a " + std::to_string(dim) +
                                "-dimensional grid");
  if (problem == ProblemId::poisson && found % 2 != 0)
    throw std::invalid_argument("config: " + std::string(what) + " = " + std::to_string(M) +
                                " gives odd per-axis counts; even counts are required to keep "
                                "poisson samples off the axes");
  std::array<int, 3> counts{1, 1, 1};
  for (int j = 0; j < dim; ++j) counts[j] = static_cast<int>(found);
  return counts;
}

std::string resolve_output_dir(const ExperimentConfig& cfg, const std::string& flag_override) {
  if (const char* env = std::getenv("PINNCERT_OUT_DIR"); env && *env) return env;
  if (!flag_override.empty()) return flag_override;
  return cfg.output_dir;
}

const char kCsvHeader[] =
    "epoch,ET_eq,ET_in,ET_in_t,ET_bn,ET_bn_t,E_true,E_exact,E_training,E_asymp,ratio";

std::string csv_line(const CsvRow& row) {
  std::string s = std::to_string(row.epoch);
  for (int k = 0; k < 5; ++k) {
    s += ',';
    if (!std::isnan(row.Et[k])) s += fmt17(row.Et[k]);
  }
  for (double v : {row.E_true, row.E_exact, row.E_training, row.E_asymp, row.ratio}) {
    s += ',';
    s += fmt17(v);
  }
  return s;
}

std::vector<CsvRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  if (trim(line) != kCsvHeader)
    throw std::runtime_error("csv: unexpected header in " + path);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(cur);
    if (cells.size() != 11)
      throw std::runtime_error("csv: row with " + std::to_string(cells.size()) +
                               " cells in " + path);
    CsvRow r;
    r.epoch = parse_int("epoch", trim(cells[0]));
    for (int k = 0; k < 5; ++k) {
      const std::string c = trim(cells[1 + k]);
      r.Et[k] = c.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double("ET", c);
    }
    r.E_true = parse_double("E_true", trim(cells[6]));
    r.E_exact = parse_double("E_exact", trim(cells[7]));
    r.E_training = parse_double("E_training", trim(cells[8]));
    r.E_asymp = parse_double("E_asymp", trim(cells[9]));
    r.ratio = parse_double("ratio", trim(cells[10]));
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Per-run measurement state: programs and grids per residual family.

namespace {

struct KindRt {
  ResidualKind kind;
  int kidx = 0;
  double weight = 1;
  double M = 0;
  std::vector<TapeProgram> progs;      // training jet order
  std::vector<Grid> tgrids;            // training grids
  std::vector<Grid> egrids;            // refined evaluation grids
  std::vector<TapeProgram> sup_progs;  // order + 2, for derivative sups
  std::vector<ClosedGrid> sgrids;
};

struct Runtime {
  const Problem& prob;
  const ExperimentConfig& cfg;
  std::vector<KindRt> kinds;
  std::array<int, 3> true_counts{1, 1, 1};
  std::vector<ResSupRequest> res_reqs;
  std::vector<NetSupRequest> net_reqs;

  Runtime(const Problem& p, const ExperimentConfig& c, const MlpParams& proto)
      : prob(p), cfg(c) {
    static const char* mkeys[5] = {"M_eq", "M_in", "M_in_t", "M_bn", "M_bn_t"};
    for (const auto& ks : prob.kinds()) {
      KindRt kr;
      kr.kind = ks.kind;
      kr.kidx = static_cast<int>(ks.kind);
      kr.weight = cfg.weight[kr.kidx];
      kr.M = static_cast<double>(cfg.samples[kr.kidx]);
      kr.progs = prob.build_programs(ks.kind, ks.train_order, proto, false);
      kr.sup_progs = prob.build_programs(ks.kind, ks.train_order + 2, proto, false);
      for (const auto& ps : ks.programs) {
        const auto counts =
            counts_for_box(cfg.samples[kr.kidx], ps.grid_box, mkeys[kr.kidx], cfg.problem);
        kr.tgrids.push_back(midpoint_grid(ps.grid_box, counts));
        std::array<int, 3> ec{1, 1, 1};
        for (int j = 0; j < ps.grid_box.dim; ++j) ec[j] = counts[j] * cfg.eval_factor;
        kr.egrids.push_back(midpoint_grid(ps.grid_box, ec));
        const int ksup = std::max<long long>(
            1, std::llround(std::pow(cfg.sup_factor, 1.0 / ps.grid_box.dim)));
        std::array<int, 3> sc{1, 1, 1};
        for (int j = 0; j < ps.grid_box.dim; ++j) sc[j] = counts[j] * ksup + 1;
        kr.sgrids.push_back(ClosedGrid{ps.grid_box, sc});
      }
      if (kr.progs.size() != ks.programs.size())
        throw std::logic_error("runtime: program count mismatch");
      kinds.push_back(std::move(kr));
    }
    const KindSpec* eq = prob.find_kind(ResidualKind::eq);
    const auto eqc = counts_for_box(cfg.samples[0], eq->programs[0].grid_box, "M_eq",
                                    cfg.problem);
    for (int j = 0; j < prob.domain().dim; ++j) true_counts[j] = eqc[j] * 2;
    res_reqs = prob.res_sup_requests();
    net_reqs = prob.net_sup_requests();
  }
};

double powered_norm(const TapeProgram& prog, const Grid& g, const double* params, double p) {
  const int ne = static_cast<int>(prog.emitted().size());
  double out = 0;
  blocked_sum(g.total(), 1, &out, [&](std::size_t b, std::size_t e, double* acc) {
    TapeWorkspace ws = prog.make_workspace();
    double gpt[3] = {0, 0, 0};
    for (std::size_t i = b; i < e; ++i) {
      g.point(i, gpt);
      prog.forward(ws, gpt, params);
      double s = 0;
      for (int c = 0; c < ne; ++c) s += pow_abs(prog.emitted_value(ws, c), p);
      acc[0] += s;
    }
  });
  return out * g.cell_volume();
}

// Dense-grid derivative maxima for one family: per-component order-2 norms
// (for the quadrature bound) plus any named sups requested on this family.
void sup_sweep(const KindRt& kr, const Runtime& rt, const double* params,
               std::vector<std::vector<double>>& c2_per_prog,
               std::map<std::string, double>& sups) {
  std::vector<const ResSupRequest*> reqs;
  for (const auto& r : rt.res_reqs)
    if (r.kind == kr.kind) reqs.push_back(&r);

  for (std::size_t pi = 0; pi < kr.sup_progs.size(); ++pi) {
    const TapeProgram& prog = kr.sup_progs[pi];
    const ClosedGrid& g = kr.sgrids[pi];
    const JetTable& tab = prog.table();
    const int ne = static_cast<int>(prog.emitted().size());
    for (int c = 0; c < ne; ++c)
      if (prog.emitted_valid_order(c) < 2)
        throw std::logic_error("sup sweep: component below order 2");
    for (const auto* r : reqs)
      for (int c = 0; c < ne; ++c) {
        if (r->comp >= 0 && c != r->comp) continue;
        if (prog.emitted_valid_order(c) < r->order)
          throw std::logic_error("sup sweep: sup '" + r->name +
                                 "' asks beyond the component's valid order");
      }

    const int nacc = ne + static_cast<int>(reqs.size());
    std::vector<double> out(static_cast<std::size_t>(nacc));
    blocked_max(g.total(), nacc, out.data(), [&](std::size_t b, std::size_t e, double* acc) {
      TapeWorkspace ws = prog.make_workspace();
      double gpt[3] = {0, 0, 0};
      for (std::size_t i = b; i < e; ++i) {
        g.point(i, gpt);
        prog.forward(ws, gpt, params);
        for (int c = 0; c < ne; ++c) {
          const double* co = prog.emitted_coeffs(ws, c);
          double m = 0;
          for (int k = 0; k < tab.count_upto[2]; ++k)
            m = std::max(m, std::abs(co[k] * tab.fact[k]));
          acc[c] = std::max(acc[c], m);
        }
        for (std::size_t rj = 0; rj < reqs.size(); ++rj) {
          const auto& r = *reqs[rj];
          double m = 0;
          for (int c = 0; c < ne; ++c) {
            if (r.comp >= 0 && c != r.comp) continue;
            const double* co = prog.emitted_coeffs(ws, c);
            for (int k = 0; k < tab.count_upto[r.order]; ++k)
              m = std::max(m, std::abs(co[k] * tab.fact[k]));
          }
          acc[ne + static_cast<int>(rj)] = std::max(acc[ne + static_cast<int>(rj)], m);
        }
      }
    });
    c2_per_prog.emplace_back(out.begin(), out.begin() + ne);
    for (std::size_t rj = 0; rj < reqs.size(); ++rj) {
      auto [it, fresh] = sups.try_emplace(reqs[rj]->name, out[ne + rj]);
      if (!fresh) it->second = std::max(it->second, out[ne + rj]);
    }
  }
}

CsvRow eval_runtime(const Runtime& rt, const MlpParams& params, int epoch) {
  const double p = rt.cfg.p;
  const double* th = params.flat.data();
  CsvRow row;
  row.epoch = epoch;
  row.Et.fill(std::numeric_limits<double>::quiet_NaN());

  CertificateInputs ci;
  ci.p = p;
  ci.q = rt.cfg.q;
  ci.pi_2_tr = rt.cfg.pi_2_tr;
  for (const auto& kr : rt.kinds) {
    KindData kd;
    kd.present = true;
    kd.M = kr.M;
    std::vector<std::vector<double>> c2;
    sup_sweep(kr, rt, th, c2, ci.sups);
    for (std::size_t i = 0; i < kr.progs.size(); ++i) {
      kd.Et += powered_norm(kr.progs[i], kr.tgrids[i], th, p);
      kd.Ee += powered_norm(kr.progs[i], kr.egrids[i], th, p);
      double axis_sum = 0;
      for (double s : c2[i]) axis_sum += pc2_bound(p, s);
      kd.quad_err += midpoint_error_bound(
          kr.egrids[i], std::vector<double>(static_cast<std::size_t>(kr.egrids[i].box.dim),
                                            axis_sum));
    }
    ci.kind[static_cast<std::size_t>(kr.kidx)] = kd;
    row.Et[static_cast<std::size_t>(kr.kidx)] = kd.Et;
  }
  add_net_sups(ci.sups, params, rt.net_reqs);

  const Certificates certs = rt.prob.assemble_certificates(ci);
  row.E_true = true_error(rt.prob, params, p, rt.true_counts);
  row.E_exact = certs.E_exact;
  row.E_training = certs.E_training;
  row.E_asymp = certs.E_asymp;
  double se = 0;
  for (const auto& kr : rt.kinds) se += row.Et[static_cast<std::size_t>(kr.kidx)];
  row.ratio = se / row.E_asymp;
  return row;
}

std::string ckpt_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06d.pnck", epoch);
  return buf;
}

}  // namespace

CsvRow evaluate_checkpoint(const Problem& prob, const ExperimentConfig& cfg,
                           const MlpParams& params, int epoch) {
  validate_config(cfg);
  prob.validate_p(cfg.p);
  Runtime rt(prob, cfg, params);
  return eval_runtime(rt, params, epoch);
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir_flag,
                         bool quiet) {
  validate_config(cfg);
  const auto prob = Problem::make(cfg.problem);
  prob->validate_p(cfg.p);

  MlpParams params = init_mlp(cfg.mlp_sizes(*prob), cfg.seed);
  Runtime rt(*prob, cfg, params);

  const std::string outdir = resolve_output_dir(cfg, out_dir_flag);
  const std::string rname = cfg.run_name.empty()
                                ? std::string(Problem::id_name(cfg.problem)) + "_seed" +
                                      std::to_string(cfg.seed)
                                : cfg.run_name;
  const fs::path rdir = fs::path(outdir) / rname;
  fs::create_directories(rdir);
  {
    std::ofstream cf(rdir / "config.txt");
    cf << config_to_text(cfg);
  }

  AdamState st;
  st.lr = cfg.lr;
  const std::size_t np = params.flat.size();
  std::vector<double> grad(np);
  std::vector<double> out(1 + np);

  RunResult res;
  res.run_dir = rdir.string();
  std::ofstream csv(rdir / "metrics.csv");
  csv << kCsvHeader << "\n";

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0;
    for (const auto& kr : rt.kinds) {
      const double w = kr.weight;
      for (std::size_t i = 0; i < kr.progs.size(); ++i) {
        const TapeProgram& prog = kr.progs[i];
        const Grid& g = kr.tgrids[i];
        const double cv = g.cell_volume();
        const int ne = static_cast<int>(prog.emitted().size());
        blocked_sum(g.total(), static_cast<int>(1 + np), out.data(),
                    [&](std::size_t b, std::size_t e, double* acc) {
                      TapeWorkspace ws = prog.make_workspace();
                      std::vector<std::pair<int, double>> seeds;
                      seeds.reserve(static_cast<std::size_t>(ne));
                      double gpt[3] = {0, 0, 0};
                      for (std::size_t j = b; j < e; ++j) {
                        g.point(j, gpt);
                        prog.forward(ws, gpt, params.flat.data());
                        seeds.clear();
                        double s = 0;
                        for (int c = 0; c < ne; ++c) {
                          const double v = prog.emitted_value(ws, c);
                          s += pow_abs(v, cfg.p);
                          if (w > 0) seeds.emplace_back(c, w * cv * dpow_abs(v, cfg.p));
                        }
                        acc[0] += s;
                        if (w > 0) prog.reverse(ws, params.flat.data(), seeds, acc + 1);
                      }
                    });
        loss += w * out[0] * cv;
        for (std::size_t k = 0; k < np; ++k) grad[k] += out[1 + k];
      }
    }
    res.loss_history.push_back(loss);
    adam_step(params, grad, st);

    if (epoch % cfg.checkpoint_stride == 0 || epoch == cfg.epochs) {
      save_checkpoint((rdir / ckpt_name(epoch)).string(), params,
                      static_cast<std::uint32_t>(epoch));
      const CsvRow row = eval_runtime(rt, params, epoch);
      csv << csv_line(row) << "\n";
      csv.flush();
      res.rows.push_back(row);
      if (!quiet)
        std::fprintf(stderr, "[%s seed%llu] epoch %d/%d loss %.6g E_true %.6g E_exact %.6g\n",
                     prob->name(), static_cast<unsigned long long>(cfg.seed), epoch,
                     cfg.epochs, loss, row.E_true, row.E_exact);
    }
  }
  csv.close();
  write_plots((rdir / "metrics.csv").string(), rdir.string());
  return res;
}

int replay_run(const std::string& run_dir, bool quiet) {
  const fs::path rdir(run_dir);
  const ExperimentConfig cfg = load_config((rdir / "config.txt").string());
  const auto prob = Problem::make(cfg.problem);
  prob->validate_p(cfg.p);

  std::vector<std::pair<int, fs::path>> ckpts;
  for (const auto& ent : fs::directory_iterator(rdir)) {
    const std::string fn = ent.path().filename().string();
    if (fn.rfind("ckpt_", 0) == 0 && fn.size() > 10 && fn.substr(fn.size() - 5) == ".pnck")
      ckpts.emplace_back(std::stoi(fn.substr(5, fn.size() - 10)), ent.path());
  }
  if (ckpts.empty()) throw std::runtime_error("replay: no checkpoints in " + run_dir);
  std::sort(ckpts.begin(), ckpts.end());

  std::uint32_t ep0 = 0;
  MlpParams proto = load_checkpoint(ckpts.front().second.string(), &ep0);
  Runtime rt(*prob, cfg, proto);

  std::ofstream csv(rdir / "metrics_replay.csv");
  csv << kCsvHeader << "\n";
  for (const auto& [epoch, path] : ckpts) {
    std::uint32_t ep = 0;
    const MlpParams params = load_checkpoint(path.string(), &ep);
    const CsvRow row = eval_runtime(rt, params, static_cast<int>(ep));
    csv << csv_line(row) << "\n";
  }
  csv.close();

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(rdir / "metrics.csv");
  const std::string b = slurp(rdir / "metrics_replay.csv");
  const bool match = !a.empty() && a == b;
  if (!quiet)
    std::fprintf(stderr, "replay: %s (%zu checkpoints)\n",
                 match ? "metrics match" : "METRICS MISMATCH", ckpts.size());
  return match ? 0 : 1;
}

// ---------------------------------------------------------------------------
// SVG plotting.

namespace {

struct Series {
  std::string label;
  std::vector<double> x, y;  // NaN y values are skipped
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void svg_chart(const std::string& path, const std::string& title, const std::string& ylabel,
               const std::vector<Series>& series) {
  const double W = 880, H = 540, ml = 80, mr = 190, mt = 48, mb = 56;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = xmax = 0.0;
  if (!std::isfinite(ymin)) ymin = ymax = 0.0;
  if (!(xmin < xmax)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymin < ymax)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double xpad = 0.02 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;
  const auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
  const auto Y = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("plot: cannot write " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";

  const int nticks = 6;
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int t = 0; t <= nticks; ++t) {
    const double xv = xmin + (xmax - xmin) * t / nticks;
    const double yv = ymin + (ymax - ymin) * t / nticks;
    os << "<line x1=\"" << X(xv) << "\" y1=\"" << Y(ymin) << "\" x2=\"" << X(xv) << "\" y2=\""
       << Y(ymax) << "\" stroke=\"#e5e5e5\"/>\n";
    os << "<line x1=\"" << X(xmin) << "\" y1=\"" << Y(yv) << "\" x2=\"" << X(xmax)
       << "\" y2=\"" << Y(yv) << "\" stroke=\"#e5e5e5\"/>\n";
    os << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\">"
       << fmtg(xv) << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">"
       << fmtg(yv) << "</text>\n";
  }
  os << "</g>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << Y(ymin) << "\" x2=\"" << W - mr << "\" y2=\""
     << Y(ymin) << "\" stroke=\"#333\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << Y(ymin) << "\" x2=\"" << ml << "\" y2=\""
     << Y(ymax) << "\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 14
     << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">epoch</text>\n";
  os << "<text x=\"20\" y=\"" << (mt + H - mb) / 2
     << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 20 "
     << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kPalette[ci % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << X(s.x[i]) << "," << Y(s.y[i]) << " ";
    }
    os << "\"/>\n";
    const double ly = mt + 18 * ci;
    os << "<rect x=\"" << W - mr + 14 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" "
       << "fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << W - mr + 32 << "\" y=\"" << ly + 10
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
}

}  // namespace

void write_plots(const std::string& csv_path, const std::string& out_dir) {
  const auto rows = read_metrics_csv(csv_path);
  if (rows.empty()) throw std::runtime_error("plot: no rows in " + csv_path);
  std::vector<double> epochs;
  epochs.reserve(rows.size());
  for (const auto& r : rows) epochs.push_back(r.epoch);

  static const char* kEtNames[5] = {"ET_eq", "ET_in", "ET_in_t", "ET_bn", "ET_bn_t"};
  std::vector<Series> curves;
  long long clamped = 0;
  const auto log_clamped = [&](double v) {
    if (std::isnan(v)) return v;
    if (v == 0) {
      ++clamped;
      v = 1e-300;
    }
    return std::log10(std::abs(v));
  };
  for (int k = 0; k < 5; ++k) {
    bool any = false;
    for (const auto& r : rows) any = any || !std::isnan(r.Et[k]);
    if (!any) continue;
    Series s;
    s.label = kEtNames[k];
    s.x = epochs;
    for (const auto& r : rows) s.y.push_back(log_clamped(r.Et[k]));
    curves.push_back(std::move(s));
  }
  const std::pair<const char*, double CsvRow::*> scalar_cols[] = {
      {"E_true", &CsvRow::E_true},
      {"E_exact", &CsvRow::E_exact},
      {"E_training", &CsvRow::E_training},
      {"E_asymp", &CsvRow::E_asymp},
  };
  for (const auto& [name, member] : scalar_cols) {
    Series s;
    s.label = name;
    s.x = epochs;
    for (const auto& r : rows) s.y.push_back(log_clamped(r.*member));
    curves.push_back(std::move(s));
  }
  if (clamped > 0)
    std::fprintf(stderr, "plot: clamped %lld zero values to 1e-300\n", clamped);

  fs::create_directories(out_dir);
  svg_chart((fs::path(out_dir) / "curves.svg").string(),
            "residual norms and error certificates", "log10 value", curves);

  Series ratio;
  ratio.label = "ratio";
  ratio.x = epochs;
  for (const auto& r : rows) ratio.y.push_back(r.ratio);
  svg_chart((fs::path(out_dir) / "ratio.svg").string(), "training norm sum over trend bound",
            "ratio", {ratio});
}

// ---------------------------------------------------------------------------

void write_constants_csv(std::ostream& os) {
  os << "name,value\n";
  for (double p : {1.0, 1.5, 2.0, 3.0, 4.0})
    os << "poincare_p" << fmtg(p) << "," << fmt17(poincare_const(p)) << "\n";
  const struct {
    int sigma, nu;
    double p;
    int m;
  } bh[] = {{1, 0, 2, 1}, {2, 0, 2, 1}, {2, 1, 2, 1}, {3, 0, 2, 2}, {2, 0, 4, 1}, {4, 2, 2, 3}};
  for (const auto& b : bh)
    os << "bramble_hilbert_s" << b.sigma << "_n" << b.nu << "_p" << fmtg(b.p) << "_m" << b.m
       << "," << fmt17(bramble_hilbert_const(b.sigma, b.nu, b.p, b.m)) << "\n";
  const Box unit2{2, {0, 0, 0}, {1, 1, 0}};
  const TanhSizeBounds tb = tanh_size_bounds(3, 2, 6, unit2);
  os << "tanh_width1_s3_m2_N6," << fmt17(tb.width1) << "\n";
  os << "tanh_width2_s3_m2_N6," << fmt17(tb.width2) << "\n";
  os << "tanh_weight_exponent_s3_m2_N6," << fmt17(tb.weight_exponent) << "\n";
  os << "aux_gradient_p2_len1," << fmt17(aux_gradient_factor(2, 1)) << "\n";
  os << "aux_trace_p2_len1," << fmt17(aux_trace_factor(2, 1)) << "\n";
  os << "aux_boundary_mean_len1," << fmt17(aux_boundary_mean_factor(1)) << "\n";
}

}  // namespace pinncert
