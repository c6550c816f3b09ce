#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pinncert/estimators.hpp"
#include "pinncert/quad.hpp"
#include "pinncert/tape.hpp"

namespace pinncert {

enum class ProblemId { heat, kdv, maxwell, boussinesq, rayleigh, poisson };

// One quadrature domain of a residual family; bn families can have several
// (one per face or edge), each sampled with its own grid.
struct ProgramSpec {
  Box grid_box;
  int ncomp = 1;
};

struct KindSpec {
  ResidualKind kind;
  int train_order = 0;  // jet order the training programs need
  std::vector<ProgramSpec> programs;
};

// Network derivative sup needed by a certificate, probed on a dense grid.
struct NetSupRequest {
  std::string name;                 // same-named requests are combined by max
  Box grid_box;                     // free coordinates of the probe set
  std::array<int, 3> counts{257, 257, 257};
  std::vector<InputSpec> inputs;    // network inputs from a probe point
  int out_comp = 0;
  std::array<int, 3> deriv{0, 0, 0};  // probe |d^deriv u_out|
  int sup_order = -1;                 // if >= 0, probe max over |i| <= sup_order instead
  bool open_grid = false;             // cell midpoints instead of closed nodes
};

// Residual derivative sup beyond the per-component order-2 defaults.
struct ResSupRequest {
  std::string name;
  ResidualKind kind;
  int comp = -1;  // emitted component, -1 for max over all components
  int order = 2;
};

struct KindData {
  bool present = false;
  double Et = 0;        // training-grid powered norm
  double Ee = 0;        // evaluation-grid powered norm
  double quad_err = 0;  // certified bound on |true integral - Ee|
  double M = 0;         // training samples per program grid
};

struct CertificateInputs {
  double p = 2, q = 2;
  double pi_2_tr = 1.0;
  std::array<KindData, 5> kind;  // indexed by ResidualKind
  std::map<std::string, double> sups;

  const KindData& at(ResidualKind k) const;
  double sup(const std::string& name) const;
};

struct Certificates {
  double E_exact = 0;
  double E_training = 0;
  double E_asymp = 0;
  BoundBreakdown exact_detail, training_detail;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual ProblemId id() const = 0;
  virtual const char* name() const = 0;
  virtual int jet_vars() const = 0;
  virtual int net_input_count() const = 0;
  virtual int net_output_count() const = 0;
  // Full coordinate box: (t, x...) for evolution problems, (x...) otherwise.
  virtual Box domain() const = 0;
  virtual double time_horizon() const = 0;
  virtual void validate_p(double p) const = 0;
  virtual const std::vector<KindSpec>& kinds() const = 0;

  // Residual evaluation schedules for one family. With exact_field the
  // network is replaced by the closed-form solution, so the residuals of the
  // exact solution itself can be probed. The returned programs hold data
  // callbacks into this problem instance; keep it alive while they run.
  virtual std::vector<TapeProgram> build_programs(ResidualKind kind, int order,
                                                  const MlpParams& proto,
                                                  bool exact_field) const = 0;

  virtual void exact_values(const double* pt, double* out) const = 0;
  virtual Jet exact_jet(const JetTable& tab, const std::array<double, 3>& pt,
                        int comp) const = 0;

  // Rejects evaluation points outside the closed domain box.
  void require_inside(const double* pt) const;

  virtual void net_inputs_from_point(const double* pt, double* in) const;

  virtual std::vector<NetSupRequest> net_sup_requests() const = 0;
  virtual std::vector<ResSupRequest> res_sup_requests() const;

  virtual Certificates assemble_certificates(const CertificateInputs& in) const = 0;

  const KindSpec* find_kind(ResidualKind k) const;
  bool has_kind(ResidualKind k) const { return find_kind(k) != nullptr; }
  int required_order(ResidualKind k) const;

  static std::unique_ptr<Problem> make(ProblemId id);
  static ProblemId parse_id(const std::string& name);
  static const char* id_name(ProblemId id);
};

// Probes one network derivative sup on the request grid.
double eval_net_sup(const MlpParams& params, const NetSupRequest& req);

// Evaluates every request, max-combining same-named entries into sups.
void add_net_sups(std::map<std::string, double>& sups, const MlpParams& params,
                  const std::vector<NetSupRequest>& reqs);

// Powered norm of (field - exact solution) over the full domain: the
// integrand is sum_c |field_c - u_c|^p at cell midpoints, counts per axis.
double true_error_fn(const Problem& prob,
                     const std::function<void(const double*, double*)>& field,
                     double p, const std::array<int, 3>& counts);
double true_error(const Problem& prob, const MlpParams& params, double p,
                  const std::array<int, 3>& counts);

}  // namespace pinncert
