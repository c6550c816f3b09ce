#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pinncert/jet.hpp"
#include "pinncert/net.hpp"

namespace pinncert {

// Builds one network input jet from a grid point.
struct InputSpec {
  int grid_axis = -1;      // read this grid coordinate, or fixed_value if -1
  double fixed_value = 0;  // coordinate pinned to a face
  int var_axis = 0;        // differentiation variable carrying this input
  bool abs = false;        // feed |value| with slope sign(value)
};

// Fills one full coefficient buffer from the raw grid point. Used for
// problem data; these nodes carry no parameter dependence, so the reverse
// sweep never propagates into them.
using DataFn = std::function<void(const double* gpt, double* coeffs)>;

enum class ResidualKind { eq, in, in_t, bn, bn_t };
const char* residual_kind_name(ResidualKind k);

struct Stage {
  enum Kind { kInput, kAffine, kTanh, kMul, kAdd, kSub, kScale, kShift, kFn };
  Kind kind;
  int a = -1, b = -1, out = -1;
  int n = 0;        // input count / layer width
  int layer = -1;   // affine: index into MlpParams::layers
  int axis = -1;    // shift axis
  double alpha = 0; // scale factor
  int aux = -1;     // input: spec base; tanh: w arena base; fn: function index
  int vord = 0;     // valid order of outputs
  int nv = 0;       // coefficients computed per output slot
};

struct TapeWorkspace {
  std::vector<double> val;
  std::vector<double> adj;
  std::vector<double> tanh_w;
  std::vector<double> scratch;
};

// A fixed evaluation schedule for one residual family on one grid kind.
// Built once, then replayed point by point; all evaluation state lives in
// the caller's workspace, so replays are bit-for-bit reproducible and
// threads never share mutable state.
class TapeProgram {
 public:
  const JetTable& table() const { return *tab_; }
  int nslots() const { return nslots_; }
  std::size_t nparams() const { return nparams_; }
  const std::vector<std::pair<ResidualKind, int>>& emitted() const { return emitted_; }
  int emitted_valid_order(int i) const { return emit_vord_[i]; }

  TapeWorkspace make_workspace() const;

  void forward(TapeWorkspace& ws, const double* gpt, const double* params) const;
  // Same sweep with per-stage finite checks; throws naming the first
  // offending node.
  void forward_checked(TapeWorkspace& ws, const double* gpt, const double* params) const;

  bool emitted_values_finite(const TapeWorkspace& ws) const;
  double emitted_value(const TapeWorkspace& ws, int i) const {
    return ws.val[static_cast<std::size_t>(emitted_[i].second) * tab_->ncoef];
  }
  const double* emitted_coeffs(const TapeWorkspace& ws, int i) const {
    return ws.val.data() + static_cast<std::size_t>(emitted_[i].second) * tab_->ncoef;
  }

  // Seeds are (emitted component index, adjoint of the value coefficient).
  // Accumulates into grad, which must hold nparams() entries.
  void reverse(TapeWorkspace& ws, const double* params,
               const std::vector<std::pair<int, double>>& seeds, double* grad) const;
  // Reverse sweep with per-stage finite checks on the adjoints.
  void reverse_checked(TapeWorkspace& ws, const double* params,
                       const std::vector<std::pair<int, double>>& seeds, double* grad) const;

 private:
  friend class TapeBuilder;
  const JetTable* tab_ = nullptr;
  int nslots_ = 0;
  int ntanh_ = 0;
  std::size_t nparams_ = 0;
  std::vector<Stage> stages_;
  std::vector<InputSpec> input_specs_;
  std::vector<DataFn> fns_;
  std::vector<std::pair<ResidualKind, int>> emitted_;
  std::vector<int> emit_vord_;
  std::vector<LayerDesc> layers_;
  std::vector<std::string> stage_names_;

  void run_forward(TapeWorkspace& ws, const double* gpt, const double* params, bool checked) const;
  void run_reverse(TapeWorkspace& ws, const double* params,
                   const std::vector<std::pair<int, double>>& seeds, double* grad,
                   bool checked) const;
};

class TapeBuilder {
 public:
  TapeBuilder(const JetTable& tab, const MlpParams& proto);

  std::vector<int> add_inputs(const std::vector<InputSpec>& specs);
  std::vector<int> add_affine(const std::vector<int>& in, int layer_idx);
  std::vector<int> add_tanh(const std::vector<int>& in);
  // Affine and tanh layers alternating, identity on the last layer.
  std::vector<int> add_network(const std::vector<int>& in);
  int add_fn(DataFn fn, int valid_order = -1);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double s);
  int shift(int a, int axis);
  void emit(ResidualKind kind, int slot);

  int valid_order(int slot) const { return slot_vord_[slot]; }
  TapeProgram build();

 private:
  int new_slot(int vord);
  TapeProgram prog_;
  std::vector<int> slot_vord_;
  bool built_ = false;
};

// Gradient of a weighted sum of emitted component values at one point.
// Detects non-finite values and re-runs with per-node checks so the error
// names the first offending node.
std::vector<double> param_grad(const TapeProgram& prog, const MlpParams& params,
                               const double* gpt,
                               const std::vector<std::pair<int, double>>& seeds);

}  // namespace pinncert
