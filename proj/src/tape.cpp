#include "pinncert/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pinncert {

const char* residual_kind_name(ResidualKind k) {
  switch (k) {
    case ResidualKind::eq: return "eq";
    case ResidualKind::in: return "in";
    case ResidualKind::in_t: return "in_t";
    case ResidualKind::bn: return "bn";
    case ResidualKind::bn_t: return "bn_t";
  }
  return "?";
}

TapeBuilder::TapeBuilder(const JetTable& tab, const MlpParams& proto) {
  prog_.tab_ = &tab;
  prog_.layers_ = proto.layers;
  prog_.nparams_ = proto.flat.size();
}

int TapeBuilder::new_slot(int vord) {
  slot_vord_.push_back(vord);
  return prog_.nslots_++;
}

std::vector<int> TapeBuilder::add_inputs(const std::vector<InputSpec>& specs) {
  Stage s;
  s.kind = Stage::kInput;
  s.n = static_cast<int>(specs.size());
  s.aux = static_cast<int>(prog_.input_specs_.size());
  s.vord = prog_.tab_->order;
  s.nv = prog_.tab_->count_upto[s.vord];
  std::vector<int> slots;
  for (const auto& sp : specs) {
    if (sp.var_axis < 0 || sp.var_axis >= prog_.tab_->nvars)
      throw std::invalid_argument("tape inputs: variable axis out of range");
    prog_.input_specs_.push_back(sp);
    slots.push_back(new_slot(s.vord));
  }
  s.out = slots.front();
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("input");
  return slots;
}

std::vector<int> TapeBuilder::add_affine(const std::vector<int>& in, int layer_idx) {
  const auto& d = prog_.layers_.at(layer_idx);
  if (static_cast<int>(in.size()) != d.n_in)
    throw std::invalid_argument("tape affine: input count does not match layer");
  for (std::size_t i = 1; i < in.size(); ++i)
    if (in[i] != in[0] + static_cast<int>(i))
      throw std::invalid_argument("tape affine: input slots must be contiguous");

  int vord = slot_vord_[in[0]];
  for (int s : in) vord = std::min(vord, slot_vord_[s]);

  Stage s;
  s.kind = Stage::kAffine;
  s.a = in[0];
  s.layer = layer_idx;
  s.vord = vord;
  s.nv = prog_.tab_->count_upto[vord];
  std::vector<int> slots;
  for (int j = 0; j < d.n_out; ++j) slots.push_back(new_slot(vord));
  s.out = slots.front();
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("affine layer " + std::to_string(layer_idx));
  return slots;
}

std::vector<int> TapeBuilder::add_tanh(const std::vector<int>& in) {
  for (std::size_t i = 1; i < in.size(); ++i)
    if (in[i] != in[0] + static_cast<int>(i))
      throw std::invalid_argument("tape tanh: input slots must be contiguous");
  int vord = slot_vord_[in[0]];
  for (int s : in) vord = std::min(vord, slot_vord_[s]);

  Stage s;
  s.kind = Stage::kTanh;
  s.a = in[0];
  s.n = static_cast<int>(in.size());
  s.aux = prog_.ntanh_;
  s.vord = vord;
  s.nv = prog_.tab_->count_upto[vord];
  prog_.ntanh_ += s.n;
  std::vector<int> slots;
  for (int j = 0; j < s.n; ++j) slots.push_back(new_slot(vord));
  s.out = slots.front();
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("tanh layer");
  return slots;
}

std::vector<int> TapeBuilder::add_network(const std::vector<int>& in) {
  std::vector<int> cur = in;
  for (std::size_t l = 0; l < prog_.layers_.size(); ++l) {
    cur = add_affine(cur, static_cast<int>(l));
    if (l + 1 < prog_.layers_.size()) cur = add_tanh(cur);
  }
  return cur;
}

int TapeBuilder::add_fn(DataFn fn, int valid_order) {
  Stage s;
  s.kind = Stage::kFn;
  s.aux = static_cast<int>(prog_.fns_.size());
  s.vord = valid_order < 0 ? prog_.tab_->order : valid_order;
  s.nv = prog_.tab_->count_upto[s.vord];
  prog_.fns_.push_back(std::move(fn));
  s.out = new_slot(s.vord);
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("data term " + std::to_string(s.aux));
  return s.out;
}

namespace {
int binary_vord(const std::vector<int>& vords, int a, int b) {
  return std::min(vords[a], vords[b]);
}
}  // namespace

int TapeBuilder::add(int a, int b) {
  Stage s;
  s.kind = Stage::kAdd;
  s.a = a;
  s.b = b;
  s.vord = binary_vord(slot_vord_, a, b);
  s.nv = prog_.tab_->count_upto[s.vord];
  s.out = new_slot(s.vord);
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("add");
  return s.out;
}

int TapeBuilder::sub(int a, int b) {
  Stage s;
  s.kind = Stage::kSub;
  s.a = a;
  s.b = b;
  s.vord = binary_vord(slot_vord_, a, b);
  s.nv = prog_.tab_->count_upto[s.vord];
  s.out = new_slot(s.vord);
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("sub");
  return s.out;
}

int TapeBuilder::mul(int a, int b) {
  Stage s;
  s.kind = Stage::kMul;
  s.a = a;
  s.b = b;
  s.vord = binary_vord(slot_vord_, a, b);
  s.nv = prog_.tab_->count_upto[s.vord];
  s.out = new_slot(s.vord);
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("mul");
  return s.out;
}

int TapeBuilder::scale(int a, double alpha) {
  Stage s;
  s.kind = Stage::kScale;
  s.a = a;
  s.alpha = alpha;
  s.vord = slot_vord_[a];
  s.nv = prog_.tab_->count_upto[s.vord];
  s.out = new_slot(s.vord);
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("scale");
  return s.out;
}

int TapeBuilder::shift(int a, int axis) {
  if (axis < 0 || axis >= prog_.tab_->nvars)
    throw std::invalid_argument("tape shift: axis out of range");
  if (slot_vord_[a] < 1)
    throw std::invalid_argument("tape shift: differentiation order exhausted, raise the jet order");
  Stage s;
  s.kind = Stage::kShift;
  s.a = a;
  s.axis = axis;
  s.vord = slot_vord_[a] - 1;
  s.nv = prog_.tab_->count_upto[s.vord];
  s.out = new_slot(s.vord);
  prog_.stages_.push_back(s);
  prog_.stage_names_.push_back("derivative axis " + std::to_string(axis));
  return s.out;
}

void TapeBuilder::emit(ResidualKind kind, int slot) {
  prog_.emitted_.emplace_back(kind, slot);
  prog_.emit_vord_.push_back(slot_vord_[slot]);
}

TapeProgram TapeBuilder::build() {
  if (built_) throw std::logic_error("TapeBuilder::build called twice");
  built_ = true;
  return std::move(prog_);
}

TapeWorkspace TapeProgram::make_workspace() const {
  TapeWorkspace ws;
  ws.val.assign(static_cast<std::size_t>(nslots_) * tab_->ncoef, 0.0);
  ws.adj.assign(static_cast<std::size_t>(nslots_) * tab_->ncoef, 0.0);
  ws.tanh_w.assign(static_cast<std::size_t>(ntanh_) * tab_->ncoef, 0.0);
  ws.scratch.assign(2 * static_cast<std::size_t>(tab_->ncoef), 0.0);
  return ws;
}

void TapeProgram::run_forward(TapeWorkspace& ws, const double* gpt, const double* params,
                              bool checked) const {
  const JetTable& t = *tab_;
  const int nc = t.ncoef;
  double* val = ws.val.data();

  for (std::size_t si = 0; si < stages_.size(); ++si) {
    const Stage& s = stages_[si];
    switch (s.kind) {
      case Stage::kInput:
        for (int i = 0; i < s.n; ++i) {
          const InputSpec& sp = input_specs_[s.aux + i];
          const double v = sp.grid_axis >= 0 ? gpt[sp.grid_axis] : sp.fixed_value;
          double* out = val + static_cast<std::size_t>(s.out + i) * nc;
          if (sp.abs)
            jetk::abs_variable(t, out, v, sp.var_axis);
          else
            jetk::variable(t, out, v, sp.var_axis);
        }
        break;
      case Stage::kAffine: {
        const LayerDesc& d = layers_[s.layer];
        for (int j = 0; j < d.n_out; ++j) {
          double* out = val + static_cast<std::size_t>(s.out + j) * nc;
          std::memset(out, 0, sizeof(double) * s.nv);
          out[0] = params[d.b_off + j];
          const double* wrow = params + d.w_off + static_cast<std::size_t>(j) * d.n_in;
          for (int i = 0; i < d.n_in; ++i) {
            const double w = wrow[i];
            const double* in = val + static_cast<std::size_t>(s.a + i) * nc;
            for (int k = 0; k < s.nv; ++k) out[k] += w * in[k];
          }
        }
        break;
      }
      case Stage::kTanh:
        for (int i = 0; i < s.n; ++i) {
          jetk::tanh_fwd(t, s.vord, val + static_cast<std::size_t>(s.a + i) * nc,
                         val + static_cast<std::size_t>(s.out + i) * nc,
                         ws.tanh_w.data() + static_cast<std::size_t>(s.aux + i) * nc,
                         ws.scratch.data());
        }
        break;
      case Stage::kMul:
        jetk::mul_fwd(t, s.nv, val + static_cast<std::size_t>(s.a) * nc,
                      val + static_cast<std::size_t>(s.b) * nc,
                      val + static_cast<std::size_t>(s.out) * nc);
        break;
      case Stage::kAdd: {
        const double* a = val + static_cast<std::size_t>(s.a) * nc;
        const double* b = val + static_cast<std::size_t>(s.b) * nc;
        double* out = val + static_cast<std::size_t>(s.out) * nc;
        for (int k = 0; k < s.nv; ++k) out[k] = a[k] + b[k];
        break;
      }
      case Stage::kSub: {
        const double* a = val + static_cast<std::size_t>(s.a) * nc;
        const double* b = val + static_cast<std::size_t>(s.b) * nc;
        double* out = val + static_cast<std::size_t>(s.out) * nc;
        for (int k = 0; k < s.nv; ++k) out[k] = a[k] - b[k];
        break;
      }
      case Stage::kScale: {
        const double* a = val + static_cast<std::size_t>(s.a) * nc;
        double* out = val + static_cast<std::size_t>(s.out) * nc;
        for (int k = 0; k < s.nv; ++k) out[k] = s.alpha * a[k];
        break;
      }
      case Stage::kShift:
        jetk::shift_fwd(t, s.nv, s.axis, val + static_cast<std::size_t>(s.a) * nc,
                        val + static_cast<std::size_t>(s.out) * nc);
        break;
      case Stage::kFn:
        fns_[s.aux](gpt, val + static_cast<std::size_t>(s.out) * nc);
        break;
    }
    if (checked) {
      const int width = s.kind == Stage::kInput || s.kind == Stage::kTanh
                            ? s.n
                            : (s.kind == Stage::kAffine ? layers_[s.layer].n_out : 1);
      for (int j = 0; j < width; ++j) {
        const double* out = val + static_cast<std::size_t>(s.out + j) * nc;
        for (int k = 0; k < s.nv; ++k)
          if (!std::isfinite(out[k]))
            throw std::runtime_error("non-finite value at node '" + stage_names_[si] +
                                     "' output " + std::to_string(j) + " (stage " +
                                     std::to_string(si) + ")");
      }
    }
  }
}

void TapeProgram::forward(TapeWorkspace& ws, const double* gpt, const double* params) const {
  run_forward(ws, gpt, params, false);
}

void TapeProgram::forward_checked(TapeWorkspace& ws, const double* gpt,
                                  const double* params) const {
  run_forward(ws, gpt, params, true);
}

bool TapeProgram::emitted_values_finite(const TapeWorkspace& ws) const {
  for (std::size_t i = 0; i < emitted_.size(); ++i)
    if (!std::isfinite(emitted_value(ws, static_cast<int>(i)))) return false;
  return true;
}

void TapeProgram::run_reverse(TapeWorkspace& ws, const double* params,
                              const std::vector<std::pair<int, double>>& seeds, double* grad,
                              bool checked) const {
  const JetTable& t = *tab_;
  const int nc = t.ncoef;
  double* val = ws.val.data();
  double* adj = ws.adj.data();
  std::memset(adj, 0, sizeof(double) * ws.adj.size());
  for (const auto& [ei, g] : seeds)
    adj[static_cast<std::size_t>(emitted_.at(ei).second) * nc] += g;

  for (std::size_t si = stages_.size(); si-- > 0;) {
    const Stage& s = stages_[si];
    switch (s.kind) {
      case Stage::kInput:
      case Stage::kFn:
        break;
      case Stage::kAffine: {
        const LayerDesc& d = layers_[s.layer];
        for (int j = 0; j < d.n_out; ++j) {
          const double* aout = adj + static_cast<std::size_t>(s.out + j) * nc;
          grad[d.b_off + j] += aout[0];
          const double* wrow = params + d.w_off + static_cast<std::size_t>(j) * d.n_in;
          double* grow = grad + d.w_off + static_cast<std::size_t>(j) * d.n_in;
          for (int i = 0; i < d.n_in; ++i) {
            const double* in = val + static_cast<std::size_t>(s.a + i) * nc;
            double* ain = adj + static_cast<std::size_t>(s.a + i) * nc;
            const double w = wrow[i];
            double dot = 0;
            for (int k = 0; k < s.nv; ++k) {
              dot += aout[k] * in[k];
              ain[k] += w * aout[k];
            }
            grow[i] += dot;
          }
        }
        break;
      }
      case Stage::kTanh:
        for (int i = 0; i < s.n; ++i)
          jetk::corr_rev(t, s.nv, ws.tanh_w.data() + static_cast<std::size_t>(s.aux + i) * nc,
                         adj + static_cast<std::size_t>(s.out + i) * nc,
                         adj + static_cast<std::size_t>(s.a + i) * nc);
        break;
      case Stage::kMul:
        jetk::mul_rev(t, s.nv, val + static_cast<std::size_t>(s.a) * nc,
                      val + static_cast<std::size_t>(s.b) * nc,
                      adj + static_cast<std::size_t>(s.out) * nc,
                      adj + static_cast<std::size_t>(s.a) * nc,
                      adj + static_cast<std::size_t>(s.b) * nc);
        break;
      case Stage::kAdd: {
        const double* aout = adj + static_cast<std::size_t>(s.out) * nc;
        double* aa = adj + static_cast<std::size_t>(s.a) * nc;
        double* ab = adj + static_cast<std::size_t>(s.b) * nc;
        for (int k = 0; k < s.nv; ++k) {
          aa[k] += aout[k];
          ab[k] += aout[k];
        }
        break;
      }
      case Stage::kSub: {
        const double* aout = adj + static_cast<std::size_t>(s.out) * nc;
        double* aa = adj + static_cast<std::size_t>(s.a) * nc;
        double* ab = adj + static_cast<std::size_t>(s.b) * nc;
        for (int k = 0; k < s.nv; ++k) {
          aa[k] += aout[k];
          ab[k] -= aout[k];
        }
        break;
      }
      case Stage::kScale: {
        const double* aout = adj + static_cast<std::size_t>(s.out) * nc;
        double* aa = adj + static_cast<std::size_t>(s.a) * nc;
        for (int k = 0; k < s.nv; ++k) aa[k] += s.alpha * aout[k];
        break;
      }
      case Stage::kShift:
        jetk::shift_rev(t, s.nv, s.axis, adj + static_cast<std::size_t>(s.out) * nc,
                        adj + static_cast<std::size_t>(s.a) * nc);
        break;
    }
    if (checked && s.a >= 0) {
      const int width = s.kind == Stage::kAffine
                            ? layers_[s.layer].n_in
                            : (s.kind == Stage::kTanh ? s.n : 1);
      for (int j = 0; j < width; ++j) {
        const double* ain = adj + static_cast<std::size_t>(s.a + j) * nc;
        for (int k = 0; k < nc; ++k)
          if (!std::isfinite(ain[k]))
            throw std::runtime_error("non-finite adjoint below node '" + stage_names_[si] +
                                     "' (stage " + std::to_string(si) + ")");
      }
    }
  }
}

void TapeProgram::reverse(TapeWorkspace& ws, const double* params,
                          const std::vector<std::pair<int, double>>& seeds, double* grad) const {
  run_reverse(ws, params, seeds, grad, false);
}

void TapeProgram::reverse_checked(TapeWorkspace& ws, const double* params,
                                  const std::vector<std::pair<int, double>>& seeds,
                                  double* grad) const {
  run_reverse(ws, params, seeds, grad, true);
}

std::vector<double> param_grad(const TapeProgram& prog, const MlpParams& params,
                               const double* gpt,
                               const std::vector<std::pair<int, double>>& seeds) {
  if (params.flat.size() != prog.nparams())
    throw std::invalid_argument("param_grad: parameter count does not match program");
  TapeWorkspace ws = prog.make_workspace();
  prog.forward(ws, gpt, params.flat.data());
  if (!prog.emitted_values_finite(ws))
    prog.forward_checked(ws, gpt, params.flat.data());

  std::vector<double> grad(prog.nparams(), 0.0);
  prog.reverse(ws, params.flat.data(), seeds, grad.data());
  for (double g : grad)
    if (!std::isfinite(g)) {
      std::vector<double> g2(prog.nparams(), 0.0);
      prog.reverse_checked(ws, params.flat.data(), seeds, g2.data());
      throw std::runtime_error("param_grad: poisoned gradient with finite node values");
    }
  return grad;
}

}  // namespace pinncert
