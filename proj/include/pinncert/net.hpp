#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pinncert/jet.hpp"

namespace pinncert {

struct LayerDesc {
  int n_in = 0;
  int n_out = 0;
  std::size_t w_off = 0;  // row-major [n_out][n_in]
  std::size_t b_off = 0;
};

// Fully connected tanh network; the last layer is affine with identity
// output. All parameters live in one flat vector.
struct MlpParams {
  std::vector<int> sizes;
  std::vector<LayerDesc> layers;
  std::vector<double> flat;
  std::uint64_t seed = 0;

  std::size_t count() const { return flat.size(); }
};

// Xavier uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
// Weights are drawn layer by layer in row-major order from Rng(seed).
MlpParams init_mlp(const std::vector<int>& sizes, std::uint64_t seed);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  std::vector<double> m, v;
};

// One full-batch update with bias-corrected moments. A non-finite gradient
// entry rejects the whole step: parameters and moments stay untouched.
void adam_step(MlpParams& p, const std::vector<double>& grad, AdamState& st);

// Plain value evaluation; in holds sizes.front() entries, out receives
// sizes.back() entries.
void mlp_forward(const MlpParams& p, const double* in, double* out);

// Network evaluation on jet inputs; inputs must all share one expansion
// point and one coefficient table, with exactly sizes.front() entries.
std::vector<Jet> mlp_forward_jets(const MlpParams& p, const std::vector<Jet>& inputs);

// Versioned binary snapshot: layer sizes, init seed, epoch, parameters.
void save_checkpoint(const std::string& path, const MlpParams& p, std::uint32_t epoch);
MlpParams load_checkpoint(const std::string& path, std::uint32_t* epoch_out);

}  // namespace pinncert
