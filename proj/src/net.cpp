#include "pinncert/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "pinncert/rng.hpp"

namespace pinncert {

MlpParams init_mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("init_mlp: need at least two layer sizes");
  for (int s : sizes)
    if (s <= 0) throw std::invalid_argument("init_mlp: zero or negative layer size");

  MlpParams p;
  p.sizes = sizes;
  p.seed = seed;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    LayerDesc d;
    d.n_in = sizes[l];
    d.n_out = sizes[l + 1];
    d.w_off = off;
    off += static_cast<std::size_t>(d.n_in) * d.n_out;
    d.b_off = off;
    off += d.n_out;
    p.layers.push_back(d);
  }
  p.flat.assign(off, 0.0);

  Rng rng(seed);
  for (const auto& d : p.layers) {
    const double bound = std::sqrt(6.0 / (d.n_in + d.n_out));
    for (int i = 0; i < d.n_in * d.n_out; ++i)
      p.flat[d.w_off + i] = rng.uniform(-bound, bound);
  }
  return p;
}

void adam_step(MlpParams& p, const std::vector<double>& grad, AdamState& st) {
  const std::size_t n = p.flat.size();
  if (grad.size() != n) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (st.m.empty()) {
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
  }
  if (st.m.size() != n) throw std::invalid_argument("adam_step: moment size mismatch");

  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(grad[i]))
      throw std::runtime_error("adam_step: non-finite gradient, step rejected");

  st.step_count += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  for (std::size_t i = 0; i < n; ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    p.flat[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

void mlp_forward(const MlpParams& p, const double* in, double* out) {
  std::vector<double> cur(in, in + p.sizes.front());
  std::vector<double> next;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& d = p.layers[l];
    next.assign(static_cast<std::size_t>(d.n_out), 0.0);
    for (int j = 0; j < d.n_out; ++j) {
      double acc = p.flat[d.b_off + j];
      const double* w = p.flat.data() + d.w_off + static_cast<std::size_t>(j) * d.n_in;
      for (int i = 0; i < d.n_in; ++i) acc += w[i] * cur[i];
      next[j] = l + 1 < p.layers.size() ? std::tanh(acc) : acc;
    }
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), out);
}

std::vector<Jet> mlp_forward_jets(const MlpParams& p, const std::vector<Jet>& inputs) {
  if (static_cast<int>(inputs.size()) != p.sizes.front())
    throw std::invalid_argument("mlp_forward_jets: input count does not match first layer");
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    if (&inputs[i].table() != &inputs[0].table())
      throw std::invalid_argument("mlp_forward_jets: inputs use different coefficient tables");
    if (inputs[i].point() != inputs[0].point())
      throw std::invalid_argument("mlp_forward_jets: inputs expanded at different points");
  }

  std::vector<Jet> cur = inputs;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& d = p.layers[l];
    std::vector<Jet> next;
    next.reserve(d.n_out);
    for (int j = 0; j < d.n_out; ++j) {
      Jet acc = Jet::constant(inputs[0].table(), inputs[0].point(), p.flat[d.b_off + j]);
      acc.clamp_valid(cur[0].valid_order());
      for (int i = 0; i < d.n_in; ++i)
        acc += p.flat[d.w_off + static_cast<std::size_t>(j) * d.n_in + i] * cur[i];
      if (l + 1 < p.layers.size()) acc = tanh(acc);
      next.push_back(std::move(acc));
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

constexpr char kMagic[4] = {'P', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n) throw std::runtime_error("checkpoint: short write");
}
void read_bytes(std::FILE* f, void* p, std::size_t n) {
  if (std::fread(p, 1, n, f) != n) throw std::runtime_error("checkpoint: short read");
}

}  // namespace

void save_checkpoint(const std::string& path, const MlpParams& p, std::uint32_t epoch) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  try {
    write_bytes(f, kMagic, 4);
    write_bytes(f, &kVersion, 4);
    const std::uint32_t nsizes = static_cast<std::uint32_t>(p.sizes.size());
    write_bytes(f, &nsizes, 4);
    for (int s : p.sizes) {
      const std::uint32_t u = static_cast<std::uint32_t>(s);
      write_bytes(f, &u, 4);
    }
    write_bytes(f, &p.seed, 8);
    write_bytes(f, &epoch, 4);
    const std::uint64_t n = p.flat.size();
    write_bytes(f, &n, 8);
    write_bytes(f, p.flat.data(), sizeof(double) * p.flat.size());
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
}

MlpParams load_checkpoint(const std::string& path, std::uint32_t* epoch_out) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  MlpParams p;
  try {
    char magic[4];
    read_bytes(f, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
      throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    read_bytes(f, &version, 4);
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    std::uint32_t nsizes = 0;
    read_bytes(f, &nsizes, 4);
    std::vector<int> sizes(nsizes);
    for (auto& s : sizes) {
      std::uint32_t u = 0;
      read_bytes(f, &u, 4);
      s = static_cast<int>(u);
    }
    std::uint64_t seed = 0;
    std::uint32_t epoch = 0;
    std::uint64_t nparams = 0;
    read_bytes(f, &seed, 8);
    read_bytes(f, &epoch, 4);
    read_bytes(f, &nparams, 8);

    p = init_mlp(sizes, seed);
    if (nparams != p.flat.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
    read_bytes(f, p.flat.data(), sizeof(double) * p.flat.size());
    if (epoch_out) *epoch_out = epoch;
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return p;
}

}  // namespace pinncert
