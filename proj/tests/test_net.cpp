#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pinncert/net.hpp"

using namespace pinncert;

namespace {

double rel_err(double got, double want) {
  return std::fabs(got - want) / (1.0 + std::fabs(want));
}

std::filesystem::path temp_file(const char* stem) {
  return std::filesystem::temp_directory_path() / stem;
}

}  // namespace

TEST_CASE("layer size validation") {
  CHECK_THROWS_AS(init_mlp({3}, 1), std::invalid_argument);
  CHECK_THROWS_WITH(init_mlp({2, 0, 1}, 1), doctest::Contains("zero or negative layer size"));
  CHECK_THROWS_AS(init_mlp({2, -4, 1}, 1), std::invalid_argument);
}

TEST_CASE("initialization is reproducible per seed with zero biases in bound") {
  MlpParams a = init_mlp({2, 7, 3}, 42);
  MlpParams b = init_mlp({2, 7, 3}, 42);
  MlpParams c = init_mlp({2, 7, 3}, 43);
  CHECK(a.flat == b.flat);
  CHECK(a.flat != c.flat);
  CHECK(a.seed == 42);
  REQUIRE(a.layers.size() == 2);
  CHECK(a.flat.size() == std::size_t(2 * 7 + 7 + 7 * 3 + 3));

  const double bound0 = std::sqrt(6.0 / (2 + 7));
  for (std::size_t k = 0; k < std::size_t(2 * 7); ++k) {
    CHECK(std::fabs(a.flat[a.layers[0].w_off + k]) <= bound0);
  }
  for (int j = 0; j < 7; ++j) CHECK(a.flat[a.layers[0].b_off + j] == 0.0);
  double spread = 0;
  for (std::size_t k = 0; k < std::size_t(2 * 7); ++k)
    spread = std::max(spread, std::fabs(a.flat[a.layers[0].w_off + k]));
  CHECK(spread > 0.1 * bound0);
}

TEST_CASE("zeroed parameters give the zero function") {
  MlpParams p = init_mlp({2, 5, 1}, 3);
  for (double& v : p.flat) v = 0.0;
  double in[2] = {0.4, -1.1}, out = 7.0;
  mlp_forward(p, in, &out);
  CHECK(out == 0.0);

  const JetTable& tab = JetTable::get(2, 2);
  std::vector<Jet> ins = {Jet::variable(tab, {0.4, -1.1, 0.0}, 0),
                          Jet::variable(tab, {0.4, -1.1, 0.0}, 1)};
  std::vector<Jet> outs = mlp_forward_jets(p, ins);
  REQUIRE(outs.size() == 1);
  for (int k = 0; k < tab.ncoef; ++k) CHECK(outs[0].coeff(k) == 0.0);
}

TEST_CASE("jet evaluation matches plain evaluation and finite differences") {
  MlpParams p = init_mlp({2, 8, 6, 2}, 17);
  const std::array<double, 3> pt = {0.3, -0.5, 0.0};
  const JetTable& tab = JetTable::get(2, 2);
  std::vector<Jet> ins = {Jet::variable(tab, pt, 0), Jet::variable(tab, pt, 1)};
  std::vector<Jet> outs = mlp_forward_jets(p, ins);
  REQUIRE(outs.size() == 2);

  const auto plain = [&](double x, double y, int comp) {
    double in[2] = {x, y}, out[2];
    mlp_forward(p, in, out);
    return out[comp];
  };

  const double h = 1e-4;
  for (int comp = 0; comp < 2; ++comp) {
    CHECK(rel_err(outs[comp].partial(0, 0), plain(pt[0], pt[1], comp)) < 1e-14);
    double fx = (plain(pt[0] + h, pt[1], comp) - plain(pt[0] - h, pt[1], comp)) / (2 * h);
    double fy = (plain(pt[0], pt[1] + h, comp) - plain(pt[0], pt[1] - h, comp)) / (2 * h);
    double fxx = (plain(pt[0] + h, pt[1], comp) - 2 * plain(pt[0], pt[1], comp) +
                  plain(pt[0] - h, pt[1], comp)) / (h * h);
    double fxy = (plain(pt[0] + h, pt[1] + h, comp) - plain(pt[0] + h, pt[1] - h, comp) -
                  plain(pt[0] - h, pt[1] + h, comp) + plain(pt[0] - h, pt[1] - h, comp)) /
                 (4 * h * h);
    CHECK(rel_err(outs[comp].partial(1, 0), fx) < 1e-6);
    CHECK(rel_err(outs[comp].partial(0, 1), fy) < 1e-6);
    CHECK(rel_err(outs[comp].partial(2, 0), fxx) < 1e-4);
    CHECK(rel_err(outs[comp].partial(1, 1), fxy) < 1e-4);
  }
}

TEST_CASE("jet inputs must agree on table and expansion point") {
  MlpParams p = init_mlp({2, 3, 1}, 1);
  const JetTable& tab = JetTable::get(2, 2);
  std::vector<Jet> mixed_pt = {Jet::variable(tab, {0.0, 0.0, 0.0}, 0),
                               Jet::variable(tab, {1.0, 0.0, 0.0}, 1)};
  CHECK_THROWS_WITH(mlp_forward_jets(p, mixed_pt), doctest::Contains("different points"));

  std::vector<Jet> wrong_count = {Jet::variable(tab, {0.0, 0.0, 0.0}, 0)};
  CHECK_THROWS_WITH(mlp_forward_jets(p, wrong_count), doctest::Contains("first layer"));
}

TEST_CASE("table accessor rejects orders beyond the supported cap") {
  CHECK_THROWS_AS(JetTable::get(1, 7), std::invalid_argument);
  CHECK_THROWS_AS(JetTable::get(4, 2), std::invalid_argument);
  CHECK_NOTHROW(JetTable::get(3, 6));
}

TEST_CASE("adam with zero gradient leaves parameters in place") {
  MlpParams p = init_mlp({1, 4, 1}, 8);
  std::vector<double> before = p.flat;
  AdamState st;
  std::vector<double> grad(p.flat.size(), 0.0);
  adam_step(p, grad, st);
  adam_step(p, grad, st);
  CHECK(p.flat == before);
  CHECK(st.step_count == 2);
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  MlpParams p = init_mlp({1, 4, 1}, 8);
  AdamState st;
  std::vector<double> g1(p.flat.size(), 0.01);
  adam_step(p, g1, st);
  std::vector<double> params_after = p.flat;
  std::vector<double> m_after = st.m, v_after = st.v;

  std::vector<double> g2(p.flat.size(), 0.01);
  g2[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam_step(p, g2, st), doctest::Contains("non-finite gradient"),
                       std::runtime_error);
  CHECK(p.flat == params_after);
  CHECK(st.m == m_after);
  CHECK(st.v == v_after);
  CHECK(st.step_count == 1);
}

TEST_CASE("adam first step moves each coordinate by about the learning rate") {
  MlpParams p = init_mlp({1, 2, 1}, 9);
  std::vector<double> before = p.flat;
  AdamState st;
  st.lr = 1e-3;
  std::vector<double> grad(p.flat.size(), 0.5);
  adam_step(p, grad, st);
  for (std::size_t k = 0; k < p.flat.size(); ++k) {
    CHECK(rel_err(before[k] - p.flat[k], st.lr) < 1e-6);
  }
}

TEST_CASE("checkpoints round-trip parameters, sizes, seed, and epoch") {
  MlpParams p = init_mlp({2, 6, 3}, 123);
  const auto path = temp_file("pinncert_ckpt_test.pnck");
  save_checkpoint(path.string(), p, 777);

  std::uint32_t epoch = 0;
  MlpParams q = load_checkpoint(path.string(), &epoch);
  CHECK(epoch == 777);
  CHECK(q.sizes == p.sizes);
  CHECK(q.seed == p.seed);
  CHECK(q.flat == p.flat);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  MlpParams p = init_mlp({1, 2, 1}, 5);
  const auto path = temp_file("pinncert_ckpt_bad.pnck");
  save_checkpoint(path.string(), p, 1);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_WITH(load_checkpoint(path.string(), nullptr), doctest::Contains("bad magic"));

  save_checkpoint(path.string(), p, 1);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  CHECK_THROWS_WITH(load_checkpoint(path.string(), nullptr),
                    doctest::Contains("unsupported version"));

  save_checkpoint(path.string(), p, 1);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_WITH(load_checkpoint(path.string(), nullptr), doctest::Contains("short read"));
  std::filesystem::remove(path);
}
