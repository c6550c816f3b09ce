#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "pinncert/harness.hpp"
#include "pinncert/kernels.hpp"

using namespace pinncert;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main() {
  const auto prob = Problem::make(ProblemId::heat);
  MlpParams params = init_mlp({2, 20, 20, 1}, 7);
  const auto progs = prob->build_programs(ResidualKind::eq, 2, params, false);
  const TapeProgram& prog = progs.front();
  const Grid g = midpoint_grid(prob->kinds()[0].programs[0].grid_box, {64, 64, 1});
  const std::size_t np = params.flat.size();
  const double cv = g.cell_volume();

  const BlockWorker worker = [&](std::size_t b, std::size_t e, double* acc) {
    TapeWorkspace ws = prog.make_workspace();
    std::vector<std::pair<int, double>> seeds;
    double gpt[3] = {0, 0, 0};
    for (std::size_t i = b; i < e; ++i) {
      g.point(i, gpt);
      prog.forward(ws, gpt, params.flat.data());
      seeds.clear();
      const double v = prog.emitted_value(ws, 0);
      acc[0] += v * v;
      seeds.emplace_back(0, 2.0 * cv * v);
      prog.reverse(ws, params.flat.data(), seeds, acc + 1);
    }
  };

  std::vector<double> par(1 + np), ser(1 + np);
  const int reps = 20;

  double best_par = 1e300, best_ser = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    blocked_sum(g.total(), static_cast<int>(1 + np), par.data(), worker);
    best_par = std::min(best_par, now_s() - t0);
  }
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    blocked_sum_serial(g.total(), static_cast<int>(1 + np), ser.data(), worker);
    best_ser = std::min(best_ser, now_s() - t0);
  }

  const bool identical =
      std::memcmp(par.data(), ser.data(), sizeof(double) * (1 + np)) == 0;
  std::printf("points             %zu\n", g.total());
  std::printf("accumulators       %zu\n", 1 + np);
  std::printf("parallel best      %.3f ms\n", best_par * 1e3);
  std::printf("serial best        %.3f ms\n", best_ser * 1e3);
  std::printf("speedup            %.2fx\n", best_ser / best_par);
  std::printf("bitwise identical  %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
