#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pinncert/kernels.hpp"

using namespace pinncert;

namespace {

double item_value(std::size_t i, int k) {
  return std::sin(0.001 * double(i) + k) * std::cos(0.0007 * double(i));
}

BlockWorker sum_worker(int nacc) {
  return [nacc](std::size_t begin, std::size_t end, double* acc) {
    for (std::size_t i = begin; i < end; ++i)
      for (int k = 0; k < nacc; ++k) acc[k] += item_value(i, k);
  };
}

BlockWorker max_worker(int nacc) {
  return [nacc](std::size_t begin, std::size_t end, double* acc) {
    for (std::size_t i = begin; i < end; ++i)
      for (int k = 0; k < nacc; ++k) acc[k] = std::max(acc[k], std::fabs(item_value(i, k)));
  };
}

}  // namespace

TEST_CASE("parallel and serial sums agree bitwise") {
  const std::size_t n = 10007;
  const int nacc = 5;
  for (std::size_t block : {std::size_t(1), std::size_t(7), kReduceBlock, std::size_t(4096)}) {
    std::vector<double> par(nacc), ser(nacc);
    blocked_sum(n, nacc, par.data(), sum_worker(nacc), block);
    blocked_sum_serial(n, nacc, ser.data(), sum_worker(nacc), block);
    CHECK(std::memcmp(par.data(), ser.data(), sizeof(double) * nacc) == 0);
  }
}

TEST_CASE("thread count does not change the folded result") {
#ifdef _OPENMP
  const std::size_t n = 5001;
  const int nacc = 3;
  std::vector<double> a(nacc), b(nacc);
  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  blocked_sum(n, nacc, a.data(), sum_worker(nacc));
  omp_set_num_threads(4);
  blocked_sum(n, nacc, b.data(), sum_worker(nacc));
  omp_set_num_threads(saved);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * nacc) == 0);
#endif
}

TEST_CASE("blocked sum agrees with a naive accumulation") {
  const std::size_t n = 2500;
  double out = 0;
  blocked_sum(n, 1, &out, sum_worker(1));
  double naive = 0;
  for (std::size_t i = 0; i < n; ++i) naive += item_value(i, 0);
  CHECK(out == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("blocked max finds the true maximum of nonnegative values") {
  const std::size_t n = 3000;
  const int nacc = 2;
  std::vector<double> out(nacc);
  blocked_max(n, nacc, out.data(), max_worker(nacc));
  for (int k = 0; k < nacc; ++k) {
    double naive = 0;
    for (std::size_t i = 0; i < n; ++i) naive = std::max(naive, std::fabs(item_value(i, k)));
    CHECK(out[k] == naive);
  }

  std::vector<double> ser(nacc);
  blocked_max_serial(n, nacc, ser.data(), max_worker(nacc));
  CHECK(std::memcmp(out.data(), ser.data(), sizeof(double) * nacc) == 0);
}

TEST_CASE("empty ranges fold to zero") {
  double out = 99;
  blocked_sum(0, 1, &out, sum_worker(1));
  CHECK(out == 0.0);
  blocked_max(0, 1, &out, max_worker(1));
  CHECK(out == 0.0);
}

TEST_CASE("partial blocks at the tail are included") {
  const std::size_t n = kReduceBlock * 3 + 17;
  double out = 0;
  blocked_sum(n, 1, &out, [](std::size_t begin, std::size_t end, double* acc) {
    acc[0] += double(end - begin);
  });
  CHECK(out == double(n));
}
