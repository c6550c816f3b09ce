#pragma once

#include <cstdint>
#include <random>

namespace pinncert {

// Deterministic uniform draws with a fixed bit-to-double mapping, so streams
// are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pinncert
