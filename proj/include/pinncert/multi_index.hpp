#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace pinncert {

// Dense coefficient tables for truncated multivariate Taylor expansions.
// Multi-indices are enumerated in graded lexicographic order: total degree
// ascending, ties broken lexicographically on (i0, i1, i2). All indices of
// degree <= d therefore form a prefix of the enumeration.
struct JetTable {
  int nvars = 0;
  int order = 0;
  int ncoef = 0;

  std::vector<std::array<std::uint8_t, 3>> idx;  // multi-index per coefficient
  std::vector<double> fact;                      // i0! * i1! * i2!
  std::vector<int> count_upto;                   // #indices with degree <= d, d = 0..order
  std::vector<int> degree;                       // total degree per coefficient

  // Product support: out[k] = sum over stored (i, j) pairs of a[i] * b[j].
  std::vector<int> pair_off;                 // ncoef + 1 offsets into pairs
  std::vector<std::pair<int, int>> pairs;    // ordered operand index pairs

  struct Shift {
    int src = -1;       // coefficient index of (idx + e_axis), -1 if above order
    double factor = 0;  // idx[axis] + 1
  };
  std::vector<std::array<Shift, 3>> shift;  // per coefficient, per axis

  // Coefficient index of a multi-index, -1 if out of range.
  int find(int i0, int i1 = 0, int i2 = 0) const {
    if (i0 < 0 || i1 < 0 || i2 < 0) return -1;
    if (i0 > order || i1 > order || i2 > order) return -1;
    int key = i0 + (order + 1) * (i1 + (order + 1) * i2);
    return lookup_[key];
  }

  static const JetTable& get(int nvars, int order);

  std::vector<int> lookup_;
};

constexpr int kMaxJetVars = 3;
constexpr int kMaxJetOrder = 6;

}  // namespace pinncert
