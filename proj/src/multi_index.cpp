#include "pinncert/multi_index.hpp"

#include <mutex>
#include <stdexcept>

namespace pinncert {

namespace {

JetTable build_table(int nvars, int order) {
  JetTable t;
  t.nvars = nvars;
  t.order = order;

  for (int d = 0; d <= order; ++d) {
    if (nvars == 1) {
      t.idx.push_back({static_cast<std::uint8_t>(d), 0, 0});
    } else if (nvars == 2) {
      for (int i0 = 0; i0 <= d; ++i0)
        t.idx.push_back({static_cast<std::uint8_t>(i0), static_cast<std::uint8_t>(d - i0), 0});
    } else {
      for (int i0 = 0; i0 <= d; ++i0)
        for (int i1 = 0; i1 + i0 <= d; ++i1)
          t.idx.push_back({static_cast<std::uint8_t>(i0), static_cast<std::uint8_t>(i1),
                           static_cast<std::uint8_t>(d - i0 - i1)});
    }
    t.count_upto.push_back(static_cast<int>(t.idx.size()));
  }
  t.ncoef = static_cast<int>(t.idx.size());

  t.lookup_.assign((order + 1) * (order + 1) * (order + 1), -1);
  for (int k = 0; k < t.ncoef; ++k) {
    const auto& m = t.idx[k];
    t.lookup_[m[0] + (order + 1) * (m[1] + (order + 1) * m[2])] = k;
  }

  auto factorial = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  for (int k = 0; k < t.ncoef; ++k) {
    const auto& m = t.idx[k];
    t.fact.push_back(factorial(m[0]) * factorial(m[1]) * factorial(m[2]));
    t.degree.push_back(m[0] + m[1] + m[2]);
  }

  t.pair_off.push_back(0);
  for (int k = 0; k < t.ncoef; ++k) {
    const auto& m = t.idx[k];
    for (int i = 0; i < t.ncoef; ++i) {
      const auto& a = t.idx[i];
      if (a[0] > m[0] || a[1] > m[1] || a[2] > m[2]) continue;
      int j = t.find(m[0] - a[0], m[1] - a[1], m[2] - a[2]);
      t.pairs.emplace_back(i, j);
    }
    t.pair_off.push_back(static_cast<int>(t.pairs.size()));
  }

  t.shift.resize(t.ncoef);
  for (int k = 0; k < t.ncoef; ++k) {
    const auto& m = t.idx[k];
    for (int axis = 0; axis < 3; ++axis) {
      JetTable::Shift s;
      if (axis < nvars && t.degree[k] + 1 <= order) {
        int src = t.find(m[0] + (axis == 0), m[1] + (axis == 1), m[2] + (axis == 2));
        s.src = src;
        s.factor = m[axis] + 1.0;
      }
      t.shift[k][axis] = s;
    }
  }
  return t;
}

}  // namespace

const JetTable& JetTable::get(int nvars, int order) {
  if (nvars < 1 || nvars > kMaxJetVars)
    throw std::invalid_argument("JetTable: variable count must be 1..3");
  if (order < 0 || order > kMaxJetOrder)
    throw std::invalid_argument("JetTable: order must be 0..6");

  static std::once_flag once;
  static std::vector<JetTable> cache;
  std::call_once(once, [] {
    cache.reserve(kMaxJetVars * (kMaxJetOrder + 1));
    for (int m = 1; m <= kMaxJetVars; ++m)
      for (int n = 0; n <= kMaxJetOrder; ++n) cache.push_back(build_table(m, n));
  });
  return cache[(nvars - 1) * (kMaxJetOrder + 1) + order];
}

}  // namespace pinncert
