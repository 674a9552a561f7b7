#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <gtest/gtest.h>

namespace intdiff::testing {

// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : e_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(e_); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(e_); }
  std::uint64_t seed() { return e_(); }

 private:
  std::mt19937_64 e_;
};

// Runs `prop(gen, case_index)` for `cases` generated cases; failures report the case.
template <class Prop>
void for_all(int cases, std::uint64_t seed, Prop prop) {
  Gen g(seed);
  for (int c = 0; c < cases; ++c) {
    SCOPED_TRACE("property case " + std::to_string(c));
    prop(g, c);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace intdiff::testing
