#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace intdiff {

std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic child seed from a master seed and a path of indices, e.g.
/// (master, grid point, replication, substream).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace intdiff
