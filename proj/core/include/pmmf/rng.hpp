#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace pmmf {

/// Derives the seed of replicate `index` from a root seed (splitmix64 finalizer).
std::uint64_t split_seed(std::uint64_t root, std::uint64_t index);

/// Per-call random stream. Models never own one; callers pass it in.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() { return normal_(engine_); }
  /// Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pmmf
