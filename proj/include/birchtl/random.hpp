#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace birchtl {

// Seeded generator with a fully specified output sequence: mt19937_64 raw
// words, 53-bit uniform doubles, Box-Muller normals and
// rejection sampling for bounded integers. Unlike the <random> distributions
// the results do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  double normal();

  // Fisher-Yates shuffle of [0, n).
  std::vector<std::size_t> permutation(std::size_t n);

  // `count` distinct indices out of [0, n) in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace birchtl
