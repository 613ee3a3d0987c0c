#pragma once

// Seeded uniform sampling. Doubles are derived from raw mt19937_64 bits so
// streams do not depend on the standard library's distribution
// implementations.

#include <cstdint>
#include <random>

namespace biftune {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace biftune
