#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pxp {

// Deterministic RNG used everywhere randomness is needed. The raw engine is
// std::mt19937_64, but all derived quantities (uniforms, normals, shuffles)
// are produced by our own fixed recipes so that results are bit-stable
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0,1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the polar (Marsaglia) method; one spare cached.
  double normal();

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 step; used to derive independent stream seeds from a master
// seed without correlating the child engines.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for substream `stream` of master seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pxp
