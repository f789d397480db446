#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afford {

// SplitMix64 stream. Used everywhere seeded values are produced so results are
// bit-identical across platforms and standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// FNV-1a, 64-bit.
std::uint64_t hash64(const std::string& s);

// Deterministic named sub-seed so independent components never share a stream.
std::uint64_t derive_seed(std::uint64_t master, const std::string& tag);

}  // namespace afford
