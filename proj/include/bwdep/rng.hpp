#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bwdep {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of the stream used by replicate r of a run with the given master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t r) {
  return splitmix64(splitmix64(master) ^ (r + 0x632BE59BD9B4E019ULL));
}

// mt19937_64 output is fixed by the standard; the transforms below are ours,
// so draws are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double normal();  // inverse-CDF transform of uniform()
  // Uniform integer in [0, m).
  std::uint64_t below(std::uint64_t m) {
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % m);
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % m;
  }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<int> seeded_permutation(int n, std::uint64_t seed);

}  // namespace bwdep
