#include "bwdep/rng.hpp"

#include <numeric>

#include "bwdep/estimation.hpp"

namespace bwdep {

double Rng::normal() { return normal_quantile(uniform()); }

std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(splitmix64(seed));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace bwdep
