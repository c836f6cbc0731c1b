#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace mimo {

// Counter-based splittable PRNG. Every stochastic routine in the library
// takes an explicit seed and derives independent substreams from it, so
// Monte Carlo sweeps are reproducible and trial loops can be fanned out
// across workers without changing the numbers.
//
// The core is the splitmix64 finalizer applied to key + i*GOLDEN; substreams
// re-key with a second mix so (seed, stream-id) pairs do not collide.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_key(seed, stream)) {}

  /// Independent child stream. Stable under the call sequence of the parent.
  SplitRng substream(std::uint64_t id) const {
    SplitRng child(0);
    child.key_ = derive_key(key_, id ^ 0x5851f42d4c957f2dULL);
    return child;
  }

  std::uint64_t next_u64() { return finalize(key_ + (++ctr_) * kGolden); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; second variate is cached.
  double gaussian();

  /// Rademacher: -1 or +1 with equal probability.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  /// Uniform point on the unit sphere S^{dim-1}.
  std::vector<double> unit_sphere(std::size_t dim);

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t a = finalize(seed + kGolden);
    std::uint64_t b = finalize(stream + 0xda942042e4dd58b5ULL);
    return finalize(a ^ (b + kGolden + (a << 6) + (a >> 2)));
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mimo
