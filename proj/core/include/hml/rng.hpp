#ifndef HML_RNG_HPP
#define HML_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hml {

/// splitmix64 step, used to decorrelate (seed, stream) pairs before seeding
/// the main engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic random source. All distributions are implemented by hand on
/// top of mt19937_64 so sequences are identical across standard libraries.
class Rng {
 public:
  /// Distinct streams derived from one user seed stay decorrelated; the same
  /// (seed, stream) pair always yields the same sequence.
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed ^ (0x632BE59BD9B4E019ULL * (stream + 1));
    std::seed_seq seq{static_cast<unsigned>(splitmix64(s)), static_cast<unsigned>(splitmix64(s)),
                      static_cast<unsigned>(splitmix64(s)), static_cast<unsigned>(splitmix64(s))};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0,n). Rejection sampling keeps the result unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller. No caching of the second variate, so the
  /// draw count per call is fixed.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates shuffle, driven by uniform_int so results are portable.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hml

#endif  // HML_RNG_HPP
