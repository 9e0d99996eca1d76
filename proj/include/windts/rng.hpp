#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace windts {

// splitmix64: cheap stateless mixer, used to derive independent seeds and
// counter-based streams from one run seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform in [0,1) from a counter; no state, so evaluation order is irrelevant.
inline double counter_uniform(std::uint64_t key, std::uint64_t index) {
  const std::uint64_t bits = splitmix64(key ^ splitmix64(index + 1));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Seeded streaming RNG for everything that is naturally sequential
// (synthetic data, init, shuffles). One engine per logical stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double std = 1.0) {
    return std::normal_distribution<double>(mean, std)(engine_);
  }
  // Normal truncated to |x - mean| <= 2*std, by rejection.
  double truncated_normal(double mean, double std) {
    for (;;) {
      const double x = normal(0.0, 1.0);
      if (std::fabs(x) <= 2.0) return mean + x * std;
    }
  }
  std::uint64_t next_u64() { return engine_(); }
  // Integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::swap(xs[i - 1], xs[below(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace windts
