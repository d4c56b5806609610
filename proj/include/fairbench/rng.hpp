#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fairbench {

// SplitMix64 step; used only to derive engine state from (seed, stream).
inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Substream ids. Every randomized pipeline stage owns a fixed id, so adding a
// stage never shifts the draws of an existing one. Per-epoch dropout gets
// kDropoutBase + epoch; per-type rebalance surgery gets kRemoveBase/kAddBase
// + edge type index.
namespace stream {
constexpr std::uint64_t kGroups = 1;
constexpr std::uint64_t kFeatures = 2;
constexpr std::uint64_t kEdges = 3;
constexpr std::uint64_t kSplits = 4;
constexpr std::uint64_t kParamInit = 10;
constexpr std::uint64_t kRemoveBase = 100;
constexpr std::uint64_t kAddBase = 200;
constexpr std::uint64_t kDropoutBase = 1u << 20;
}  // namespace stream

// xoshiro256** seeded through SplitMix64. The generator is fully specified
// here, so sequences are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed ^ (stream * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
    s_[0] = splitmix64(x);
    s_[1] = splitmix64(x);
    s_[2] = splitmix64(x);
    s_[3] = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // all-zero state is invalid
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0,1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0,1], safe as log() argument
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // unbiased integer in [0,bound)
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // standard normal via Box-Muller; the paired draw is cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // inverse-CDF categorical draw; probs need not be exactly normalized,
  // the final bucket absorbs rounding residue
  int categorical(const double* probs, int k) {
    const double u = uniform();
    double cum = 0.0;
    for (int i = 0; i < k; ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    for (int i = k - 1; i >= 0; --i) {
      if (probs[i] > 0.0) return i;
    }
    throw std::invalid_argument("categorical: all probabilities are zero");
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0,n), uniform without replacement (partial Fisher-Yates)
  std::vector<std::int64_t> sample_indices(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_indices: k out of range");
    std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < k; ++i) {
      const std::int64_t j =
          i + static_cast<std::int64_t>(uniform_below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fairbench
