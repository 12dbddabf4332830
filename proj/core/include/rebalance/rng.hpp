#pragma once

#include <cstdint>
#include <cmath>
#include <cstddef>
#include <string_view>
#include <vector>

namespace rebalance {

// splitmix64, used both as a seed mixer and as the basis of hash64 below.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive combine of integers/strings into one 64-bit seed.
// Used to derive independent per-cell / per-trial seed streams.
class SeedHasher {
 public:
  explicit SeedHasher(std::uint64_t root = 0) : state_(root) { mix(0x8c93'97f1'1f6a'd2c5ULL); }

  SeedHasher& mix(std::uint64_t v) {
    state_ ^= v + 0x9e3779b97f4a7c15ULL + (state_ << 6) + (state_ >> 2);
    std::uint64_t s = state_;
    state_ = splitmix64(s);
    return *this;
  }
  SeedHasher& mix(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return mix(h);
  }
  std::uint64_t finish() const { return state_; }

 private:
  std::uint64_t state_;
};

template <class... Parts>
std::uint64_t hash64(std::uint64_t root, Parts&&... parts) {
  SeedHasher h(root);
  (h.mix(parts), ...);
  return h.finish();
}

// Deterministic generator with hand-rolled distributions. The raw stream is
// xoshiro256**; uniform/normal/int draws are implemented here so results are
// identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
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

  // uniform in [0, 1) with 53 random mantissa bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), unbiased (rejection)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive bounds
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // standard normal via Box-Muller (no cached spare: keeps the stream
  // position a pure function of the number of draws)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // independent child stream; deterministic function of parent seed + key
  Rng split(std::uint64_t key) const {
    SeedHasher h(s_[0] ^ s_[3]);
    h.mix(s_[1]).mix(s_[2]).mix(key);
    return Rng(h.finish());
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace rebalance
