// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace semguide {

/// SplitMix64 counter RNG. Self-contained so that streams are reproducible
/// byte-for-byte across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi_inclusive - lo + 1));
  }

  /// Standard normal via Box-Muller (fresh pair each call, no cached state).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// FNV-1a over arbitrary bytes; used for parameter content hashes and for
/// deriving independent per-name RNG streams from a base seed.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

/// Per-name stream: the draw order of one parameter never shifts another's.
inline Rng named_stream(std::uint64_t base_seed, std::string_view name) {
  std::uint64_t h = fnv1a(name);
  h ^= base_seed + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return Rng(h);
}

}  // namespace semguide
