#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qebm {

// splitmix64, used to expand one user seed into independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// One engine per named stream: equal (seed, name, index) always yields the
// same sequence, distinct streams are decorrelated.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  std::uint64_t s = seed ^ fnv1a(name);
  s ^= 0x5851f42d4c957f2dULL * (index + 1);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// [0,1) with 53 random bits; avoids std::uniform_real_distribution, whose
// output is implementation-defined.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Marsaglia polar method; deterministic given the engine state.
inline double standard_normal(std::mt19937_64& eng) {
  for (;;) {
    double u = 2.0 * uniform01(eng) - 1.0;
    double v = 2.0 * uniform01(eng) - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

// Unbiased integer in [0, n).
inline std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n) {
  std::uint64_t lim = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= lim);
  return x % n;
}

}  // namespace qebm
