#ifndef PROBEKIT_RNG_H_
#define PROBEKIT_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace probekit {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr uint64_t Fnv1a64(std::string_view bytes,
                           uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer, used to combine hash inputs into RNG seeds.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t HashCombine(uint64_t a, uint64_t b) {
  return Mix64(a ^ Mix64(b));
}

// Uniform integer in [0, n). n must be positive.
inline size_t UniformIndex(Rng& rng, size_t n) {
  return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

}  // namespace probekit

#endif  // PROBEKIT_RNG_H_
