#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ordinal {

// Deterministic random source. The mt19937_64 engine is fully specified by the
// standard, so equal seeds give equal streams on every platform; the standard
// distribution adaptors are not specified, which is why the transforms below
// are written out by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform on [0, 1). 53 random bits, so the result is never exactly 1.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1), safe as a log argument.
  double uniform_open01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  // Standard normal via Box-Muller; one value per call, no cached state.
  double normal() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Fisher-Yates with the portable bounded draw.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mix a base seed with a stream label so sub-streams are independent.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream + 0x9e3779b97f4a7c15ULL + (seed << 6));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

// 64-bit FNV-1a, used wherever a stable content hash is needed.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace ordinal
