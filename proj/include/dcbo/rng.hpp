#pragma once

#include "dcbo/types.hpp"

#include <cmath>
#include <string_view>

namespace dcbo {

// Deterministic keyed randomness. Every noise draw in the library is addressed
// by a chain of keys (seed, purpose, sample index, node, ...) so that results
// do not depend on evaluation order or thread scheduling, and identical keys
// always reproduce identical draws on any platform.

namespace detail {

constexpr seed_t kHashInit = 0x9e3779b97f4a7c15ull;

inline seed_t splitmix64(seed_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline seed_t mix(seed_t h, seed_t v) { return splitmix64(h ^ (v + kHashInit)); }

inline seed_t mix(seed_t h, std::string_view s) {
  for (unsigned char c : s) h = splitmix64(h ^ (static_cast<seed_t>(c) + kHashInit));
  return splitmix64(h ^ (static_cast<seed_t>(s.size()) + kHashInit));
}

inline void hash_fold(seed_t&) {}

template <typename T, typename... Rest>
void hash_fold(seed_t& h, const T& v, const Rest&... rest) {
  if constexpr (std::is_convertible_v<T, std::string_view>) {
    h = mix(h, std::string_view(v));
  } else {
    h = mix(h, static_cast<seed_t>(v));
  }
  hash_fold(h, rest...);
}

}  // namespace detail

/// Order-sensitive hash of a key chain (integers and strings).
template <typename... Parts>
seed_t stable_hash(const Parts&... parts) {
  seed_t h = detail::kHashInit;
  detail::hash_fold(h, parts...);
  return h;
}

/// Uniform in (0, 1), never exactly 0 or 1.
inline scalar uniform01(seed_t key) {
  const seed_t bits = detail::splitmix64(key);
  return (static_cast<scalar>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw from a key (Box-Muller on two derived uniforms).
inline scalar standard_normal(seed_t key) {
  const scalar u1 = uniform01(detail::mix(key, seed_t{1}));
  const scalar u2 = uniform01(detail::mix(key, seed_t{2}));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename... Parts>
scalar normal_draw(scalar mean, scalar variance, const Parts&... key) {
  return mean + std::sqrt(variance) * standard_normal(stable_hash(key...));
}

}  // namespace dcbo
