#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fescale {

/// 64-bit FNV-1a; stable across processes and platforms.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// splitmix64 finalizer, used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix64(seed ^ mix64(salt));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) noexcept {
  return derive_seed(seed, fnv1a64(salt));
}

std::string to_hex(std::uint64_t value);

}  // namespace fescale
