#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace offpsf {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent child seed from a parent seed and a path of tags,
// e.g. derive_seed(master, {stream::kBatch, k, j}). Pure function of its
// inputs, so work split across threads sees the same streams as serial code.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t tag : path) s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_stream(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(parent, path));
}

// Stream tags used by the optimizer and harness.
namespace stream {
inline constexpr std::uint64_t kBatch = 1;
inline constexpr std::uint64_t kDirections = 2;
inline constexpr std::uint64_t kIndex = 3;
inline constexpr std::uint64_t kRepetition = 4;
inline constexpr std::uint64_t kOracle = 5;
inline constexpr std::uint64_t kSweep = 6;
}  // namespace stream

}  // namespace offpsf
