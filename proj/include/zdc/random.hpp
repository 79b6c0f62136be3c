#pragma once

#include <cstdint>
#include <random>

namespace zdc {

using Rng = std::mt19937_64;

/// Independent random streams. Every consumer derives its generator from
/// (seed, stream, index) so results never depend on evaluation order.
enum class Stream : std::uint64_t {
  particle = 1,
  response = 2,
  split = 3,
  init = 4,
  shuffle = 5,
  dropout = 6,
  noise = 7,
  latent = 8,
  benchmark = 9,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace zdc
