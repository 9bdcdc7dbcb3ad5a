#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nosignal/coalition.hpp"

namespace nosignal {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seed of the sub-stream identified by (base, a, b, c). Counter-based: the
/// result depends only on the arguments, never on how many draws came before.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
  std::uint64_t s = mix_seed(base);
  s = mix_seed(s ^ (a + 0x632be59bd9b4e019ull));
  s = mix_seed(s ^ (b + 0x8cb92ba72f3d8dd7ull));
  return mix_seed(s ^ (c + 0x2545f4914f6cdd1dull));
}

/// Uniform integer in [0, bound) by rejection; platform independent, unlike
/// std::uniform_int_distribution.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform_unit(Rng& rng);

/// In-place Fisher-Yates shuffle built on uniform_below.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Uniformly random subset of `pool` with exactly m members.
Coalition random_subset_of_size(Coalition pool, int m, Rng& rng);

/// `count` distinct m-subsets of `pool`, uniformly without replacement,
/// returned in draw order. Requires count <= C(|pool|, m).
std::vector<Coalition> sample_subsets_of_size(Coalition pool, int m,
                                              std::size_t count, Rng& rng);

}  // namespace nosignal
