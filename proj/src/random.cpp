#include "nosignal/random.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

#include "nosignal/errors.hpp"

namespace nosignal {

std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Coalition random_subset_of_size(Coalition pool, int m, Rng& rng) {
  std::vector<int> idx = pool.members();
  if (m < 0 || m > static_cast<int>(idx.size())) {
    throw ArgumentError("subset size " + std::to_string(m) + " exceeds pool size");
  }
  // Partial Fisher-Yates: the first m slots form the sample.
  std::uint32_t bits = 0;
  for (int j = 0; j < m; ++j) {
    const auto remaining = idx.size() - static_cast<std::size_t>(j);
    const auto pick = static_cast<std::size_t>(j) + uniform_below(rng, remaining);
    std::swap(idx[static_cast<std::size_t>(j)], idx[pick]);
    bits |= 1u << idx[static_cast<std::size_t>(j)];
  }
  return Coalition(bits, pool.players());
}

std::vector<Coalition> sample_subsets_of_size(Coalition pool, int m, std::size_t count,
                                              Rng& rng) {
  const double available = binomial(pool.size(), m);
  if (static_cast<double>(count) > available) {
    throw ArgumentError("cannot draw " + std::to_string(count) + " distinct subsets from " +
                        std::to_string(static_cast<long long>(available)));
  }
  std::vector<Coalition> out;
  out.reserve(count);
  std::unordered_set<std::uint32_t> seen;
  while (out.size() < count) {
    const Coalition c = random_subset_of_size(pool, m, rng);
    if (seen.insert(c.bits()).second) out.push_back(c);
  }
  return out;
}

}  // namespace nosignal
