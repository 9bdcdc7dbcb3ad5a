#include "nosignal/coalition.hpp"

#include <algorithm>
#include <cmath>

#include "nosignal/errors.hpp"

namespace nosignal {

Coalition::Coalition(std::uint32_t bits, int n) : bits_(bits), n_(n) {
  if (n < 1 || n > kMaxPlayers) {
    throw ArgumentError("player count " + std::to_string(n) + " outside [1, " +
                        std::to_string(kMaxPlayers) + "]");
  }
  if ((bits & ~full_mask(n)) != 0) {
    throw ArgumentError("coalition bits " + std::to_string(bits) +
                        " reference players beyond n = " + std::to_string(n));
  }
}

Coalition Coalition::full(int n) { return Coalition(full_mask(std::clamp(n, 1, kMaxPlayers)), n); }

Coalition Coalition::singleton(int i, int n) {
  if (i < 0 || i >= n) throw ArgumentError("player index " + std::to_string(i) + " out of range");
  return Coalition(1u << i, n);
}

Coalition Coalition::of(std::initializer_list<int> members, int n) {
  std::uint32_t bits = 0;
  for (int i : members) {
    if (i < 0 || i >= n) throw ArgumentError("player index " + std::to_string(i) + " out of range");
    bits |= 1u << i;
  }
  return Coalition(bits, n);
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (std::uint32_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

std::string Coalition::to_string() const {
  std::string s = "{";
  bool first = true;
  for (int i : members()) {
    if (!first) s += ',';
    s += std::to_string(i + 1);
    first = false;
  }
  return s + "}";
}

std::vector<Coalition> subsets_of_size(Coalition pool, int m) {
  std::vector<Coalition> out;
  const int k = pool.size();
  if (m < 0 || m > k) return out;
  const std::vector<int> idx = pool.members();
  out.reserve(static_cast<std::size_t>(binomial(k, m)));
  if (m == 0) {
    out.push_back(Coalition::empty(pool.players()));
    return out;
  }
  // Gosper's hack over the k pool positions; the scatter into pool bits
  // preserves order, so the output is increasing in the original bits.
  const std::uint64_t limit = 1ull << k;
  for (std::uint64_t c = (1ull << m) - 1; c < limit;) {
    std::uint32_t bits = 0;
    for (std::uint64_t r = c; r != 0; r &= r - 1) {
      bits |= 1u << idx[static_cast<std::size_t>(std::countr_zero(r))];
    }
    out.emplace_back(bits, pool.players());
    const std::uint64_t low = c & (~c + 1);
    const std::uint64_t ripple = c + low;
    c = (((ripple ^ c) >> 2) / low) | ripple;
  }
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return std::round(r);
}

}  // namespace nosignal
