#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace nosignal {

inline constexpr int kMaxPlayers = 25;

/// A subset S of N = {0, ..., n-1} stored as a bit pattern (bit i set <=> i in S).
///
/// Variables are 0-based internally; user-facing surfaces (CLI, DSL) use
/// 1-based names, so bit i corresponds to x_{i+1}.
class Coalition {
 public:
  Coalition() = default;

  /// Throws ArgumentError if n is outside [1, kMaxPlayers] or bits has
  /// members at positions >= n.
  Coalition(std::uint32_t bits, int n);

  static Coalition empty(int n) { return Coalition(0u, n); }
  static Coalition full(int n);
  static Coalition singleton(int i, int n);
  static Coalition of(std::initializer_list<int> members, int n);

  std::uint32_t bits() const noexcept { return bits_; }
  int players() const noexcept { return n_; }
  int size() const noexcept { return std::popcount(bits_); }
  bool is_empty() const noexcept { return bits_ == 0; }

  bool contains(int i) const noexcept { return (bits_ >> i) & 1u; }
  bool is_subset_of(Coalition other) const noexcept {
    return (bits_ & ~other.bits_) == 0;
  }

  Coalition with(int i) const noexcept { return {bits_ | (1u << i), n_, Unchecked{}}; }
  Coalition without(int i) const noexcept { return {bits_ & ~(1u << i), n_, Unchecked{}}; }
  Coalition complement() const noexcept {
    return {~bits_ & full_mask(n_), n_, Unchecked{}};
  }
  Coalition operator|(Coalition o) const noexcept { return {bits_ | o.bits_, n_, Unchecked{}}; }
  Coalition operator&(Coalition o) const noexcept { return {bits_ & o.bits_, n_, Unchecked{}}; }
  Coalition minus(Coalition o) const noexcept { return {bits_ & ~o.bits_, n_, Unchecked{}}; }

  std::vector<int> members() const;

  /// "{1,3}" with 1-based member names.
  std::string to_string() const;

  friend bool operator==(Coalition a, Coalition b) noexcept {
    return a.bits_ == b.bits_ && a.n_ == b.n_;
  }

  static constexpr std::uint32_t full_mask(int n) noexcept {
    return n >= 32 ? ~0u : ((1u << n) - 1u);
  }

 private:
  struct Unchecked {};
  Coalition(std::uint32_t bits, int n, Unchecked) noexcept : bits_(bits), n_(n) {}

  std::uint32_t bits_ = 0;
  int n_ = 0;
};

/// Forward range over every subset of a coalition in strictly increasing
/// bit-pattern order.
class SubsetRange {
 public:
  explicit SubsetRange(Coalition of) : of_(of) {}

  class iterator {
   public:
    using value_type = Coalition;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(std::uint32_t mask, std::uint32_t current, int n, bool done)
        : mask_(mask), current_(current), n_(n), done_(done) {}

    Coalition operator*() const { return Coalition(current_, n_); }
    iterator& operator++() {
      if (current_ == mask_) {
        done_ = true;
      } else {
        // Next larger submask of mask_.
        current_ = ((current_ | ~mask_) + 1u) & mask_;
      }
      return *this;
    }
    iterator operator++(int) {
      iterator copy = *this;
      ++*this;
      return copy;
    }
    bool operator==(const iterator& o) const {
      return done_ == o.done_ && (done_ || current_ == o.current_);
    }

   private:
    std::uint32_t mask_ = 0;
    std::uint32_t current_ = 0;
    int n_ = 0;
    bool done_ = true;
  };

  iterator begin() const { return {of_.bits(), 0u, of_.players(), false}; }
  iterator end() const { return {}; }

 private:
  Coalition of_;
};

/// All 2^|S| subsets of S, smallest bit pattern first.
inline SubsetRange enumerate_subsets(Coalition s) { return SubsetRange(s); }

/// Every subset of `pool` with exactly m members, in increasing bit order.
std::vector<Coalition> subsets_of_size(Coalition pool, int m);

/// Binomial coefficient as a double (exact for the ranges used here).
double binomial(int n, int k);

}  // namespace nosignal
