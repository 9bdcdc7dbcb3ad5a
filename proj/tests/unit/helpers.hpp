#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nosignal/game.hpp"
#include "nosignal/random.hpp"

namespace testing {

inline nosignal::TableGame random_table_game(int n, std::uint64_t seed) {
  nosignal::Rng rng(seed);
  std::vector<double> v(std::size_t{1} << n);
  for (double& x : v) x = 4.0 * nosignal::uniform_unit(rng) - 2.0;
  return nosignal::TableGame(n, std::move(v));
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central differences of f at x with step h.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double keep = x[j];
    x[j] = keep + h;
    const double up = f(x);
    x[j] = keep - h;
    const double down = f(x);
    x[j] = keep;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

// Game built from a lambda; handy for closed-form oracles.
class LambdaGame final : public nosignal::Game {
 public:
  LambdaGame(int n, std::function<double(nosignal::Coalition)> f) : n_(n), f_(std::move(f)) {}
  int players() const override { return n_; }
  double value(nosignal::Coalition s) const override { return f_(s); }

 private:
  int n_;
  std::function<double(nosignal::Coalition)> f_;
};

}  // namespace testing
