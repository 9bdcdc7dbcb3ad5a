#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "nosignal/attribution.hpp"
#include "nosignal/errors.hpp"
#include "nosignal/expr.hpp"

using namespace nosignal;
using testing::LambdaGame;
using testing::random_table_game;
using testing::rel_err;

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

// Average marginal contribution over all n! orderings.
std::vector<double> shapley_by_permutations(const Game& g) {
  const int n = g.players();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  do {
    Coalition s = Coalition::empty(n);
    for (int i : order) {
      phi[static_cast<std::size_t>(i)] += g.value(s.with(i)) - g.value(s);
      s = s.with(i);
    }
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& p : phi) p /= factorial(n);
  return phi;
}

double inclusion_exclusion(const Game& g, Coalition s, Coalition context) {
  double total = 0.0;
  for (Coalition l : enumerate_subsets(s)) {
    const double sign = ((s.size() - l.size()) % 2 == 0) ? 1.0 : -1.0;
    total += sign * g.value(l | context);
  }
  return total;
}

GameSpec binary_expr_game(const char* src, int n, double x = 1.0, double b = 0.0) {
  auto backend = std::make_shared<ExprFunction>(ExprGraph::parse(src), n);
  return GameSpec(backend, std::vector<double>(static_cast<std::size_t>(n), x),
                  BaselineVector(std::vector<double>(static_cast<std::size_t>(n), b)));
}

}  // namespace

TEST_CASE("AND game") {
  const GameSpec g = binary_expr_game("x1*x2", 2);
  const AttributionReport r = shapley_exact(g);
  CHECK(r.phi == std::vector<double>{0.5, 0.5});
  CHECK(r.u == std::vector<double>{0.0, 0.0});
  CHECK(r.v_full == 1.0);
  CHECK(r.v_empty == 0.0);
  CHECK(interaction(g, Coalition::full(2)) == 1.0);
  CHECK(shapley_interaction_index(g, Coalition::full(2)) == 1.0);
}

TEST_CASE("exact Shapley matches the permutation definition") {
  for (int n = 1; n <= 6; ++n) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const TableGame g = random_table_game(n, 100 * n + seed);
      const auto want = shapley_by_permutations(g);
      const auto got = shapley_exact(g).phi;
      for (int i = 0; i < n; ++i) CHECK(rel_err(got[i], want[i]) < 1e-12);
    }
  }
}

TEST_CASE("Shapley axioms on random games") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 3 + static_cast<int>(seed % 6);
    const TableGame g = random_table_game(n, seed);
    const auto phi = shapley_exact(g).phi;

    // efficiency
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    CHECK(rel_err(total, g.value(Coalition::full(n)) - g.value(Coalition::empty(n))) < 1e-12);

    // linearity
    const TableGame h = random_table_game(n, seed + 1000);
    std::vector<double> mix(g.values().size());
    for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = 2.0 * g.values()[k] - 3.0 * h.values()[k];
    const auto phi_h = shapley_exact(h).phi;
    const auto phi_mix = shapley_exact(TableGame(n, mix)).phi;
    for (int i = 0; i < n; ++i) CHECK(rel_err(phi_mix[i], 2.0 * phi[i] - 3.0 * phi_h[i]) < 1e-12);

    // dummy: make player 0 add exactly c to every coalition it joins
    std::vector<double> dummy(g.values());
    for (std::uint32_t bits = 0; bits < dummy.size(); ++bits) {
      if (bits & 1u) dummy[bits] = dummy[bits & ~1u] + 0.7;
    }
    CHECK(rel_err(shapley_exact(TableGame(n, dummy)).phi[0], 0.7) < 1e-12);

    // symmetry: swap roles of players 0 and 1 by symmetrising the table
    std::vector<double> sym(g.values());
    for (std::uint32_t bits = 0; bits < sym.size(); ++bits) {
      const std::uint32_t b0 = bits & 1u, b1 = (bits >> 1) & 1u;
      const std::uint32_t swapped = (bits & ~3u) | (b0 << 1) | b1;
      sym[bits] = g.values()[bits] + g.values()[swapped];
    }
    const auto phi_sym = shapley_exact(TableGame(n, sym)).phi;
    CHECK(rel_err(phi_sym[0], phi_sym[1]) < 1e-12);
  }
}

TEST_CASE("sampled Shapley: determinism, efficiency, convergence") {
  const TableGame g = random_table_game(6, 7);
  const AttributionReport a = shapley_sampled(g, 2000, 42);
  const AttributionReport b = shapley_sampled(g, 2000, 42);
  CHECK(a.phi == b.phi);
  CHECK(a.standard_error.has_value());
  CHECK(a.method.kind == AttributionMethod::Kind::kSampled);
  CHECK(a.method.permutations == 2000);
  const double total = std::accumulate(a.phi.begin(), a.phi.end(), 0.0);
  CHECK(rel_err(total, g.value(Coalition::full(6)) - g.value(Coalition::empty(6))) < 1e-12);
  const auto exact = shapley_exact(g).phi;
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(a.phi[i] - exact[i]) < 5.0 * (*a.standard_error)[i] + 1e-12);
  }
  CHECK(shapley_sampled(g, 2000, 43).phi != a.phi);
}

TEST_CASE("interaction closed form agrees with recursion and inclusion-exclusion") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const int n = 5;
    const TableGame g = random_table_game(n, seed + 50);
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      const Coalition s(bits, n);
      if (s.size() < 2) continue;
      const double closed = interaction(g, s);
      CHECK(rel_err(closed, interaction_recursive(g, s)) < 1e-10);
      CHECK(rel_err(closed, inclusion_exclusion(g, s, Coalition::empty(n))) < 1e-12);
    }
  }
  const TableGame g = random_table_game(3, 1);
  CHECK_THROWS_AS(interaction(g, Coalition::of({1}, 3)), ArgumentError);
}

TEST_CASE("Moebius transform inverts to the table") {
  const int n = 6;
  const TableGame g = random_table_game(n, 9);
  const auto m = moebius_transform(g.values(), n);
  CHECK(m[0] == g.values()[0]);
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    const Coalition s(bits, n);
    double v = 0.0;
    for (Coalition l : enumerate_subsets(s)) v += m[l.bits()];
    CHECK(rel_err(v, g.values()[bits]) < 1e-12);
    if (s.size() == 1) CHECK(rel_err(m[bits], g.values()[bits] - g.values()[0]) < 1e-12);
    if (s.size() >= 2) CHECK(rel_err(m[bits], interaction(g, s)) < 1e-12);
  }
}

TEST_CASE("Shapley value decomposes into interactions") {
  const int n = 6;
  const TableGame g = random_table_game(n, 21);
  const AttributionReport r = shapley_exact(g);
  for (int i = 0; i < n; ++i) {
    const Coalition others = Coalition::full(n).without(i);
    double phi = r.u[i];
    for (Coalition s : enumerate_subsets(others)) {
      if (s.is_empty()) continue;
      phi += interaction(g, s.with(i)) / (s.size() + 1);
    }
    CHECK(rel_err(phi, r.phi[i]) < 1e-12);

    // phi is the mean of the per-order values
    double mean = 0.0;
    for (int m = 0; m < n; ++m) mean += shapley_order(g, i, m).value;
    CHECK(rel_err(mean / n, r.phi[i]) < 1e-12);

    // Delta v_i(S) = u_i + sum over nonempty L subset S of I(L + i)
    for (Coalition s : enumerate_subsets(others)) {
      double delta = r.u[i];
      for (Coalition l : enumerate_subsets(s)) {
        if (!l.is_empty()) delta += interaction(g, l.with(i));
      }
      CHECK(rel_err(delta, marginal_benefit(g, i, s)) < 1e-12);
    }
    CHECK(shapley_interaction_index(g, Coalition::singleton(i, n)) == doctest::Approx(r.phi[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(marginal_benefit(g, 0, Coalition::of({0, 1}, n)), ArgumentError);
}

TEST_CASE("Shapley interaction index matches its weighted definition") {
  const int n = 5;
  const TableGame g = random_table_game(n, 33);
  const Coalition s = Coalition::of({1, 3}, n);
  double want = 0.0;
  for (Coalition t : enumerate_subsets(Coalition::full(n).minus(s))) {
    const double w = factorial(n - t.size() - s.size()) * factorial(t.size()) / factorial(n - s.size() + 1);
    want += w * inclusion_exclusion(g, s, t);
  }
  CHECK(rel_err(shapley_interaction_index(g, s), want) < 1e-12);
}

TEST_CASE("per-order Shapley: exact and sampled contexts") {
  const int n = 8;
  const TableGame g = random_table_game(n, 5);
  const OrderEstimate exact = shapley_order(g, 2, 3);
  CHECK(exact.exact);
  CHECK(exact.contexts == 35);
  double want = 0.0;
  for (Coalition s : subsets_of_size(Coalition::full(n).without(2), 3)) want += g.value(s.with(2)) - g.value(s);
  CHECK(rel_err(exact.value, want / 35.0) < 1e-12);

  SamplingOptions sampling;
  sampling.cap = 10;
  sampling.count = 20;
  sampling.seed = 4;
  const OrderEstimate sampled = shapley_order(g, 2, 3, sampling);
  CHECK_FALSE(sampled.exact);
  CHECK(sampled.contexts == 20);
  CHECK(shapley_order(g, 2, 3, sampling).value == sampled.value);
  CHECK(std::abs(sampled.value - exact.value) < 1.0);
  sampling.count = 35;  // a sample as large as the pool is the pool
  const OrderEstimate whole = shapley_order(g, 2, 3, sampling);
  CHECK(whole.exact);
  CHECK(whole.value == exact.value);

  CHECK_THROWS_AS(shapley_order(g, 2, 8), ArgumentError);
  CHECK_THROWS_AS(shapley_order(g, 8, 0), ArgumentError);
  CHECK_THROWS_AS(shapley_order(g, 0, -1), ArgumentError);
}

TEST_CASE("order spectrum") {
  const GameSpec and5 = binary_expr_game("x1*x2*x3*x4*x5", 5);
  const OrderSpectrum s = order_spectrum(and5);
  REQUIRE(s.ratio.size() == 5);
  CHECK(s.r(5) == 1.0);
  for (int m = 1; m < 5; ++m) CHECK(s.r(m) == 0.0);
  CHECK_FALSE(s.degenerate);

  const GameSpec additive = binary_expr_game("x1+2*x2-x3", 3);
  CHECK(order_spectrum(additive).r(1) == 1.0);

  const GameSpec mixed = binary_expr_game("x1 + x2*x3", 3);
  const OrderSpectrum ms = order_spectrum(mixed, 0.5);
  CHECK(ms.r(1) == doctest::Approx(0.5));
  CHECK(ms.r(2) == doctest::Approx(0.5));
  REQUIRE(ms.salient_count.has_value());
  CHECK((*ms.salient_count)[0] == 1);
  CHECK((*ms.salient_count)[1] == 1);

  const TableGame flat(3, std::vector<double>(8, 2.0));
  const OrderSpectrum d = order_spectrum(flat);
  CHECK(d.degenerate);
  for (double r : d.ratio) CHECK(r == 0.0);

  const TableGame g = random_table_game(6, 3);
  const OrderSpectrum rs = order_spectrum(g);
  CHECK(std::accumulate(rs.ratio.begin(), rs.ratio.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interaction listing") {
  const GameSpec g = binary_expr_game("x1*x2 + x2*x3*x4", 4);
  const InteractionTable t = interactions(g, 3);
  CHECK(t.players == 4);
  CHECK(t.entries.size() == 6 + 4);
  std::map<std::uint32_t, double> by_bits;
  for (const auto& [s, v] : t.entries) {
    CHECK(s.size() >= 2);
    CHECK(s.size() <= 3);
    by_bits[s.bits()] = v;
  }
  CHECK(by_bits[0b0011] == 1.0);
  CHECK(by_bits[0b1110] == 1.0);
  CHECK(by_bits[0b0101] == 0.0);
  for (std::size_t k = 1; k < t.entries.size(); ++k) {
    CHECK(t.entries[k - 1].first.bits() < t.entries[k].first.bits());
  }
}

TEST_CASE("context saliency") {
  const GameSpec g = binary_expr_game("x1*x2 + x3*x4", 4);
  const SaliencyMap m = context_saliency(g, 0, 0.5);
  CHECK(m.exact);
  CHECK(m.contexts == 8);
  CHECK(m.selected == 4);
  CHECK(m.p[0] == 0.0);
  CHECK(m.p[1] == 1.0);
  CHECK(m.p[2] == 0.5);
  CHECK(m.p[3] == 0.5);
  CHECK_THROWS_AS(context_saliency(g, 0, 0.0), ArgumentError);
  CHECK_THROWS_AS(context_saliency(g, 0, 1.5), ArgumentError);
}

TEST_CASE("capacity limits") {
  const LambdaGame big(kMaxExactInteractionPlayers + 1, [](Coalition s) { return static_cast<double>(s.size()); });
  CHECK_THROWS_AS(interactions(big, 2), CapacityError);
  CHECK_THROWS_AS(order_spectrum(big), CapacityError);
  // sampling still works far past the exact limit
  const AttributionReport r = shapley_sampled(big, 10, 1);
  for (double p : r.phi) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("sampled standard errors match the spread across seeds") {
  const TableGame g = random_table_game(7, 12);
  const int trials = 300;
  std::vector<double> sum(7, 0.0), sum2(7, 0.0), se(7, 0.0);
  for (int t = 0; t < trials; ++t) {
    const AttributionReport r = shapley_sampled(g, 200, static_cast<std::uint64_t>(t));
    for (int i = 0; i < 7; ++i) {
      sum[i] += r.phi[i];
      sum2[i] += r.phi[i] * r.phi[i];
      se[i] += (*r.standard_error)[i] / trials;
    }
  }
  for (int i = 0; i < 7; ++i) {
    const double mean = sum[i] / trials;
    const double spread = std::sqrt((sum2[i] / trials - mean * mean) * trials / (trials - 1));
    CHECK(spread / se[i] > 0.8);
    CHECK(spread / se[i] < 1.25);
  }
}
