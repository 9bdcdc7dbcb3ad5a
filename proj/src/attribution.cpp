#include "nosignal/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "nosignal/errors.hpp"
#include "nosignal/random.hpp"
#include "nosignal/summation.hpp"

namespace nosignal {

namespace {

void check_player(const Game& game, int i) {
  if (i < 0 || i >= game.players()) {
    throw ArgumentError("variable index " + std::to_string(i + 1) + " outside [1, " +
                        std::to_string(game.players()) + "]");
  }
}

void check_exact_interaction_capacity(int n) {
  if (n > kMaxExactInteractionPlayers) {
    throw CapacityError("exact interaction passes support n <= 20, got " + std::to_string(n));
  }
}

// TwoSum: a + b = s + e exactly.
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

}  // namespace

AttributionReport shapley_exact_from_table(std::span<const double> table, int n) {
  if (table.size() != (std::size_t{1} << n)) throw DimensionError("table size is not 2^n");
  const std::uint32_t full = Coalition::full_mask(n);

  AttributionReport report;
  report.v_empty = table[0];
  report.v_full = table[full];
  report.phi.assign(static_cast<std::size_t>(n), 0.0);
  report.u.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<CompensatedSum> by_order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    report.u[static_cast<std::size_t>(i)] = table[bit] - table[0];
    std::fill(by_order.begin(), by_order.end(), CompensatedSum{});
    const std::uint32_t others = full & ~bit;
    // Every S subset of N \ {i}, in increasing bit order.
    std::uint32_t s = 0;
    for (;;) {
      by_order[static_cast<std::size_t>(std::popcount(s))].add(table[s | bit] - table[s]);
      if (s == others) break;
      s = ((s | ~others) + 1u) & others;
    }
    CompensatedSum phi;
    for (int m = 0; m < n; ++m) {
      phi.add(by_order[static_cast<std::size_t>(m)].value() / binomial(n - 1, m));
    }
    report.phi[static_cast<std::size_t>(i)] = phi.value() / n;
  }
  report.method = {AttributionMethod::Kind::kExact, 0, 0};
  return report;
}

AttributionReport shapley_exact(const Game& game) {
  const int n = game.players();
  if (n > kMaxPlayers) throw CapacityError("exact Shapley values support n <= 25");
  const std::vector<double> table = tabulate(game);
  return shapley_exact_from_table(table, n);
}

AttributionReport shapley_sampled(const Game& game, std::size_t permutations, std::uint64_t seed) {
  if (permutations < 1) throw ArgumentError("permutation count must be >= 1");
  const int n = game.players();
  const auto un = static_cast<std::size_t>(n);

  AttributionReport report;
  report.v_empty = evaluate(game, Coalition::empty(n));
  report.v_full = evaluate(game, Coalition::full(n));
  report.u.resize(un);
  for (int i = 0; i < n; ++i) {
    report.u[static_cast<std::size_t>(i)] = evaluate(game, Coalition::singleton(i, n)) - report.v_empty;
  }

  // Welford running mean / variance per player.
  std::vector<double> mean(un, 0.0);
  std::vector<double> m2(un, 0.0);
  std::vector<int> order(un);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t k = 0; k < permutations; ++k) {
    shuffle(order, rng);
    Coalition s = Coalition::empty(n);
    double prev = report.v_empty;
    const double count = static_cast<double>(k + 1);
    for (int i : order) {
      s = s.with(i);
      const double cur = evaluate(game, s);
      const double delta = cur - prev;
      prev = cur;
      const auto ui = static_cast<std::size_t>(i);
      const double d = delta - mean[ui];
      mean[ui] += d / count;
      m2[ui] += d * (delta - mean[ui]);
    }
  }

  report.phi = mean;
  std::vector<double> se(un, 0.0);
  if (permutations > 1) {
    const double kk = static_cast<double>(permutations);
    for (std::size_t i = 0; i < un; ++i) se[i] = std::sqrt(m2[i] / (kk - 1.0) / kk);
  }
  report.standard_error = std::move(se);
  report.method = {AttributionMethod::Kind::kSampled, permutations, seed};
  return report;
}

double interaction(const Game& game, Coalition s) {
  if (s.size() < 2) throw ArgumentError("interaction needs |S| >= 2, got " + std::to_string(s.size()));
  const int order = s.size();
  CompensatedSum acc;
  for (Coalition l : enumerate_subsets(s)) {
    const double v = evaluate(game, l);
    if ((order - l.size()) % 2 == 0) {
      acc.add(v);
    } else {
      acc.add(-v);
    }
  }
  return acc.value();
}

namespace {

class RecursiveInteraction {
 public:
  explicit RecursiveInteraction(const Game& game) : game_(game), n_(game.players()) {
    v_empty_ = value(Coalition::empty(n_));
  }

  double operator()(Coalition s) {
    const auto it = cache_.find(s.bits());
    if (it != cache_.end()) return it->second;
    CompensatedSum acc(value(s));
    acc.add(-v_empty_);
    for (Coalition l : enumerate_subsets(s)) {
      if (l == s) continue;
      if (l.size() >= 2) {
        acc.add(-(*this)(l));
      } else if (l.size() == 1) {
        acc.add(-(value(l) - v_empty_));
      }
    }
    const double result = acc.value();
    cache_.emplace(s.bits(), result);
    return result;
  }

 private:
  double value(Coalition s) {
    const auto it = values_.find(s.bits());
    if (it != values_.end()) return it->second;
    const double v = evaluate(game_, s);
    values_.emplace(s.bits(), v);
    return v;
  }

  const Game& game_;
  int n_;
  double v_empty_ = 0.0;
  std::unordered_map<std::uint32_t, double> cache_;
  std::unordered_map<std::uint32_t, double> values_;
};

}  // namespace

double interaction_recursive(const Game& game, Coalition s) {
  if (s.size() < 2) throw ArgumentError("interaction needs |S| >= 2, got " + std::to_string(s.size()));
  RecursiveInteraction rec(game);
  return rec(s);
}

double shapley_interaction_index(const Game& game, Coalition s) {
  const int n = game.players();
  if (s.size() < 1) throw ArgumentError("Shapley interaction index needs |S| >= 1");
  check_exact_interaction_capacity(n);
  const int order = s.size();
  const Coalition outside = s.complement();
  const int free = n - order;

  CompensatedSum total;
  for (Coalition t : enumerate_subsets(outside)) {
    CompensatedSum inner;
    for (Coalition l : enumerate_subsets(s)) {
      const double v = evaluate(game, l | t);
      inner.add((order - l.size()) % 2 == 0 ? v : -v);
    }
    // p(T) = |T|! (n-|S|-|T|)! / (n-|S|+1)! = 1 / ((n-|S|+1) C(n-|S|, |T|)).
    const double weight = 1.0 / ((free + 1) * binomial(free, t.size()));
    total.add(weight * inner.value());
  }
  return total.value();
}

std::vector<double> moebius_transform(std::span<const double> table, int n) {
  const std::size_t count = std::size_t{1} << n;
  if (table.size() != count) throw DimensionError("table size is not 2^n");
  std::vector<double> hi(table.begin(), table.end());
  std::vector<double> lo(count, 0.0);
  for (int b = 0; b < n; ++b) {
    const std::size_t bit = std::size_t{1} << b;
    for (std::size_t s = 0; s < count; ++s) {
      if (!(s & bit)) continue;
      const std::size_t t = s ^ bit;
      double sum = 0.0;
      double err = 0.0;
      two_sum(hi[s], -hi[t], sum, err);
      hi[s] = sum;
      lo[s] = lo[s] - lo[t] + err;
    }
  }
  for (std::size_t s = 0; s < count; ++s) hi[s] += lo[s];
  return hi;
}

InteractionTable interactions(const Game& game, int max_order) {
  const int n = game.players();
  check_exact_interaction_capacity(n);
  const std::vector<double> dense = moebius_transform(tabulate(game), n);
  InteractionTable out;
  out.players = n;
  for (std::size_t s = 0; s < dense.size(); ++s) {
    const int order = std::popcount(static_cast<std::uint32_t>(s));
    if (order >= 2 && order <= max_order) {
      out.entries.emplace_back(Coalition(static_cast<std::uint32_t>(s), n), dense[s]);
    }
  }
  return out;
}

double marginal_benefit(const Game& game, int i, Coalition s) {
  check_player(game, i);
  if (s.contains(i)) {
    throw ArgumentError("marginal benefit needs i not in S (i = " + std::to_string(i + 1) + ")");
  }
  return evaluate(game, s.with(i)) - evaluate(game, s);
}

OrderEstimate shapley_order(const Game& game, int i, int m, const SamplingOptions& sampling) {
  check_player(game, i);
  const int n = game.players();
  if (m < 0 || m > n - 1) {
    throw ArgumentError("order " + std::to_string(m) + " outside [0, " + std::to_string(n - 1) + "]");
  }
  const Coalition pool = Coalition::full(n).without(i);
  const double available = binomial(n - 1, m);

  std::vector<Coalition> contexts;
  OrderEstimate est;
  if (available <= static_cast<double>(std::max(sampling.cap, sampling.count))) {
    contexts = subsets_of_size(pool, m);
    est.exact = true;
  } else {
    Rng rng(derive_seed(sampling.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(m)));
    contexts = sample_subsets_of_size(pool, m, sampling.count, rng);
    est.exact = false;
  }
  CompensatedSum acc;
  for (Coalition s : contexts) acc.add(evaluate(game, s.with(i)) - evaluate(game, s));
  est.contexts = contexts.size();
  est.value = acc.value() / static_cast<double>(contexts.size());
  return est;
}

OrderSpectrum order_spectrum_from_table(std::span<const double> table, int n,
                                        std::optional<double> tau) {
  check_exact_interaction_capacity(n);
  const std::vector<double> dense = moebius_transform(table, n);
  const auto un = static_cast<std::size_t>(n);

  // Singletons of the Moebius transform are exactly u_i = v({i}) - v(empty).
  std::vector<CompensatedSum> mass(un);
  std::vector<std::size_t> salient(un, 0);
  for (std::size_t s = 1; s < dense.size(); ++s) {
    const auto order = static_cast<std::size_t>(std::popcount(static_cast<std::uint32_t>(s)));
    const double a = std::abs(dense[s]);
    mass[order - 1].add(a);
    if (tau && a >= *tau) ++salient[order - 1];
  }

  OrderSpectrum spec;
  CompensatedSum z;
  for (const auto& m : mass) z.add(m.value());
  spec.normalizer = z.value();
  spec.ratio.assign(un, 0.0);
  spec.degenerate = !(spec.normalizer > 0.0);
  if (!spec.degenerate) {
    for (std::size_t m = 0; m < un; ++m) spec.ratio[m] = mass[m].value() / spec.normalizer;
  }
  if (tau) spec.salient_count = std::move(salient);
  return spec;
}

OrderSpectrum order_spectrum(const Game& game, std::optional<double> tau) {
  const int n = game.players();
  check_exact_interaction_capacity(n);
  return order_spectrum_from_table(tabulate(game), n, tau);
}

SaliencyMap context_saliency(const Game& game, int i, double top_fraction,
                             const SamplingOptions& sampling) {
  check_player(game, i);
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw ArgumentError("top_fraction must lie in (0, 1]");
  }
  const int n = game.players();
  const std::uint32_t others = Coalition::full(n).without(i).bits();
  const double available = std::ldexp(1.0, n - 1);

  SaliencyMap out;
  std::vector<std::uint32_t> contexts;
  if (available <= static_cast<double>(sampling.cap)) {
    out.exact = true;
    for (Coalition s : enumerate_subsets(Coalition(others, n))) contexts.push_back(s.bits());
  } else {
    out.exact = false;
    const std::size_t count = std::min<std::size_t>(sampling.count, static_cast<std::size_t>(available));
    Rng rng(derive_seed(sampling.seed, static_cast<std::uint64_t>(i), 0x5a1e));
    std::unordered_set<std::uint32_t> seen;
    while (contexts.size() < count) {
      const std::uint32_t bits = static_cast<std::uint32_t>(rng()) & others;
      if (seen.insert(bits).second) contexts.push_back(bits);
    }
  }

  struct Ranked {
    double magnitude;
    std::uint32_t bits;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(contexts.size());
  for (std::uint32_t bits : contexts) {
    ranked.push_back({std::abs(marginal_benefit(game, i, Coalition(bits, n))), bits});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.bits < b.bits;
  });

  const auto k = ranked.size();
  auto selected = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(k) - 1e-9));
  selected = std::clamp<std::size_t>(selected, 1, k);

  out.contexts = k;
  out.selected = selected;
  out.p.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<std::size_t> hits(static_cast<std::size_t>(n), 0);
  for (std::size_t r = 0; r < selected; ++r) {
    for (std::uint32_t b = ranked[r].bits; b != 0; b &= b - 1) ++hits[static_cast<std::size_t>(std::countr_zero(b))];
  }
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    out.p[static_cast<std::size_t>(j)] =
        static_cast<double>(hits[static_cast<std::size_t>(j)]) / static_cast<double>(selected);
  }
  return out;
}

}  // namespace nosignal
