#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nosignal/coalition.hpp"
#include "nosignal/game.hpp"

namespace nosignal {

/// Which estimator produced a result.
struct AttributionMethod {
  enum class Kind { kExact, kSampled };
  Kind kind = Kind::kExact;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

struct AttributionReport {
  std::vector<double> phi;  // Shapley values
  std::vector<double> u;    // individual benefits v({i}) - v(empty)
  double v_empty = 0.0;
  double v_full = 0.0;
  AttributionMethod method;
  std::optional<std::vector<double>> standard_error;  // sampled only
};

/// Exact Shapley values from all 2^n coalition values, accumulated per
/// context size: phi_i = (1/n) sum_m mean_{|S|=m} [v(S+i) - v(S)].
/// Throws CapacityError for n > kMaxPlayers.
AttributionReport shapley_exact(const Game& game);
AttributionReport shapley_exact_from_table(std::span<const double> table, int n);

/// Permutation-sampling estimator; bit-identical for identical (seed, permutations).
AttributionReport shapley_sampled(const Game& game, std::size_t permutations, std::uint64_t seed);

/// Multi-variate interaction I(S) = sum_{L subset S} (-1)^{|S|-|L|} v(L).
/// Throws ArgumentError if |S| < 2.
double interaction(const Game& game, Coalition s);

/// I(S) from its recursive definition (v(S) - v(empty) minus all strictly
/// smaller interactions and individual benefits). Memoised; intended as an
/// oracle for `interaction`.
double interaction_recursive(const Game& game, Coalition s);

/// Shapley interaction index: environment-weighted average of I(S | T) over
/// T subset N \ S. Requires |S| >= 1 and n <= 20.
double shapley_interaction_index(const Game& game, Coalition s);

/// Dense Moebius transform of a coalition table: out[S] = I(S) for |S| >= 2,
/// out[{i}] = u_i, out[empty] = v(empty). Compensated arithmetic.
std::vector<double> moebius_transform(std::span<const double> table, int n);

struct InteractionTable {
  int players = 0;
  std::vector<std::pair<Coalition, double>> entries;  // |S| >= 2 only, bit order
};

/// All I(S) with 2 <= |S| <= max_order. Requires n <= 20.
InteractionTable interactions(const Game& game, int max_order);

/// Exact/sampled switch for context averages.
struct SamplingOptions {
  std::size_t cap = 10000;   // enumerate when the context count is <= cap
  std::size_t count = 1000;  // contexts drawn otherwise
  std::uint64_t seed = 0;
};

struct OrderEstimate {
  double value = 0.0;
  bool exact = true;
  std::size_t contexts = 0;
};

/// phi_i^(m) = E_{S subset N\{i}, |S| = m}[v(S+i) - v(S)].
/// Throws ArgumentError unless 0 <= m <= n-1 and 0 <= i < n.
OrderEstimate shapley_order(const Game& game, int i, int m, const SamplingOptions& sampling = {});

/// Delta v_i(S) = v(S+i) - v(S). Throws ArgumentError if i in S.
double marginal_benefit(const Game& game, int i, Coalition s);

struct OrderSpectrum {
  std::vector<double> ratio;  // ratio[m-1] = r_m, m = 1..n (r_1 from individual benefits)
  double normalizer = 0.0;
  bool degenerate = false;    // normalizer == 0; ratios are all zero
  std::optional<std::vector<std::size_t>> salient_count;  // |I(S)| >= tau per order

  double r(int m) const { return ratio[static_cast<std::size_t>(m - 1)]; }
};

/// Normalised distribution of |u_i| and |I(S)| across orders. Requires n <= 20.
OrderSpectrum order_spectrum(const Game& game, std::optional<double> tau = std::nullopt);
OrderSpectrum order_spectrum_from_table(std::span<const double> table, int n,
                                        std::optional<double> tau = std::nullopt);

struct SaliencyMap {
  std::vector<double> p;   // p[j] = p(j | i); p[i] = 0
  bool exact = true;
  std::size_t contexts = 0;  // K
  std::size_t selected = 0;  // |Omega|
};

/// Fraction of the top-ranked contexts (by |Delta v_i(S)|, ties by ascending
/// bits) that contain each j. Requires 0 < top_fraction <= 1.
SaliencyMap context_saliency(const Game& game, int i, double top_fraction,
                             const SamplingOptions& sampling = {});

inline constexpr int kMaxExactInteractionPlayers = 20;

}  // namespace nosignal
