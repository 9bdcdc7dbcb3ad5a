#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nosignal/game.hpp"

namespace nosignal {

enum class LossKind { kShapley, kMarginal };

std::string loss_name(LossKind k);
LossKind parse_loss(const std::string& name);

enum class InitKind { kZero, kMean, kExplicit };

struct InitScheme {
  InitKind kind = InitKind::kMean;
  std::vector<double> values;  // kExplicit only
};

struct LearnConfig {
  LossKind loss = LossKind::kShapley;
  double lambda_frac = 0.5;
  InitScheme init;
  int steps = 300;
  double step_size = 0.2;
  int orders_per_step = 4;
  int contexts_per_order = 8;
  std::uint64_t seed = 0;
  bool feature_variant = false;
  // Pins every order draw to this m; testing aid.
  std::optional<int> fixed_order;
  // Convergence rule; see learn().
  double grad_tolerance = 1e-6;
  int grad_patience = 10;  // consecutive steps below grad_tolerance
  double ema_tolerance = 1e-8;
  int ema_window = 50;
  double ema_alpha = 0.1;
  int min_steps = 0;  // no early stop before this many steps
};

/// Throws ConfigError on invalid fields.
void validate(const LearnConfig& config);

/// Everything about a game except b: the games are mask(x, ., b) for each x
/// in the batch.
struct GameTemplate {
  std::shared_ptr<const ValueFunction> backend;
  Transform transform = Transform::kIdentity;
  std::vector<Interval> bounds;
  std::vector<std::vector<double>> batch;
  std::vector<double> feature_means;  // dataset-backed games; empty otherwise

  int players() const { return static_cast<int>(bounds.size()); }
};

/// Throws DimensionError/ArgumentError if the parts do not fit together.
void validate(const GameTemplate& game);

/// lambda = round(lambda_frac * n), clamped to [0, n-1].
int max_order(const LearnConfig& config, int n);

/// Starting b for the given scheme, projected onto the bounds. Mean-init
/// uses feature_means when present, otherwise interval midpoints.
std::vector<double> initial_baseline(const LearnConfig& config, const GameTemplate& game);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Loss and d loss / d b at b for step `step`. The order and context draws
/// depend only on (config.seed, step), so repeated calls at different b see
/// identical draws. The loss is averaged over order draws and batch rows
/// and summed over variables.
LossResult evaluate_loss(const GameTemplate& game, const LearnConfig& config,
                         std::span<const double> b, std::uint64_t step);

LossResult loss_shapley(const GameTemplate& game, LearnConfig config,
                        std::span<const double> b, std::uint64_t step = 0);
LossResult loss_marginal(const GameTemplate& game, LearnConfig config,
                         std::span<const double> b, std::uint64_t step = 0);

struct LearnState {
  BaselineVector b;
  std::vector<double> loss_trace;
  std::vector<double> grad_norm_trace;
  bool converged = false;
  int steps = 0;
  std::optional<std::string> error;  // backend failure; traces are partial
};

/// Projected gradient descent: b <- clamp(b - step_size * grad). Stops early
/// when the projected gradient norm stays below grad_tolerance for
/// grad_patience steps, or when an exponential
/// moving average of the loss improves by less than ema_tolerance over
/// ema_window steps.
LearnState learn(const LearnConfig& config, const GameTemplate& game);

struct AccuracyCount {
  std::size_t correct = 0;
  std::size_t annotated = 0;
  double ratio() const {
    return annotated == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(annotated);
  }
};

/// |b_i - b*_i| < 0.5 after mapping each variable's domain to [0,1]. An empty
/// domain span means no rescaling. Throws ArgumentError when nothing is
/// annotated, DimensionError on length mismatch.
AccuracyCount accuracy_count(std::span<const double> b, std::span<const std::optional<double>> truth,
                             std::span<const Interval> domain = {});
double accuracy(std::span<const double> b, std::span<const std::optional<double>> truth,
                std::span<const Interval> domain = {});

}  // namespace nosignal
