#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nosignal/coalition.hpp"
#include "nosignal/expr.hpp"

namespace nosignal {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Baseline values b with per-variable closed bounds; lo_i <= b_i <= hi_i.
class BaselineVector {
 public:
  BaselineVector() = default;
  /// Throws DimensionError on length mismatch, ArgumentError if a value lies
  /// outside its bounds or lo > hi.
  BaselineVector(std::vector<double> values, std::vector<Interval> bounds);
  /// Bounds default to [-inf, inf].
  explicit BaselineVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Replace the values, projecting each onto its interval.
  void assign_projected(std::span<const double> values);

 private:
  std::vector<double> values_;
  std::vector<Interval> bounds_;
};

/// Scalar model f: R^n -> R that a game is built on.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;

  virtual int arity() const = 0;
  virtual double value(std::span<const double> input) const = 0;

  virtual bool differentiable() const { return false; }
  /// Fills grad[0..arity) with df/dinput; default throws CapabilityError.
  virtual double value_and_gradient(std::span<const double> input, std::span<double> grad) const;

  virtual std::string describe() const = 0;
};

/// f given by a parsed DSL expression.
class ExprFunction final : public ValueFunction {
 public:
  /// n may exceed the highest referenced variable (unused inputs are dummies).
  ExprFunction(ExprGraph graph, int n);

  int arity() const override { return n_; }
  double value(std::span<const double> input) const override { return graph_.eval(input); }
  bool differentiable() const override { return true; }
  double value_and_gradient(std::span<const double> input, std::span<double> grad) const override;
  std::string describe() const override { return graph_.source(); }

  const ExprGraph& graph() const { return graph_; }

 private:
  ExprGraph graph_;
  int n_;
};

enum class Transform { kIdentity, kLogOdds };

inline constexpr double kLogOddsEpsilon = 1e-12;

/// log(p / (1 - p)) with p clamped to [eps, 1 - eps].
double log_odds(double p);
/// d log_odds / dp; zero where the clamp is active.
double log_odds_derivative(double p);

std::string transform_name(Transform t);
Transform parse_transform(const std::string& name);

/// v: 2^N -> R. The attribution module only needs this interface, so
/// arbitrary coalition-value tables and model-backed games are interchangeable.
class Game {
 public:
  virtual ~Game() = default;
  virtual int players() const = 0;
  virtual double value(Coalition s) const = 0;
};

/// Thread-safe insert-or-read cache of v(S) keyed by bit pattern.
class MemoTable {
 public:
  bool lookup(std::uint32_t bits, double& out) const;
  void insert(std::uint32_t bits, double value);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint32_t, double> values_;
};

/// Pure function of (f, x, b, transform): v(S) = transform(f(mask(x, S, b))).
class GameSpec final : public Game {
 public:
  GameSpec(std::shared_ptr<const ValueFunction> backend, std::vector<double> x,
           BaselineVector baseline, Transform transform = Transform::kIdentity);

  int players() const override { return static_cast<int>(x_.size()); }
  /// Throws EvaluationError (carrying S) if the backend fails.
  double value(Coalition s) const override;

  /// v(S) together with dv(S)/db_j = dF/dinput_j * 1[j not in S].
  double value_and_baseline_gradient(Coalition s, std::span<double> grad_b) const;

  const ValueFunction& backend() const { return *backend_; }
  std::shared_ptr<const ValueFunction> backend_ptr() const { return backend_; }
  const std::vector<double>& x() const { return x_; }
  const BaselineVector& baseline() const { return baseline_; }
  Transform transform() const { return transform_; }

  /// Turns on the v(S) memo (shared between copies of this game).
  void enable_memo();
  const MemoTable* memo() const { return memo_.get(); }

 private:
  double compute(Coalition s) const;

  std::shared_ptr<const ValueFunction> backend_;
  std::vector<double> x_;
  BaselineVector baseline_;
  Transform transform_;
  std::shared_ptr<MemoTable> memo_;
};

/// Game defined directly by its 2^n coalition values.
class TableGame final : public Game {
 public:
  /// values.size() must be 2^n.
  TableGame(int n, std::vector<double> values);

  int players() const override { return n_; }
  double value(Coalition s) const override { return values_[s.bits()]; }
  const std::vector<double>& values() const { return values_; }

 private:
  int n_;
  std::vector<double> values_;
};

/// out[i] = x[i] if i in S else b[i]. Throws DimensionError on length mismatch.
std::vector<double> mask(std::span<const double> x, Coalition s, std::span<const double> b);
void mask_into(std::span<const double> x, Coalition s, std::span<const double> b,
               std::span<double> out);

/// v(S) with errors wrapped as EvaluationError.
double evaluate(const Game& game, Coalition s);

/// v(S) for every S in bit order; index = bit pattern. Requires n <= kMaxPlayers.
std::vector<double> tabulate(const Game& game);

}  // namespace nosignal
