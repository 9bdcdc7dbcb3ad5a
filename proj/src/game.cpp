#include "nosignal/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "nosignal/errors.hpp"

namespace nosignal {

BaselineVector::BaselineVector(std::vector<double> values, std::vector<Interval> bounds)
    : values_(std::move(values)), bounds_(std::move(bounds)) {
  if (values_.size() != bounds_.size()) {
    throw DimensionError("baseline has " + std::to_string(values_.size()) + " values but " +
                         std::to_string(bounds_.size()) + " bounds");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (bounds_[i].lo > bounds_[i].hi) {
      throw ArgumentError("empty bound interval for variable " + std::to_string(i + 1));
    }
    if (!bounds_[i].contains(values_[i])) {
      throw ArgumentError("baseline value for variable " + std::to_string(i + 1) +
                          " lies outside its bounds");
    }
  }
}

BaselineVector::BaselineVector(std::vector<double> values)
    : BaselineVector(values,
                     std::vector<Interval>(values.size(),
                                           Interval{-std::numeric_limits<double>::infinity(),
                                                    std::numeric_limits<double>::infinity()})) {}

void BaselineVector::assign_projected(std::span<const double> values) {
  if (values.size() != values_.size()) throw DimensionError("baseline length mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] = bounds_[i].clamp(values[i]);
}

double ValueFunction::value_and_gradient(std::span<const double>, std::span<double>) const {
  throw CapabilityError("backend '" + describe() + "' does not provide gradients");
}

ExprFunction::ExprFunction(ExprGraph graph, int n) : graph_(std::move(graph)), n_(n) {
  if (n < graph_.arity()) {
    throw DimensionError("expression references x" + std::to_string(graph_.arity()) +
                         " but n = " + std::to_string(n));
  }
}

double ExprFunction::value_and_gradient(std::span<const double> input,
                                        std::span<double> grad) const {
  for (std::size_t j = static_cast<std::size_t>(graph_.arity()); j < grad.size(); ++j) grad[j] = 0.0;
  return graph_.value_and_gradient(input, grad);
}

double log_odds(double p) {
  const double q = std::clamp(p, kLogOddsEpsilon, 1.0 - kLogOddsEpsilon);
  return std::log(q / (1.0 - q));
}

double log_odds_derivative(double p) {
  if (p < kLogOddsEpsilon || p > 1.0 - kLogOddsEpsilon) return 0.0;
  return 1.0 / (p * (1.0 - p));
}

std::string transform_name(Transform t) { return t == Transform::kLogOdds ? "logodds" : "identity"; }

Transform parse_transform(const std::string& name) {
  if (name == "identity") return Transform::kIdentity;
  if (name == "logodds") return Transform::kLogOdds;
  throw ConfigError("unknown transform '" + name + "' (expected identity or logodds)");
}

bool MemoTable::lookup(std::uint32_t bits, double& out) const {
  std::shared_lock lock(mutex_);
  const auto it = values_.find(bits);
  if (it == values_.end()) return false;
  out = it->second;
  return true;
}

void MemoTable::insert(std::uint32_t bits, double value) {
  std::unique_lock lock(mutex_);
  values_.emplace(bits, value);
}

std::size_t MemoTable::size() const {
  std::shared_lock lock(mutex_);
  return values_.size();
}

GameSpec::GameSpec(std::shared_ptr<const ValueFunction> backend, std::vector<double> x,
                   BaselineVector baseline, Transform transform)
    : backend_(std::move(backend)),
      x_(std::move(x)),
      baseline_(std::move(baseline)),
      transform_(transform) {
  if (!backend_) throw ArgumentError("game needs a backend");
  if (x_.empty() || x_.size() > static_cast<std::size_t>(kMaxPlayers)) {
    throw CapacityError("game size " + std::to_string(x_.size()) + " outside [1, 25]");
  }
  if (x_.size() != baseline_.size()) {
    throw DimensionError("x has length " + std::to_string(x_.size()) + ", baseline has " +
                         std::to_string(baseline_.size()));
  }
  if (static_cast<std::size_t>(backend_->arity()) != x_.size()) {
    throw DimensionError("backend expects " + std::to_string(backend_->arity()) +
                         " inputs, game has " + std::to_string(x_.size()));
  }
}

void GameSpec::enable_memo() {
  if (!memo_) memo_ = std::make_shared<MemoTable>();
}

double GameSpec::compute(Coalition s) const {
  thread_local std::vector<double> masked;
  masked.resize(x_.size());
  mask_into(x_, s, baseline_.values(), masked);
  try {
    const double f = backend_->value(masked);
    return transform_ == Transform::kLogOdds ? log_odds(f) : f;
  } catch (const DomainError& e) {
    throw EvaluationError(e.what(), s.bits());
  }
}

double GameSpec::value(Coalition s) const {
  if (s.players() != players()) {
    throw ArgumentError("coalition over " + std::to_string(s.players()) +
                        " players used with a game of " + std::to_string(players()));
  }
  if (memo_) {
    double cached = 0.0;
    if (memo_->lookup(s.bits(), cached)) return cached;
    const double v = compute(s);
    memo_->insert(s.bits(), v);
    return v;
  }
  return compute(s);
}

double GameSpec::value_and_baseline_gradient(Coalition s, std::span<double> grad_b) const {
  const std::size_t n = x_.size();
  if (grad_b.size() != n) throw DimensionError("gradient buffer length mismatch");
  thread_local std::vector<double> masked;
  masked.resize(n);
  mask_into(x_, s, baseline_.values(), masked);
  double f = 0.0;
  try {
    f = backend_->value_and_gradient(masked, grad_b);
  } catch (const DomainError& e) {
    throw EvaluationError(e.what(), s.bits());
  }
  double scale = 1.0;
  double v = f;
  if (transform_ == Transform::kLogOdds) {
    v = log_odds(f);
    scale = log_odds_derivative(f);
  }
  for (std::size_t j = 0; j < n; ++j) {
    grad_b[j] = s.contains(static_cast<int>(j)) ? 0.0 : grad_b[j] * scale;
  }
  return v;
}

TableGame::TableGame(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n < 1 || n > kMaxPlayers) throw CapacityError("table game size outside [1, 25]");
  if (values_.size() != (std::size_t{1} << n)) {
    throw DimensionError("table game needs 2^n values");
  }
}

void mask_into(std::span<const double> x, Coalition s, std::span<const double> b,
               std::span<double> out) {
  if (x.size() != b.size() || out.size() != x.size()) {
    throw DimensionError("mask: x has length " + std::to_string(x.size()) +
                         ", baseline has " + std::to_string(b.size()));
  }
  if (static_cast<std::size_t>(s.players()) != x.size()) {
    throw DimensionError("mask: coalition is over " + std::to_string(s.players()) +
                         " players, inputs have length " + std::to_string(x.size()));
  }
  const std::uint32_t bits = s.bits();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ((bits >> i) & 1u) ? x[i] : b[i];
}

std::vector<double> mask(std::span<const double> x, Coalition s, std::span<const double> b) {
  std::vector<double> out(x.size());
  mask_into(x, s, b, out);
  return out;
}

double evaluate(const Game& game, Coalition s) {
  try {
    return game.value(s);
  } catch (const EvaluationError&) {
    throw;
  } catch (const DomainError& e) {
    throw EvaluationError(e.what(), s.bits());
  }
}

std::vector<double> tabulate(const Game& game) {
  const int n = game.players();
  if (n > kMaxPlayers) throw CapacityError("cannot tabulate more than 25 players");
  const std::size_t count = std::size_t{1} << n;
  std::vector<double> table(count);
  for (std::size_t bits = 0; bits < count; ++bits) {
    table[bits] = evaluate(game, Coalition(static_cast<std::uint32_t>(bits), n));
  }
  return table;
}

}  // namespace nosignal
