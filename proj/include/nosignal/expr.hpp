#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nosignal {

enum class Op : std::uint8_t {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kNeg,
  kSigmoid,
  kExp,
  kLog,
  kSqrt,
  kAbs,
  kSin,
  kCos,
  kTan,
  kAsin,
  kAcos,
  kAtan,
  kSinh,
  kTanh,
  kSec,
  kMax,
  kMin,
};

/// One graph node. Operands always refer to earlier nodes.
struct ExprNode {
  Op op = Op::kConst;
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;
  double constant = 0.0;  // kConst payload
  std::int32_t var = -1;  // kVar payload, 0-based (x1 -> 0)
};

struct GradResult {
  double value = 0.0;
  std::vector<double> gradient;  // length == arity()
};

/// Immutable expression DAG over variables x1..xn.
///
/// Grammar: infix + - * / and right-associative ^ (binds tighter than unary
/// minus, so -2^2 == -4), parentheses, x1..x25, decimal literals, `pi`, and
/// the functions sigmoid exp log sqrt abs sin cos tan asin acos atan sinh
/// tanh sec (unary) and max min (binary). Whitespace is ignored. There is no
/// implicit multiplication.
///
/// Domain violations raise DomainError instead of producing NaN. Subgradient
/// conventions at kinks: |u|' = 0 at 0; max/min pick the first argument on
/// ties.
class ExprGraph {
 public:
  /// Throws ParseError (lexical/syntax/unknown identifier/bad variable).
  static ExprGraph parse(std::string_view source);

  std::span<const ExprNode> nodes() const { return nodes_; }
  int arity() const { return arity_; }
  std::int32_t root() const { return static_cast<std::int32_t>(nodes_.size()) - 1; }
  const std::string& source() const { return source_; }

  /// Requires input.size() >= arity().
  double eval(std::span<const double> input) const;

  /// Writes d f / d input_j into gradient[j] for j < arity(); returns f.
  double value_and_gradient(std::span<const double> input, std::span<double> gradient) const;

  GradResult grad(std::span<const double> input) const;

  /// Fully parenthesised text that reparses to an equivalent graph.
  std::string unparse() const;

 private:
  std::vector<ExprNode> nodes_;
  int arity_ = 0;
  std::string source_;

  friend class ExprParser;
  void forward(std::span<const double> input, std::span<double> values) const;
};

inline ExprGraph parse(std::string_view source) { return ExprGraph::parse(source); }
inline double eval(const ExprGraph& g, std::span<const double> input) { return g.eval(input); }
inline GradResult grad(const ExprGraph& g, std::span<const double> input) { return g.grad(input); }

std::string_view op_name(Op op);

}  // namespace nosignal
