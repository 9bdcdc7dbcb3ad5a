#include "nosignal/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <utility>

#include "nosignal/errors.hpp"
#include "nosignal/format.hpp"

namespace nosignal {

namespace {

constexpr int kMaxVariableIndex = 25;
constexpr double kPoleTolerance = 1e-12;

struct FunctionEntry {
  std::string_view name;
  Op op;
  int arity;
};

constexpr std::array<FunctionEntry, 16> kFunctions{{
    {"sigmoid", Op::kSigmoid, 1},
    {"exp", Op::kExp, 1},
    {"log", Op::kLog, 1},
    {"sqrt", Op::kSqrt, 1},
    {"abs", Op::kAbs, 1},
    {"sin", Op::kSin, 1},
    {"cos", Op::kCos, 1},
    {"tan", Op::kTan, 1},
    {"asin", Op::kAsin, 1},
    {"acos", Op::kAcos, 1},
    {"atan", Op::kAtan, 1},
    {"sinh", Op::kSinh, 1},
    {"tanh", Op::kTanh, 1},
    {"sec", Op::kSec, 1},
    {"max", Op::kMax, 2},
    {"min", Op::kMin, 2},
}};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

bool is_integral(double p) { return std::abs(p) < 9.0e15 && p == std::nearbyint(p); }

// Per-thread scratch so repeated evaluations do not allocate.
struct Scratch {
  std::vector<double> values;
  std::vector<double> d_lhs;
  std::vector<double> d_rhs;
  std::vector<double> adjoint;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kVar: return "var";
    case Op::kAdd: return "+";
    case Op::kSub: return "-";
    case Op::kMul: return "*";
    case Op::kDiv: return "/";
    case Op::kPow: return "^";
    case Op::kNeg: return "neg";
    default: break;
  }
  for (const auto& f : kFunctions) {
    if (f.op == op) return f.name;
  }
  return "?";
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view src) : src_(src) {}

  ExprGraph run() {
    check_lexical();
    parse_additive();
    skip_space();
    if (pos_ < src_.size()) {
      throw ParseError(std::string("syntax error: unexpected '") + src_[pos_] +
                           "', expected operator or end of input",
                       pos_);
    }
    graph_.source_ = std::string(src_);
    return std::move(graph_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  ExprGraph graph_;

  void check_lexical() const {
    for (std::size_t i = 0; i < src_.size(); ++i) {
      const char c = src_[i];
      if (is_space(c) || is_digit(c) || is_ident_start(c)) continue;
      switch (c) {
        case '+': case '-': case '*': case '/': case '^':
        case '(': case ')': case ',': case '.':
          continue;
        default:
          throw ParseError(std::string("lexical error: unexpected character '") + c + "'", i);
      }
    }
  }

  void skip_space() {
    while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) {
      throw ParseError(std::string("syntax error: expected ") + what, pos_);
    }
  }

  std::int32_t push(ExprNode node) {
    graph_.nodes_.push_back(node);
    return static_cast<std::int32_t>(graph_.nodes_.size()) - 1;
  }

  std::int32_t push_binary(Op op, std::int32_t a, std::int32_t b) {
    return push({.op = op, .lhs = a, .rhs = b});
  }

  std::int32_t parse_additive() {
    std::int32_t lhs = parse_multiplicative();
    for (;;) {
      if (accept('+')) {
        lhs = push_binary(Op::kAdd, lhs, parse_multiplicative());
      } else if (accept('-')) {
        lhs = push_binary(Op::kSub, lhs, parse_multiplicative());
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_multiplicative() {
    std::int32_t lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = push_binary(Op::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = push_binary(Op::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_unary() {
    if (accept('-')) return push({.op = Op::kNeg, .lhs = parse_unary()});
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  std::int32_t parse_power() {
    const std::int32_t base = parse_primary();
    if (accept('^')) {
      // Right-associative; the exponent may carry its own unary sign.
      return push_binary(Op::kPow, base, parse_unary());
    }
    return base;
  }

  std::int32_t parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) {
      throw ParseError("syntax error: expected expression", pos_);
    }
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      const std::int32_t inner = parse_additive();
      expect(')', "')'");
      return inner;
    }
    if (is_digit(c) || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_identifier();
    throw ParseError(std::string("syntax error: unexpected '") + c + "', expected expression",
                     pos_);
  }

  std::int32_t parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        pos_ = p;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
      }
    }
    double value = 0.0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("syntax error: malformed number '" + std::string(first, last) + "'",
                       start);
    }
    return push({.op = Op::kConst, .constant = value});
  }

  std::int32_t parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (is_ident_start(src_[pos_]) || is_digit(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);

    if (name == "pi") return push({.op = Op::kConst, .constant = std::numbers::pi});

    if (name.size() >= 2 && name[0] == 'x' && is_digit(name[1])) {
      int index = 0;
      const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec == std::errc() && ptr == name.data() + name.size()) {
        if (index < 1 || index > kMaxVariableIndex) {
          throw ParseError("variable index " + std::string(name.substr(1)) +
                               " outside [1, 25]",
                           start);
        }
        graph_.arity_ = std::max(graph_.arity_, index);
        return push({.op = Op::kVar, .var = index - 1});
      }
    }

    for (const auto& f : kFunctions) {
      if (f.name != name) continue;
      expect('(', "'(' after function name");
      const std::int32_t a = parse_additive();
      std::int32_t b = -1;
      if (f.arity == 2) {
        expect(',', "',' between arguments");
        b = parse_additive();
      }
      expect(')', "')'");
      return push({.op = f.op, .lhs = a, .rhs = b});
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }
};

ExprGraph ExprGraph::parse(std::string_view source) { return ExprParser(source).run(); }

namespace {

// Computes node values; when kGrad, also the local partials of each node
// with respect to its operands.
template <bool kGrad>
void run_forward(std::span<const ExprNode> nodes, std::span<const double> input,
                 std::span<double> val, std::span<double> dl, std::span<double> dr) {
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const ExprNode& nd = nodes[k];
    const double a = nd.lhs >= 0 ? val[static_cast<std::size_t>(nd.lhs)] : 0.0;
    const double b = nd.rhs >= 0 ? val[static_cast<std::size_t>(nd.rhs)] : 0.0;
    double y = 0.0;
    double pa = 0.0;
    double pb = 0.0;
    switch (nd.op) {
      case Op::kConst:
        y = nd.constant;
        break;
      case Op::kVar:
        y = input[static_cast<std::size_t>(nd.var)];
        break;
      case Op::kAdd:
        y = a + b;
        pa = 1.0;
        pb = 1.0;
        break;
      case Op::kSub:
        y = a - b;
        pa = 1.0;
        pb = -1.0;
        break;
      case Op::kMul:
        y = a * b;
        pa = b;
        pb = a;
        break;
      case Op::kDiv:
        if (b == 0.0) throw DomainError("division by zero", k, b);
        y = a / b;
        pa = 1.0 / b;
        pb = -y / b;
        break;
      case Op::kPow:
        if (is_integral(b)) {
          if (a == 0.0 && b < 0.0) throw DomainError("zero base with negative exponent", k, a);
          y = std::pow(a, b);
          if constexpr (kGrad) {
            pa = b == 0.0 ? 0.0 : b * std::pow(a, b - 1.0);
            pb = a > 0.0 ? y * std::log(a) : 0.0;
          }
        } else if (a > 0.0) {
          y = std::pow(a, b);
          if constexpr (kGrad) {
            pa = b * y / a;
            pb = y * std::log(a);
          }
        } else if (a == 0.0 && b > 1.0) {
          y = 0.0;
        } else if (a == 0.0) {
          throw DomainError("zero base with non-integer exponent below 1", k, b);
        } else {
          throw DomainError("negative base with non-integer exponent", k, a);
        }
        break;
      case Op::kNeg:
        y = -a;
        pa = -1.0;
        break;
      case Op::kSigmoid:
        y = sigmoid(a);
        pa = y * (1.0 - y);
        break;
      case Op::kExp:
        y = std::exp(a);
        pa = y;
        break;
      case Op::kLog:
        if (a <= 0.0) throw DomainError("log of non-positive value", k, a);
        y = std::log(a);
        pa = 1.0 / a;
        break;
      case Op::kSqrt:
        if (a < 0.0) throw DomainError("sqrt of negative value", k, a);
        y = std::sqrt(a);
        if constexpr (kGrad) {
          if (a == 0.0) throw DomainError("sqrt is not differentiable at 0", k, a);
          pa = 0.5 / y;
        }
        break;
      case Op::kAbs:
        y = std::abs(a);
        pa = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        break;
      case Op::kSin:
        y = std::sin(a);
        pa = std::cos(a);
        break;
      case Op::kCos:
        y = std::cos(a);
        pa = -std::sin(a);
        break;
      case Op::kTan: {
        const double c = std::cos(a);
        if (std::abs(c) < kPoleTolerance) throw DomainError("tan at a pole", k, a);
        y = std::tan(a);
        pa = 1.0 / (c * c);
        break;
      }
      case Op::kAsin:
        if (std::abs(a) > 1.0) throw DomainError("asin outside [-1, 1]", k, a);
        y = std::asin(a);
        if constexpr (kGrad) {
          if (std::abs(a) == 1.0) throw DomainError("asin is not differentiable at +-1", k, a);
          pa = 1.0 / std::sqrt(1.0 - a * a);
        }
        break;
      case Op::kAcos:
        if (std::abs(a) > 1.0) throw DomainError("acos outside [-1, 1]", k, a);
        y = std::acos(a);
        if constexpr (kGrad) {
          if (std::abs(a) == 1.0) throw DomainError("acos is not differentiable at +-1", k, a);
          pa = -1.0 / std::sqrt(1.0 - a * a);
        }
        break;
      case Op::kAtan:
        y = std::atan(a);
        pa = 1.0 / (1.0 + a * a);
        break;
      case Op::kSinh:
        y = std::sinh(a);
        pa = std::cosh(a);
        break;
      case Op::kTanh:
        y = std::tanh(a);
        pa = 1.0 - y * y;
        break;
      case Op::kSec: {
        const double c = std::cos(a);
        if (std::abs(c) < kPoleTolerance) throw DomainError("sec at a pole", k, a);
        y = 1.0 / c;
        pa = y * std::tan(a);
        break;
      }
      case Op::kMax:
        if (a >= b) {
          y = a;
          pa = 1.0;
        } else {
          y = b;
          pb = 1.0;
        }
        break;
      case Op::kMin:
        if (a <= b) {
          y = a;
          pa = 1.0;
        } else {
          y = b;
          pb = 1.0;
        }
        break;
    }
    if (!std::isfinite(y)) throw DomainError("non-finite result", k, a);
    val[k] = y;
    if constexpr (kGrad) {
      dl[k] = pa;
      dr[k] = pb;
    }
  }
}

void check_input(const ExprGraph& g, std::span<const double> input) {
  if (input.size() < static_cast<std::size_t>(g.arity())) {
    throw DimensionError("expression needs " + std::to_string(g.arity()) +
                         " inputs, got " + std::to_string(input.size()));
  }
}

}  // namespace

void ExprGraph::forward(std::span<const double> input, std::span<double> values) const {
  run_forward<false>(nodes_, input, values, {}, {});
}

double ExprGraph::eval(std::span<const double> input) const {
  check_input(*this, input);
  Scratch& s = scratch();
  s.values.resize(nodes_.size());
  forward(input, s.values);
  return s.values.back();
}

double ExprGraph::value_and_gradient(std::span<const double> input,
                                     std::span<double> gradient) const {
  check_input(*this, input);
  if (gradient.size() < static_cast<std::size_t>(arity_)) {
    throw DimensionError("gradient buffer shorter than arity");
  }
  Scratch& s = scratch();
  const std::size_t count = nodes_.size();
  s.values.resize(count);
  s.d_lhs.resize(count);
  s.d_rhs.resize(count);
  s.adjoint.assign(count, 0.0);
  run_forward<true>(nodes_, input, s.values, s.d_lhs, s.d_rhs);

  for (std::size_t j = 0; j < static_cast<std::size_t>(arity_); ++j) gradient[j] = 0.0;
  s.adjoint[count - 1] = 1.0;
  for (std::size_t k = count; k-- > 0;) {
    const double adj = s.adjoint[k];
    if (adj == 0.0) continue;
    const ExprNode& nd = nodes_[k];
    if (nd.op == Op::kVar) {
      gradient[static_cast<std::size_t>(nd.var)] += adj;
      continue;
    }
    if (nd.lhs >= 0) s.adjoint[static_cast<std::size_t>(nd.lhs)] += adj * s.d_lhs[k];
    if (nd.rhs >= 0) s.adjoint[static_cast<std::size_t>(nd.rhs)] += adj * s.d_rhs[k];
  }
  return s.values[count - 1];
}

GradResult ExprGraph::grad(std::span<const double> input) const {
  GradResult r;
  r.gradient.assign(static_cast<std::size_t>(arity_), 0.0);
  r.value = value_and_gradient(input, r.gradient);
  return r;
}

namespace {

std::string unparse_node(std::span<const ExprNode> nodes, std::int32_t k) {
  const ExprNode& nd = nodes[static_cast<std::size_t>(k)];
  switch (nd.op) {
    case Op::kConst:
      return nd.constant < 0 ? "(0-" + format_real(-nd.constant) + ")"
                             : format_real(nd.constant);
    case Op::kVar:
      return "x" + std::to_string(nd.var + 1);
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kPow:
      return "(" + unparse_node(nodes, nd.lhs) + " " + std::string(op_name(nd.op)) + " " +
             unparse_node(nodes, nd.rhs) + ")";
    case Op::kNeg:
      return "(-" + unparse_node(nodes, nd.lhs) + ")";
    case Op::kMax:
    case Op::kMin:
      return std::string(op_name(nd.op)) + "(" + unparse_node(nodes, nd.lhs) + ", " +
             unparse_node(nodes, nd.rhs) + ")";
    default:
      return std::string(op_name(nd.op)) + "(" + unparse_node(nodes, nd.lhs) + ")";
  }
}

}  // namespace

std::string ExprGraph::unparse() const {
  if (nodes_.empty()) return "";
  return unparse_node(nodes_, root());
}

}  // namespace nosignal
