#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nosignal {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector lengths that should agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument was violated (|S| < 2, i in S, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// The requested exact computation exceeds the supported player count.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (learn config, manifest, grammar settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The backend does not provide a capability the caller needs.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Model training diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Lexical or syntax error while parsing an expression.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Evaluation hit a point outside an operator's domain.
class DomainError : public Error {
 public:
  DomainError(const std::string& message, std::size_t node, double operand)
      : Error(message + " (node " + std::to_string(node) +
              ", operand " + std::to_string(operand) + ")"),
        node_(node),
        operand_(operand) {}

  std::size_t node() const noexcept { return node_; }
  double operand() const noexcept { return operand_; }

 private:
  std::size_t node_;
  double operand_;
};

/// A game evaluation failed; carries the coalition that was being evaluated.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& message, std::uint32_t coalition_bits)
      : Error(message + " [coalition bits " + std::to_string(coalition_bits) + "]"),
        bits_(coalition_bits) {}

  std::uint32_t coalition_bits() const noexcept { return bits_; }

 private:
  std::uint32_t bits_;
};

}  // namespace nosignal
