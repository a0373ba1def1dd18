#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polarsim {

class ExpressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arithmetic expression over named variables, for initial conditions.
///
/// Grammar: + - * / ^ (right-associative, binds tighter than unary minus),
/// parentheses, decimal literals, the constant pi and the functions
/// sin cos tan exp log sqrt tanh abs.
class Expression {
 public:
  /// Parses `text`; identifiers other than pi and the listed variables are
  /// rejected.
  static Expression parse(const std::string& text, std::vector<std::string> variables);

  /// `values` are given in the order of the variable list passed to parse().
  double evaluate(std::span<const double> values) const;
  const std::string& text() const { return text_; }

 private:
  using Node = std::function<double(const double*)>;
  Expression(std::string text, std::size_t arity, Node root)
      : text_(std::move(text)), arity_(arity), root_(std::move(root)) {}

  std::string text_;
  std::size_t arity_;
  Node root_;
};

}  // namespace polarsim
