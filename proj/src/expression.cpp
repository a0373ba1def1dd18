#include "polarsim/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

namespace polarsim {

namespace {

using Node = std::function<double(const double*)>;

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  Node parse() {
    Node n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression '" + s_ + "', position " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Node expr() {
    Node lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = [a = lhs, b = term()](const double* v) { return a(v) + b(v); };
      } else if (accept('-')) {
        lhs = [a = lhs, b = term()](const double* v) { return a(v) - b(v); };
      } else {
        return lhs;
      }
    }
  }

  Node term() {
    Node lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = [a = lhs, b = unary()](const double* v) { return a(v) * b(v); };
      } else if (accept('/')) {
        lhs = [a = lhs, b = unary()](const double* v) { return a(v) / b(v); };
      } else {
        return lhs;
      }
    }
  }

  Node unary() {
    if (accept('-')) return [a = unary()](const double* v) { return -a(v); };
    if (accept('+')) return unary();
    return power();
  }

  Node power() {
    Node base = primary();
    if (accept('^')) return [a = base, b = unary()](const double* v) { return std::pow(a(v), b(v)); };
    return base;
  }

  Node primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (accept('(')) {
      Node n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Node number() {
    double value = 0.0;
    const char* first = s_.data() + pos_;
    const auto [end, ec] = std::from_chars(first, s_.data() + s_.size(), value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - first);
    return [value](const double*) { return value; };
  }

  Node identifier() {
    const std::size_t begin = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(begin, pos_ - begin);

    static const std::map<std::string, double (*)(double)> functions = {
        {"sin", [](double x) { return std::sin(x); }},   {"cos", [](double x) { return std::cos(x); }},
        {"tan", [](double x) { return std::tan(x); }},   {"exp", [](double x) { return std::exp(x); }},
        {"log", [](double x) { return std::log(x); }},   {"sqrt", [](double x) { return std::sqrt(x); }},
        {"tanh", [](double x) { return std::tanh(x); }}, {"abs", [](double x) { return std::abs(x); }},
    };
    if (const auto f = functions.find(name); f != functions.end()) {
      if (!accept('(')) fail("expected '(' after " + name);
      Node arg = expr();
      if (!accept(')')) fail("expected ')'");
      return [fn = f->second, arg](const double* v) { return fn(arg(v)); };
    }
    if (name == "pi") return [](const double*) { return std::numbers::pi; };
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return [i](const double* v) { return v[i]; };
    pos_ = begin;
    fail("unknown identifier '" + name + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, std::vector<std::string> variables) {
  Node root = Parser(text, variables).parse();
  return Expression(text, variables.size(), std::move(root));
}

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() != arity_) throw ExpressionError("expression '" + text_ + "': wrong number of variable values");
  return root_(values.data());
}

}  // namespace polarsim
