#pragma once

// Minimal arithmetic expressions over one spatial variable, used for
// coefficient fields and initial conditions in scenario files.
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary (('^' | '**') unary)?
//   primary := number | 'x' | 'xi' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | tan | exp | log | sqrt | abs
//
// Evaluation is templated so the same tree yields exact first derivatives
// through forward-mode dual numbers.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include "pdeode/errors.hpp"

namespace pdeode {

/// Forward-mode dual number: value and first derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual sin(Dual a) { return {std::sin(a.v), a.d * std::cos(a.v)}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -a.d * std::sin(a.v)}; }
inline Dual tan(Dual a) {
  const double c = std::cos(a.v);
  return {std::tan(a.v), a.d / (c * c)};
}
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, a.d * e};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual abs(Dual a) { return {std::abs(a.v), a.v < 0.0 ? -a.d : a.d}; }
inline Dual pow(Dual a, Dual b) {
  if (b.d == 0.0) {
    // Constant exponent: valid for negative bases with integer exponents.
    const double v = std::pow(a.v, b.v);
    const double da = (b.v == 0.0) ? 0.0 : b.v * std::pow(a.v, b.v - 1.0) * a.d;
    return {v, da};
  }
  const double v = std::pow(a.v, b.v);
  return {v, v * (b.d * std::log(a.v) + b.v * a.d / a.v)};
}

class ExpressionError : public Error {
 public:
  ExpressionError(std::size_t position, const std::string& what)
      : Error("expression error at column " + std::to_string(position + 1) + ": " + what),
        position_(position) {}
  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

enum class NodeKind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs };

struct ExprNode {
  NodeKind kind = NodeKind::Number;
  double value = 0.0;
  Func func = Func::Sin;
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

template <class T>
T eval_node(const ExprNode& n, const T& x) {
  using std::abs, std::cos, std::exp, std::log, std::pow, std::sin, std::sqrt, std::tan;
  switch (n.kind) {
    case NodeKind::Number: return T{n.value};
    case NodeKind::Variable: return x;
    case NodeKind::Neg: return -eval_node(*n.lhs, x);
    case NodeKind::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case NodeKind::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case NodeKind::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case NodeKind::Div: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
    case NodeKind::Pow: return pow(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    case NodeKind::Call: {
      const T a = eval_node(*n.lhs, x);
      switch (n.func) {
        case Func::Sin: return sin(a);
        case Func::Cos: return cos(a);
        case Func::Tan: return tan(a);
        case Func::Exp: return exp(a);
        case Func::Log: return log(a);
        case Func::Sqrt: return sqrt(a);
        case Func::Abs: return abs(a);
      }
    }
  }
  return T{};
}

inline bool depends_on_variable(const ExprNode& n) {
  if (n.kind == NodeKind::Variable) return true;
  if (n.lhs && depends_on_variable(*n.lhs)) return true;
  if (n.rhs && depends_on_variable(*n.rhs)) return true;
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip_ws();
    if (pos_ != src_.size()) throw ExpressionError(pos_, "unexpected trailing input");
    return root;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(std::string_view tok) {
    skip_ws();
    if (src_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  static NodePtr make(NodeKind k, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }
  static NodePtr number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Number;
    n->value = v;
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept("+")) {
        lhs = make(NodeKind::Add, lhs, term());
      } else if (accept("-")) {
        lhs = make(NodeKind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_ws();
      if (src_.substr(pos_, 2) == "**") return lhs;  // handled by power()
      if (accept("*")) {
        lhs = make(NodeKind::Mul, lhs, unary());
      } else if (accept("/")) {
        lhs = make(NodeKind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }
  NodePtr unary() {
    if (accept("-")) return make(NodeKind::Neg, unary());
    if (accept("+")) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (accept("^") || accept("**")) return make(NodeKind::Pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ExpressionError(pos_, "unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!accept(")")) throw ExpressionError(pos_, "expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string_view id = src_.substr(start, pos_ - start);
      if (id == "x" || id == "xi") return make(NodeKind::Variable);
      if (id == "pi") return number(std::numbers::pi);
      if (id == "e") return number(std::numbers::e);
      Func f{};
      if (id == "sin") f = Func::Sin;
      else if (id == "cos") f = Func::Cos;
      else if (id == "tan") f = Func::Tan;
      else if (id == "exp") f = Func::Exp;
      else if (id == "log") f = Func::Log;
      else if (id == "sqrt") f = Func::Sqrt;
      else if (id == "abs") f = Func::Abs;
      else throw ExpressionError(start, "unknown identifier '" + std::string(id) + "'");
      if (!accept("(")) throw ExpressionError(pos_, "expected '(' after function name");
      NodePtr arg = expr();
      if (!accept(")")) throw ExpressionError(pos_, "expected ')'");
      auto n = std::make_shared<ExprNode>();
      n->kind = NodeKind::Call;
      n->func = f;
      n->lhs = std::move(arg);
      return n;
    }
    throw ExpressionError(pos_, std::string("unexpected character '") + c + "'");
  }
  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      throw ExpressionError(start, "malformed number '" + text + "'");
    }
    if (used != text.size()) throw ExpressionError(start, "malformed number '" + text + "'");
    return number(v);
  }
};

}  // namespace detail

/// Parsed expression f(x); cheap to copy (shared immutable tree).
class Expression {
 public:
  static Expression parse(std::string_view source) {
    Expression e;
    e.source_ = std::string(source);
    e.root_ = detail::Parser(source).parse();
    return e;
  }

  [[nodiscard]] double operator()(double x) const { return detail::eval_node(*root_, x); }
  [[nodiscard]] double derivative(double x) const {
    return detail::eval_node(*root_, Dual{x, 1.0}).d;
  }
  [[nodiscard]] bool is_constant() const { return !detail::depends_on_variable(*root_); }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

 private:
  Expression() = default;
  std::string source_;
  detail::NodePtr root_;
};

}  // namespace pdeode
