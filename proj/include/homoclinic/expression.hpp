#pragma once

// Closed-form expressions for user-supplied problems.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?      exponent must be constant
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//   func    := exp | arctan | atan | sin | cos
//
// Names are bound to variable slots at parse time; `pi` is a constant.
// Derivatives are symbolic, so gradients and Hessians of G are exact.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "homoclinic/error.hpp"

namespace homoclinic {

class Expr {
public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Atan, Sin, Cos };

  static Expr constant(double v) { return Expr(std::make_shared<Node>(Node{Op::Const, v, 0, {}, {}})); }
  static Expr variable(std::size_t slot) { return Expr(std::make_shared<Node>(Node{Op::Var, 0.0, slot, {}, {}})); }

  double eval(std::span<const double> vars) const { return eval(*node_, vars); }

  /// d/d(var slot), lightly simplified.
  Expr derivative(std::size_t slot) const { return Expr(diff(node_, slot)); }

  bool is_constant() const noexcept { return node_->op == Op::Const; }
  double constant_value() const noexcept { return node_->value; }

  friend Expr operator+(const Expr& a, const Expr& b) { return Expr(make(Op::Add, a.node_, b.node_)); }
  friend Expr operator-(const Expr& a, const Expr& b) { return Expr(make(Op::Sub, a.node_, b.node_)); }
  friend Expr operator*(const Expr& a, const Expr& b) { return Expr(make(Op::Mul, a.node_, b.node_)); }
  friend Expr operator/(const Expr& a, const Expr& b) { return Expr(make(Op::Div, a.node_, b.node_)); }
  friend Expr operator-(const Expr& a) { return Expr(make(Op::Neg, a.node_, nullptr)); }
  static Expr pow(const Expr& a, const Expr& b) { return Expr(make(Op::Pow, a.node_, b.node_)); }
  static Expr apply(Op fn, const Expr& a) { return Expr(make(fn, a.node_, nullptr)); }

private:
  struct Node;
  using Ptr = std::shared_ptr<const Node>;
  struct Node {
    Op op;
    double value;
    std::size_t slot;
    Ptr lhs;
    Ptr rhs;
  };

  explicit Expr(Ptr n) : node_(std::move(n)) {}

  static Ptr konst(double v) { return std::make_shared<Node>(Node{Op::Const, v, 0, {}, {}}); }
  static bool is_const(const Ptr& p, double v) { return p->op == Op::Const && p->value == v; }

  // Builds a node, folding constants and trivial identities.
  static Ptr make(Op op, Ptr a, Ptr b) {
    if (a->op == Op::Const && (!b || b->op == Op::Const)) {
      Node tmp{op, 0.0, 0, a, b};
      return konst(eval(tmp, {}));
    }
    switch (op) {
      case Op::Add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
      case Op::Sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return make(Op::Neg, b, nullptr);
        break;
      case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return konst(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
      case Op::Div:
        if (is_const(a, 0.0)) return konst(0.0);
        if (is_const(b, 1.0)) return a;
        break;
      case Op::Pow:
        if (is_const(b, 1.0)) return a;
        if (is_const(b, 0.0)) return konst(1.0);
        break;
      default:
        break;
    }
    return std::make_shared<Node>(Node{op, 0.0, 0, std::move(a), std::move(b)});
  }

  static double ipow(double x, double e) {
    // Small non-negative integer exponents by repeated multiplication so that
    // polynomial identities (e.g. 4 q^4 == q * 4 q^3) hold to rounding.
    if (e >= 0.0 && e <= 16.0 && e == std::floor(e)) {
      double r = 1.0;
      for (int i = 0; i < static_cast<int>(e); ++i) r *= x;
      return r;
    }
    return std::pow(x, e);
  }

  static double eval(const Node& n, std::span<const double> vars) {
    switch (n.op) {
      case Op::Const: return n.value;
      case Op::Var: return vars[n.slot];
      case Op::Add: return eval(*n.lhs, vars) + eval(*n.rhs, vars);
      case Op::Sub: return eval(*n.lhs, vars) - eval(*n.rhs, vars);
      case Op::Mul: return eval(*n.lhs, vars) * eval(*n.rhs, vars);
      case Op::Div: return eval(*n.lhs, vars) / eval(*n.rhs, vars);
      case Op::Neg: return -eval(*n.lhs, vars);
      case Op::Pow: return ipow(eval(*n.lhs, vars), eval(*n.rhs, vars));
      case Op::Exp: return std::exp(eval(*n.lhs, vars));
      case Op::Atan: return std::atan(eval(*n.lhs, vars));
      case Op::Sin: return std::sin(eval(*n.lhs, vars));
      case Op::Cos: return std::cos(eval(*n.lhs, vars));
    }
    return 0.0;
  }

  static Ptr diff(const Ptr& n, std::size_t slot) {
    const Ptr& a = n->lhs;
    const Ptr& b = n->rhs;
    switch (n->op) {
      case Op::Const: return konst(0.0);
      case Op::Var: return konst(n->slot == slot ? 1.0 : 0.0);
      case Op::Add: return make(Op::Add, diff(a, slot), diff(b, slot));
      case Op::Sub: return make(Op::Sub, diff(a, slot), diff(b, slot));
      case Op::Neg: return make(Op::Neg, diff(a, slot), nullptr);
      case Op::Mul:
        return make(Op::Add, make(Op::Mul, diff(a, slot), b), make(Op::Mul, a, diff(b, slot)));
      case Op::Div: {
        auto num = make(Op::Sub, make(Op::Mul, diff(a, slot), b), make(Op::Mul, a, diff(b, slot)));
        return make(Op::Div, num, make(Op::Mul, b, b));
      }
      case Op::Pow: {
        // Exponent is constant (enforced by the parser).
        auto e = b->value;
        auto outer = make(Op::Mul, konst(e), make(Op::Pow, a, konst(e - 1.0)));
        return make(Op::Mul, outer, diff(a, slot));
      }
      case Op::Exp: return make(Op::Mul, n, diff(a, slot));
      case Op::Atan:
        return make(Op::Div, diff(a, slot), make(Op::Add, konst(1.0), make(Op::Mul, a, a)));
      case Op::Sin: return make(Op::Mul, make(Op::Cos, a, nullptr), diff(a, slot));
      case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, a, nullptr), diff(a, slot)), nullptr);
    }
    return konst(0.0);
  }

  Ptr node_;
};

namespace detail {

class ExprParser {
public:
  ExprParser(std::string_view text, const std::map<std::string, std::size_t>& vars) : s_(text), vars_(vars) {}

  Expr parse() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression '" + std::string(s_) + "' at column " + std::to_string(pos_ + 1) + ": " + msg);
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

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) lhs = lhs + term();
      else if (accept('-')) lhs = lhs - term();
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = lhs * unary();
      else if (accept('/')) lhs = lhs / unary();
      else return lhs;
    }
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) {
      Expr exponent = unary();
      if (!exponent.is_constant()) fail("exponent must be a constant");
      return Expr::pow(base, exponent);
    }
    return base;
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string buf(s_.substr(pos_));
      char* end = nullptr;
      double v = std::strtod(buf.c_str(), &end);
      if (end == buf.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - buf.c_str());
      return Expr::constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      static const std::map<std::string, Expr::Op> funcs = {
          {"exp", Expr::Op::Exp}, {"arctan", Expr::Op::Atan}, {"atan", Expr::Op::Atan},
          {"sin", Expr::Op::Sin}, {"cos", Expr::Op::Cos}};
      if (auto f = funcs.find(name); f != funcs.end()) {
        if (!accept('(')) fail("expected '(' after " + name);
        Expr arg = expr();
        if (!accept(')')) fail("expected ')'");
        return Expr::apply(f->second, arg);
      }
      if (name == "pi") return Expr::constant(std::numbers::pi);
      if (auto v = vars_.find(name); v != vars_.end()) return Expr::variable(v->second);
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  const std::map<std::string, std::size_t>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(std::string_view text, const std::map<std::string, std::size_t>& variables) {
  return detail::ExprParser(text, variables).parse();
}

}  // namespace homoclinic
