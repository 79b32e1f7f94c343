#pragma once

/**
 * @file expr.hpp
 * @brief Immutable expression trees over x, y, u, v, evaluated on doubles or jets.
 */

#include <finsler/error.hpp>
#include <finsler/jet.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace finsler {

enum class VarKind { x, y, u, v };
enum class BinaryOp { add, sub, mul, div, pow };
enum class Func { sqrt, exp, log, sin, cos };

struct SourceLoc {
  int line = 0;
  int column = 0;
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { constant, variable, negate, binary, call };

  Kind kind = Kind::constant;
  double value = 0.0;
  std::string name;  // named constants ("pi", "e"); empty for literals
  VarKind var = VarKind::x;
  int index = 0;  // zero-based
  BinaryOp op = BinaryOp::add;
  Func fn = Func::sqrt;
  Expr lhs;
  Expr rhs;
  SourceLoc loc;
};

inline const char* var_prefix(VarKind k) {
  switch (k) {
    case VarKind::x: return "x";
    case VarKind::y: return "y";
    case VarKind::u: return "u";
    case VarKind::v: return "v";
  }
  return "?";
}

inline const char* func_name(Func f) {
  switch (f) {
    case Func::sqrt: return "sqrt";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sin: return "sin";
    case Func::cos: return "cos";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Builders

namespace expr {

inline Expr constant(double v, SourceLoc loc = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::constant;
  n->value = v;
  n->loc = loc;
  return n;
}

inline Expr named_constant(const std::string& name, SourceLoc loc = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::constant;
  n->name = name;
  n->value = name == "pi" ? 3.14159265358979323846 : 2.71828182845904523536;
  n->loc = loc;
  return n;
}

inline Expr variable(VarKind k, int index, SourceLoc loc = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::variable;
  n->var = k;
  n->index = index;
  n->loc = loc;
  return n;
}

inline Expr negate(Expr a, SourceLoc loc = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::negate;
  n->lhs = std::move(a);
  n->loc = loc;
  return n;
}

inline Expr binary(BinaryOp op, Expr a, Expr b, SourceLoc loc = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::binary;
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->loc = loc;
  return n;
}

inline Expr call(Func f, Expr a, SourceLoc loc = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::call;
  n->fn = f;
  n->lhs = std::move(a);
  n->loc = loc;
  return n;
}

inline bool is_constant(const Expr& e, double v) {
  return e->kind == ExprNode::Kind::constant && e->name.empty() && e->value == v;
}

/// True when the tree references no variables at all.
inline bool is_closed(const Expr& e) {
  switch (e->kind) {
    case ExprNode::Kind::constant: return true;
    case ExprNode::Kind::variable: return false;
    case ExprNode::Kind::negate:
    case ExprNode::Kind::call: return is_closed(e->lhs);
    case ExprNode::Kind::binary: return is_closed(e->lhs) && is_closed(e->rhs);
  }
  return false;
}

// Folding builders used when programs assemble expressions.
inline Expr add(Expr a, Expr b) {
  if (is_constant(a, 0.0)) return b;
  if (is_constant(b, 0.0)) return a;
  return binary(BinaryOp::add, std::move(a), std::move(b));
}

inline Expr mul(Expr a, Expr b) {
  if (is_constant(a, 0.0) || is_constant(b, 0.0)) return constant(0.0);
  if (is_constant(a, 1.0)) return b;
  if (is_constant(b, 1.0)) return a;
  return binary(BinaryOp::mul, std::move(a), std::move(b));
}

inline Expr exp(Expr a) {
  if (is_constant(a, 0.0)) return constant(1.0);
  return call(Func::exp, std::move(a));
}

}  // namespace expr

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int precedence(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::binary:
      switch (n.op) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
      }
      break;
    case ExprNode::Kind::negate: return 3;
    case ExprNode::Kind::constant: return n.name.empty() && n.value < 0.0 ? 0 : 5;
    default: return 5;
  }
  return 5;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int digits = 1; digits < 17; ++digits) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", digits, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline void print(const ExprNode& n, std::string& out);

inline void print_operand(const Expr& child, int min_prec, std::string& out) {
  if (precedence(*child) < min_prec) {
    out += '(';
    print(*child, out);
    out += ')';
  } else {
    print(*child, out);
  }
}

inline void print(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::constant:
      out += n.name.empty() ? format_number(n.value) : n.name;
      return;
    case ExprNode::Kind::variable:
      out += var_prefix(n.var);
      out += std::to_string(n.index + 1);
      return;
    case ExprNode::Kind::negate:
      out += '-';
      print_operand(n.lhs, 4, out);
      return;
    case ExprNode::Kind::call:
      out += func_name(n.fn);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    case ExprNode::Kind::binary: {
      const int p = precedence(n);
      if (n.op == BinaryOp::pow) {
        print_operand(n.lhs, 5, out);
        out += '^';
        print_operand(n.rhs, 3, out);
        return;
      }
      print_operand(n.lhs, p, out);
      switch (n.op) {
        case BinaryOp::add: out += " + "; break;
        case BinaryOp::sub: out += " - "; break;
        case BinaryOp::mul: out += " * "; break;
        case BinaryOp::div: out += " / "; break;
        case BinaryOp::pow: break;
      }
      print_operand(n.rhs, p + 1, out);
      return;
    }
  }
}

}  // namespace detail

/// Canonical text form; parsing it back reproduces the same tree.
inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(*e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

/// Values for the four variable families; unused families may stay empty.
template <class T>
struct Bindings {
  std::span<const T> x;
  std::span<const T> y;
  std::span<const T> u;
  std::span<const T> v;

  std::span<const T> family(VarKind k) const {
    switch (k) {
      case VarKind::x: return x;
      case VarKind::y: return y;
      case VarKind::u: return u;
      case VarKind::v: return v;
    }
    return {};
  }

  T constant(double c) const {
    if constexpr (std::is_same_v<T, Jet>) {
      for (auto fam : {x, y, u, v})
        if (!fam.empty()) return fam.front().constant_like(c);
      return Jet::constant(c, 0, 0);
    } else {
      return T(c);
    }
  }
};

namespace detail {

inline double checked_sqrt(double a) {
  if (a < 0.0) throw DomainError("sqrt of negative value " + std::to_string(a));
  return std::sqrt(a);
}
inline double checked_log(double a) {
  if (!(a > 0.0)) throw DomainError("log of non-positive value " + std::to_string(a));
  return std::log(a);
}
inline double checked_div(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}
inline double checked_pow(double a, double b) {
  if (a < 0.0 && b != std::floor(b)) throw DomainError("non-integer power of negative value " + std::to_string(a));
  if (a == 0.0 && b < 0.0) throw DomainError("negative power of zero");
  return std::pow(a, b);
}

inline double apply_scalar(Func f, double a) {
  switch (f) {
    case Func::sqrt: return checked_sqrt(a);
    case Func::exp: return std::exp(a);
    case Func::log: return checked_log(a);
    case Func::sin: return std::sin(a);
    case Func::cos: return std::cos(a);
  }
  return a;
}

inline Jet apply_jet(Func f, const Jet& a) {
  switch (f) {
    case Func::sqrt: return sqrt(a);
    case Func::exp: return exp(a);
    case Func::log: return log(a);
    case Func::sin: return sin(a);
    case Func::cos: return cos(a);
  }
  return a;
}

template <class T>
T evaluate(const ExprNode& n, const Bindings<T>& b) {
  switch (n.kind) {
    case ExprNode::Kind::constant: return b.constant(n.value);
    case ExprNode::Kind::variable: {
      auto fam = b.family(n.var);
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= fam.size())
        throw EvaluationError("unbound variable", std::string(var_prefix(n.var)) + std::to_string(n.index + 1));
      return fam[static_cast<std::size_t>(n.index)];
    }
    case ExprNode::Kind::negate: return -evaluate(*n.lhs, b);
    case ExprNode::Kind::call: {
      T a = evaluate(*n.lhs, b);
      try {
        if constexpr (std::is_same_v<T, Jet>) return apply_jet(n.fn, a);
        else return apply_scalar(n.fn, a);
      } catch (const DomainError& e) {
        std::string text;
        print(n, text);
        throw EvaluationError(e.what(), text);
      }
    }
    case ExprNode::Kind::binary: {
      T l = evaluate(*n.lhs, b);
      T r = evaluate(*n.rhs, b);
      try {
        switch (n.op) {
          case BinaryOp::add: return l + r;
          case BinaryOp::sub: return l - r;
          case BinaryOp::mul: return l * r;
          case BinaryOp::div:
            if constexpr (std::is_same_v<T, Jet>) return l / r;
            else return checked_div(l, r);
          case BinaryOp::pow:
            if constexpr (std::is_same_v<T, Jet>) return pow(l, r);
            else return checked_pow(l, r);
        }
      } catch (const DomainError& e) {
        std::string text;
        print(n, text);
        throw EvaluationError(e.what(), text);
      }
    }
  }
  return b.constant(0.0);
}

}  // namespace detail

/// Evaluate on doubles or on jets. Jet bindings produce a jet carrying every
/// derivative up to the binding order.
template <class T>
T evaluate(const Expr& e, const Bindings<T>& bindings) {
  return detail::evaluate(*e, bindings);
}

/// Evaluate an expression without variables.
inline double evaluate_constant(const Expr& e) { return evaluate(e, Bindings<double>{}); }

}  // namespace finsler
