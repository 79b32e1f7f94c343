#pragma once

/**
 * @file spec_lang.hpp
 * @brief Parser and printer for metric, change and hypersurface spec files.
 *
 * A spec is a sequence of statements separated by newlines or ';'. `#` starts
 * a comment. See docs/spec-language.md for the grammar.
 *
 *     dim 2
 *     L = sqrt(y1^2 + y2^2) + 0.1*y1
 *     sample x = [-1, 1]
 *     sample y = [0.5, 2]
 */

#include <finsler/error.hpp>
#include <finsler/expr.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace finsler {

inline constexpr int kMaxDimension = 6;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Box for the position family and an annulus for the direction family.
struct SamplingDomain {
  std::vector<Interval> box;
  Interval radius{0.5, 2.0};
};

enum class MetricMode { direct, riemannian };

/// Fundamental function L(x, y), either given directly or as sqrt(a_ij y^i y^j).
struct MetricSpec {
  int dim = 0;
  MetricMode mode = MetricMode::direct;
  Expr length;               // direct mode
  std::vector<Expr> a;       // riemannian mode, dim*dim, symmetric
  SamplingDomain domain;     // x box, y annulus
};

/// Randers conformal change data: sigma(x) and b_i(x).
struct ChangeSpec {
  int dim = 0;
  Expr sigma;
  std::vector<Expr> b;
};

/// Embedding x^i(u^1..u^{n-1}) of a hypersurface in an n-dimensional space.
struct HypersurfaceSpec {
  int dim = 0;
  std::vector<Expr> embedding;
  SamplingDomain domain;                  // u box, v annulus
  std::optional<Expr> implicit;           // defining function f(x); N points along grad f
  std::optional<std::vector<double>> orient;  // constant reference covector
};

using Spec = std::variant<MetricSpec, ChangeSpec, HypersurfaceSpec>;

namespace detail {

struct Token {
  enum class Kind { number, ident, symbol, end_of_statement, end };
  Kind kind = Kind::end;
  std::string text;
  double number = 0.0;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blanks();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        t.kind = Token::Kind::end;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (c == '\n' || c == ';') {
        t.kind = Token::Kind::end_of_statement;
        t.text = std::string(1, c);
        advance();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
                                                                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Token::Kind::number;
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        t.number = std::strtod(begin, &end);
        const auto len = static_cast<std::size_t>(end - begin);
        t.text = std::string(src_.substr(pos_, len));
        for (std::size_t k = 0; k < len; ++k) advance();
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text += src_[pos_];
          advance();
        }
      } else if (std::string_view("+-*/^()[],=").find(c) != std::string_view::npos) {
        t.kind = Token::Kind::symbol;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
      }
      out.push_back(t);
    }
  }

 private:
  void skip_blanks() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Parses "x12" style names into (prefix, 1-based number).
inline std::optional<std::pair<std::string, int>> split_indexed(const std::string& name) {
  std::size_t k = 0;
  while (k < name.size() && std::isalpha(static_cast<unsigned char>(name[k]))) ++k;
  if (k == 0 || k == name.size()) return std::nullopt;
  for (std::size_t j = k; j < name.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(name[j]))) return std::nullopt;
  if (name[k] == '0') return std::nullopt;
  return std::pair{name.substr(0, k), std::stoi(name.substr(k))};
}

struct Statement {
  enum class Kind { dim, assign, sample, orient };
  Kind kind = Kind::assign;
  std::string key;
  SourceLoc loc;
  Expr value;
  std::vector<Expr> list;
  int dim = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::vector<Statement> statements() {
    std::vector<Statement> out;
    while (true) {
      while (peek().kind == Token::Kind::end_of_statement) ++pos_;
      if (peek().kind == Token::Kind::end) return out;
      out.push_back(statement());
      const Token& t = peek();
      if (t.kind != Token::Kind::end_of_statement && t.kind != Token::Kind::end)
        throw ParseError("expected end of statement, found '" + t.text + "'", t.loc.line, t.loc.column);
    }
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  bool accept(const char* sym) {
    if (peek().kind == Token::Kind::symbol && peek().text == sym) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(const char* sym) {
    const Token& t = peek();
    if (!accept(sym)) throw ParseError(std::string("expected '") + sym + "', found '" + describe(t) + "'", t.loc.line, t.loc.column);
  }

  static std::string describe(const Token& t) {
    if (t.kind == Token::Kind::end) return "end of input";
    if (t.kind == Token::Kind::end_of_statement) return "end of line";
    return t.text;
  }

  Statement statement() {
    const Token& head = next();
    if (head.kind != Token::Kind::ident)
      throw ParseError("expected a key, found '" + describe(head) + "'", head.loc.line, head.loc.column);
    Statement s;
    s.loc = head.loc;
    if (head.text == "dim") {
      s.kind = Statement::Kind::dim;
      accept("=");
      const Token& n = next();
      if (n.kind != Token::Kind::number || n.number != static_cast<int>(n.number))
        throw ParseError("dim expects an integer", n.loc.line, n.loc.column);
      s.dim = static_cast<int>(n.number);
      return s;
    }
    if (head.text == "sample") {
      s.kind = Statement::Kind::sample;
      const Token& name = next();
      if (name.kind != Token::Kind::ident)
        throw ParseError("sample expects a variable family name", name.loc.line, name.loc.column);
      s.key = name.text;
      expect("=");
      s.list = bracket_list();
      if (s.list.size() != 2)
        throw ParseError("sample range needs exactly two bounds", name.loc.line, name.loc.column);
      return s;
    }
    if (head.text == "orient") {
      s.kind = Statement::Kind::orient;
      s.key = head.text;
      expect("=");
      s.list = bracket_list();
      return s;
    }
    s.kind = Statement::Kind::assign;
    s.key = head.text;
    expect("=");
    s.value = expression();
    return s;
  }

  std::vector<Expr> bracket_list() {
    expect("[");
    std::vector<Expr> items{expression()};
    while (accept(",")) items.push_back(expression());
    expect("]");
    return items;
  }

  Expr expression() {
    Expr lhs = term();
    while (true) {
      const SourceLoc loc = peek().loc;
      if (accept("+")) lhs = expr::binary(BinaryOp::add, lhs, term(), loc);
      else if (accept("-")) lhs = expr::binary(BinaryOp::sub, lhs, term(), loc);
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    while (true) {
      const SourceLoc loc = peek().loc;
      if (accept("*")) lhs = expr::binary(BinaryOp::mul, lhs, unary(), loc);
      else if (accept("/")) lhs = expr::binary(BinaryOp::div, lhs, unary(), loc);
      else return lhs;
    }
  }

  Expr unary() {
    const SourceLoc loc = peek().loc;
    if (accept("-")) return expr::negate(unary(), loc);
    if (accept("+")) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    const SourceLoc loc = peek().loc;
    if (accept("^")) return expr::binary(BinaryOp::pow, base, unary(), loc);
    return base;
  }

  Expr primary() {
    const Token& t = next();
    if (t.kind == Token::Kind::number) return expr::constant(t.number, t.loc);
    if (t.kind == Token::Kind::symbol && t.text == "(") {
      Expr e = expression();
      expect(")");
      return e;
    }
    if (t.kind == Token::Kind::ident) {
      if (peek().kind == Token::Kind::symbol && peek().text == "(") {
        static const std::map<std::string, Func> funcs = {
            {"sqrt", Func::sqrt}, {"exp", Func::exp}, {"log", Func::log}, {"sin", Func::sin}, {"cos", Func::cos}};
        auto it = funcs.find(t.text);
        if (it == funcs.end()) throw ParseError("unknown function '" + t.text + "'", t.loc.line, t.loc.column);
        ++pos_;
        Expr arg = expression();
        expect(")");
        return expr::call(it->second, arg, t.loc);
      }
      if (t.text == "pi" || t.text == "e") return expr::named_constant(t.text, t.loc);
      if (auto parts = split_indexed(t.text)) {
        static const std::map<std::string, VarKind> kinds = {
            {"x", VarKind::x}, {"y", VarKind::y}, {"u", VarKind::u}, {"v", VarKind::v}};
        auto it = kinds.find(parts->first);
        if (it != kinds.end()) return expr::variable(it->second, parts->second - 1, t.loc);
      }
      throw ParseError("unbound symbol '" + t.text + "'", t.loc.line, t.loc.column);
    }
    throw ParseError("expected an expression, found '" + describe(t) + "'", t.loc.line, t.loc.column);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Checks every variable reference against the allowed families and dimension.
inline void check_variables(const Expr& e, const std::set<VarKind>& allowed, int limit_xy, int limit_uv,
                            const std::string& key) {
  switch (e->kind) {
    case ExprNode::Kind::constant: return;
    case ExprNode::Kind::variable: {
      const std::string name = var_prefix(e->var) + std::to_string(e->index + 1);
      if (!allowed.count(e->var))
        throw ParseError("'" + name + "' may not appear in '" + key + "'", e->loc.line, e->loc.column);
      const int limit = (e->var == VarKind::x || e->var == VarKind::y) ? limit_xy : limit_uv;
      if (e->index >= limit)
        throw ParseError("dimension mismatch: '" + name + "' exceeds the declared dimension", e->loc.line,
                         e->loc.column);
      return;
    }
    case ExprNode::Kind::negate:
    case ExprNode::Kind::call: check_variables(e->lhs, allowed, limit_xy, limit_uv, key); return;
    case ExprNode::Kind::binary:
      check_variables(e->lhs, allowed, limit_xy, limit_uv, key);
      check_variables(e->rhs, allowed, limit_xy, limit_uv, key);
      return;
  }
}

inline double closed_value(const Expr& e, const std::string& what) {
  if (!expr::is_closed(e)) throw ParseError(what + " must be a constant expression", e->loc.line, e->loc.column);
  try {
    return evaluate_constant(e);
  } catch (const Error& err) {
    throw ParseError(what + ": " + err.what(), e->loc.line, e->loc.column);
  }
}

}  // namespace detail

/// Parse a spec document into whichever kind its keys describe.
inline Spec parse_spec(std::string_view text) {
  using detail::Statement;
  auto stmts = detail::Parser(detail::Lexer(text).run()).statements();

  int dim = 0;
  SourceLoc dim_loc;
  for (const auto& s : stmts) {
    if (s.kind != Statement::Kind::dim) continue;
    if (dim != 0) throw ParseError("duplicate 'dim'", s.loc.line, s.loc.column);
    dim = s.dim;
    dim_loc = s.loc;
  }
  if (dim == 0) throw ParseError("missing 'dim' declaration", 1, 1);
  if (dim < 2 || dim > kMaxDimension)
    throw ParseError("dim must lie in [2, " + std::to_string(kMaxDimension) + "]", dim_loc.line, dim_loc.column);

  enum class Kind { none, metric, change, hypersurface };
  Kind kind = Kind::none;
  auto claim = [&](Kind k, const Statement& s) {
    if (kind != Kind::none && kind != k)
      throw ParseError("'" + s.key + "' mixes spec kinds in one document", s.loc.line, s.loc.column);
    kind = k;
  };

  std::set<std::string> seen;
  Expr length, sigma, implicit;
  std::vector<Expr> a(static_cast<std::size_t>(dim * dim));
  std::vector<Expr> b(static_cast<std::size_t>(dim));
  std::vector<Expr> embedding(static_cast<std::size_t>(dim));
  std::vector<std::pair<std::string, Statement>> samples;
  std::optional<Statement> orient;

  for (const auto& s : stmts) {
    if (s.kind == Statement::Kind::dim) continue;
    if (s.kind == Statement::Kind::sample) {
      samples.emplace_back(s.key, s);
      continue;
    }
    if (s.kind == Statement::Kind::orient) {
      claim(Kind::hypersurface, s);
      if (orient) throw ParseError("duplicate 'orient'", s.loc.line, s.loc.column);
      orient = s;
      continue;
    }
    if (!seen.insert(s.key).second) throw ParseError("duplicate key '" + s.key + "'", s.loc.line, s.loc.column);
    const auto parts = detail::split_indexed(s.key);
    if (s.key == "L") {
      claim(Kind::metric, s);
      detail::check_variables(s.value, {VarKind::x, VarKind::y}, dim, 0, s.key);
      length = s.value;
    } else if (s.key == "sigma") {
      claim(Kind::change, s);
      detail::check_variables(s.value, {VarKind::x}, dim, 0, s.key);
      sigma = s.value;
    } else if (s.key == "implicit") {
      claim(Kind::hypersurface, s);
      detail::check_variables(s.value, {VarKind::x}, dim, 0, s.key);
      implicit = s.value;
    } else if (parts && parts->first == "a" && s.key.size() == 3) {
      claim(Kind::metric, s);
      const int i = (parts->second / 10) - 1, j = (parts->second % 10) - 1;
      if (i < 0 || j < 0 || i >= dim || j >= dim)
        throw ParseError("metric entry '" + s.key + "' outside dimension", s.loc.line, s.loc.column);
      if (a[static_cast<std::size_t>(i * dim + j)])
        throw ParseError("entry '" + s.key + "' given twice (a_ij is symmetric)", s.loc.line, s.loc.column);
      detail::check_variables(s.value, {VarKind::x}, dim, 0, s.key);
      a[static_cast<std::size_t>(i * dim + j)] = s.value;
      a[static_cast<std::size_t>(j * dim + i)] = s.value;
    } else if (parts && parts->first == "b") {
      claim(Kind::change, s);
      if (parts->second > dim)
        throw ParseError("dimension mismatch: '" + s.key + "' exceeds dim", s.loc.line, s.loc.column);
      detail::check_variables(s.value, {VarKind::x}, dim, 0, s.key);
      b[static_cast<std::size_t>(parts->second - 1)] = s.value;
    } else if (parts && parts->first == "x") {
      claim(Kind::hypersurface, s);
      if (parts->second > dim)
        throw ParseError("dimension mismatch: '" + s.key + "' exceeds dim", s.loc.line, s.loc.column);
      detail::check_variables(s.value, {VarKind::u}, dim, dim - 1, s.key);
      embedding[static_cast<std::size_t>(parts->second - 1)] = s.value;
    } else {
      throw ParseError("unknown key '" + s.key + "'", s.loc.line, s.loc.column);
    }
  }

  if (kind == Kind::none) throw ParseError("document defines no metric, change or hypersurface", 1, 1);
  if (kind == Kind::metric && length && std::any_of(a.begin(), a.end(), [](const Expr& e) { return bool(e); }))
    throw ParseError("give either 'L' or the entries a_ij, not both", dim_loc.line, dim_loc.column);

  // Sampling domains: the position family gets a box, the direction family an annulus.
  const bool host = kind == Kind::metric;
  const int box_dim = host ? dim : dim - 1;
  const std::string box_name = host ? "x" : "u";
  const std::string dir_name = host ? "y" : "v";
  SamplingDomain domain;
  domain.box.assign(static_cast<std::size_t>(box_dim), Interval{-1.0, 1.0});
  for (const auto& [name, s] : samples) {
    if (kind == Kind::change)
      throw ParseError("change specs take their sampling domain from the metric", s.loc.line, s.loc.column);
    const double lo = detail::closed_value(s.list[0], "sample bound");
    const double hi = detail::closed_value(s.list[1], "sample bound");
    if (!(lo < hi)) throw ParseError("sample range must satisfy lo < hi", s.loc.line, s.loc.column);
    if (name == dir_name) {
      if (!(lo > 0.0)) throw ParseError("direction annulus must have a positive inner radius", s.loc.line, s.loc.column);
      domain.radius = {lo, hi};
    } else if (name == box_name) {
      for (auto& iv : domain.box) iv = {lo, hi};
    } else if (auto parts = detail::split_indexed(name); parts && parts->first == box_name && parts->second <= box_dim) {
      continue;  // per-coordinate ranges are applied after the family-wide ones
    } else {
      throw ParseError("unknown sample family '" + name + "'", s.loc.line, s.loc.column);
    }
  }
  for (const auto& [name, s] : samples) {
    auto parts = detail::split_indexed(name);
    if (!parts || parts->first != box_name) continue;
    domain.box[static_cast<std::size_t>(parts->second - 1)] = {detail::closed_value(s.list[0], "sample bound"),
                                                               detail::closed_value(s.list[1], "sample bound")};
  }

  switch (kind) {
    case Kind::metric: {
      MetricSpec m;
      m.dim = dim;
      m.domain = domain;
      if (length) {
        m.mode = MetricMode::direct;
        m.length = length;
      } else {
        m.mode = MetricMode::riemannian;
        for (int i = 0; i < dim; ++i)
          if (!a[static_cast<std::size_t>(i * dim + i)])
            throw ParseError("missing diagonal entry 'a" + std::to_string(i + 1) + std::to_string(i + 1) + "'",
                             dim_loc.line, dim_loc.column);
        for (auto& e : a)
          if (!e) e = expr::constant(0.0);
        m.a = a;
      }
      return m;
    }
    case Kind::change: {
      ChangeSpec c;
      c.dim = dim;
      c.sigma = sigma ? sigma : expr::constant(0.0);
      for (auto& e : b)
        if (!e) e = expr::constant(0.0);
      c.b = b;
      return c;
    }
    case Kind::hypersurface: {
      HypersurfaceSpec h;
      h.dim = dim;
      h.domain = domain;
      for (int i = 0; i < dim; ++i)
        if (!embedding[static_cast<std::size_t>(i)])
          throw ParseError("missing embedding component 'x" + std::to_string(i + 1) + "'", dim_loc.line,
                           dim_loc.column);
      h.embedding = embedding;
      if (implicit) h.implicit = implicit;
      if (orient) {
        if (static_cast<int>(orient->list.size()) != dim)
          throw ParseError("orient needs " + std::to_string(dim) + " components", orient->loc.line,
                           orient->loc.column);
        std::vector<double> ref;
        for (const auto& e : orient->list) ref.push_back(detail::closed_value(e, "orient component"));
        h.orient = ref;
      }
      return h;
    }
    case Kind::none: break;
  }
  throw ParseError("unreachable", 1, 1);
}

namespace detail {

template <class T>
T expect_kind(Spec spec, const char* what) {
  if (auto* p = std::get_if<T>(&spec)) return std::move(*p);
  throw ParseError(std::string("document is not a ") + what + " spec", 1, 1);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_interval(const Interval& iv) {
  return "[" + format_number(iv.lo) + ", " + format_number(iv.hi) + "]";
}

}  // namespace detail

inline MetricSpec parse_metric(std::string_view text) { return detail::expect_kind<MetricSpec>(parse_spec(text), "metric"); }
inline ChangeSpec parse_change(std::string_view text) { return detail::expect_kind<ChangeSpec>(parse_spec(text), "change"); }
inline HypersurfaceSpec parse_hypersurface(std::string_view text) {
  return detail::expect_kind<HypersurfaceSpec>(parse_spec(text), "hypersurface");
}

inline Spec load_spec(const std::string& path) {
  try {
    return parse_spec(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), e.column(), path);
  }
}

/// Canonical text form of a spec; parse(print(s)) prints identically.
inline std::string print_spec(const Spec& spec) {
  std::ostringstream out;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        out << "dim " << s.dim << "\n";
        if constexpr (std::is_same_v<S, MetricSpec>) {
          if (s.mode == MetricMode::direct) {
            out << "L = " << to_string(s.length) << "\n";
          } else {
            for (int i = 0; i < s.dim; ++i)
              for (int j = i; j < s.dim; ++j)
                out << "a" << i + 1 << j + 1 << " = " << to_string(s.a[static_cast<std::size_t>(i * s.dim + j)]) << "\n";
          }
          for (std::size_t i = 0; i < s.domain.box.size(); ++i)
            out << "sample x" << i + 1 << " = " << detail::format_interval(s.domain.box[i]) << "\n";
          out << "sample y = " << detail::format_interval(s.domain.radius) << "\n";
        } else if constexpr (std::is_same_v<S, ChangeSpec>) {
          out << "sigma = " << to_string(s.sigma) << "\n";
          for (std::size_t i = 0; i < s.b.size(); ++i) out << "b" << i + 1 << " = " << to_string(s.b[i]) << "\n";
        } else {
          for (std::size_t i = 0; i < s.embedding.size(); ++i)
            out << "x" << i + 1 << " = " << to_string(s.embedding[i]) << "\n";
          if (s.implicit) out << "implicit = " << to_string(*s.implicit) << "\n";
          if (s.orient) {
            out << "orient = [";
            for (std::size_t i = 0; i < s.orient->size(); ++i)
              out << (i ? ", " : "") << detail::format_number((*s.orient)[i]);
            out << "]\n";
          }
          for (std::size_t i = 0; i < s.domain.box.size(); ++i)
            out << "sample u" << i + 1 << " = " << detail::format_interval(s.domain.box[i]) << "\n";
          out << "sample v = " << detail::format_interval(s.domain.radius) << "\n";
        }
      },
      spec);
  return out.str();
}

}  // namespace finsler
