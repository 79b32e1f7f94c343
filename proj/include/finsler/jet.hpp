#pragma once

/**
 * @file jet.hpp
 * @brief Truncated multivariate Taylor arithmetic (forward-mode jets).
 *
 * A Jet over m variables of order K stores every Taylor coefficient of a
 * scalar function whose multi-index has total degree <= K. Coefficients are
 * kept densely in graded order: all degree-0 terms, then degree 1, and so on,
 * so the layout of order K-1 is a prefix of the layout of order K. Truncating
 * or differentiating a jet therefore never needs to re-map indices.
 *
 * @code
 * auto [x, y] = std::array{Jet::variable(3.0, 0, 2, 2), Jet::variable(4.0, 1, 2, 2)};
 * Jet r = sqrt(x * x + y * y);
 * r.value();                            // 5
 * r.derivative(std::array{1, 0});       // 3/5
 * @endcode
 */

#include <finsler/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace finsler {

inline constexpr int kMaxJetVars = 16;
inline constexpr int kMaxJetOrder = 12;
inline constexpr std::uint64_t kMaxJetProductTerms = 8'000'000;

using MultiIndex = std::vector<int>;

namespace detail {

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// 4 bits per exponent; valid because order <= 12 < 16 and vars <= 16.
inline std::uint64_t pack(std::span<const int> alpha) {
  std::uint64_t key = 0;
  for (std::size_t v = 0; v < alpha.size(); ++v) key |= static_cast<std::uint64_t>(alpha[v]) << (4 * v);
  return key;
}

}  // namespace detail

/// Coefficient layout shared by every jet with the same (num_vars, order).
class JetLayout {
 public:
  struct Term {
    std::uint32_t rhs;
    std::uint32_t out;
  };

  static std::shared_ptr<const JetLayout> get(int num_vars, int order) {
    if (num_vars < 0 || num_vars > kMaxJetVars)
      throw OrderBudgetError("jet variable count " + std::to_string(num_vars) + " outside [0, " +
                             std::to_string(kMaxJetVars) + "]");
    if (order < 0 || order > kMaxJetOrder)
      throw OrderBudgetError("jet order " + std::to_string(order) + " outside [0, " +
                             std::to_string(kMaxJetOrder) + "]");
    if (detail::binomial(2 * num_vars + order, order) > kMaxJetProductTerms)
      throw OrderBudgetError("jet with " + std::to_string(num_vars) + " variables at order " +
                             std::to_string(order) + " exceeds the product-table budget");

    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> registry;
    std::lock_guard lock(mutex);
    auto& slot = registry[{num_vars, order}];
    if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(num_vars, order));
    return slot;
  }

  int num_vars() const noexcept { return num_vars_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return indices_.size(); }

  /// Number of coefficients of total degree <= d.
  std::size_t size_up_to(int d) const noexcept {
    return static_cast<std::size_t>(detail::binomial(num_vars_ + d, d));
  }

  const MultiIndex& multi_index(std::size_t pos) const { return indices_[pos]; }
  int degree(std::size_t pos) const { return degree_[pos]; }

  std::optional<std::size_t> position(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != num_vars_) return std::nullopt;
    int total = 0;
    for (int a : alpha) {
      if (a < 0) return std::nullopt;
      total += a;
    }
    if (total > order_) return std::nullopt;
    auto it = lookup_.find(detail::pack(alpha));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  /// Position of alpha + e_var, for alpha of degree < order.
  std::size_t raised(int var, std::size_t pos) const { return raised_[var][pos]; }

  /// Products a[lhs] * b[rhs] that land at degree <= order, grouped by lhs.
  std::span<const Term> terms_for(std::size_t lhs) const {
    return std::span<const Term>(terms_).subspan(term_offsets_[lhs], term_offsets_[lhs + 1] - term_offsets_[lhs]);
  }

 private:
  JetLayout(int num_vars, int order) : num_vars_(num_vars), order_(order) {
    MultiIndex alpha(static_cast<std::size_t>(num_vars), 0);
    for (int d = 0; d <= order; ++d) enumerate(alpha, 0, d, d);
    for (std::size_t p = 0; p < indices_.size(); ++p) lookup_.emplace(detail::pack(indices_[p]), p);

    raised_.assign(static_cast<std::size_t>(num_vars), {});
    const std::size_t lower = order > 0 ? size_up_to(order - 1) : 0;
    for (int v = 0; v < num_vars; ++v) {
      raised_[v].resize(lower);
      for (std::size_t p = 0; p < lower; ++p) {
        MultiIndex up = indices_[p];
        ++up[v];
        raised_[v][p] = lookup_.at(detail::pack(up));
      }
    }

    term_offsets_.reserve(indices_.size() + 1);
    term_offsets_.push_back(0);
    MultiIndex sum(static_cast<std::size_t>(num_vars));
    for (std::size_t a = 0; a < indices_.size(); ++a) {
      const std::size_t limit = size_up_to(order - degree_[a]);
      for (std::size_t b = 0; b < limit; ++b) {
        for (int v = 0; v < num_vars; ++v) sum[v] = indices_[a][v] + indices_[b][v];
        terms_.push_back({static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(lookup_.at(detail::pack(sum)))});
      }
      term_offsets_.push_back(terms_.size());
    }
  }

  // Lexicographically descending exponents within each degree.
  void enumerate(MultiIndex& alpha, int var, int remaining, int total) {
    if (var == num_vars_ - 1 || num_vars_ == 0) {
      if (num_vars_ == 0) {
        if (remaining == 0) {
          indices_.push_back(alpha);
          degree_.push_back(total);
        }
        return;
      }
      alpha[var] = remaining;
      indices_.push_back(alpha);
      degree_.push_back(total);
      alpha[var] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      alpha[var] = e;
      enumerate(alpha, var + 1, remaining - e, total);
    }
    alpha[var] = 0;
  }

  int num_vars_;
  int order_;
  std::vector<MultiIndex> indices_;
  std::vector<int> degree_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
  std::vector<std::vector<std::size_t>> raised_;
  std::vector<Term> terms_;
  std::vector<std::size_t> term_offsets_;
};

/// Truncated Taylor expansion of a scalar in num_vars() variables.
class Jet {
 public:
  /// The scalar zero, compatible with jets of any shape.
  Jet() : Jet(JetLayout::get(0, 0), 0.0) {}

  Jet(std::shared_ptr<const JetLayout> layout, double value)
      : layout_(std::move(layout)), c_(layout_->size(), 0.0) {
    c_[0] = value;
  }

  static Jet constant(double value, int num_vars, int order) {
    return Jet(JetLayout::get(num_vars, order), value);
  }

  static Jet variable(double value, int var, int num_vars, int order) {
    if (var < 0 || var >= num_vars) throw OrderBudgetError("jet variable index out of range");
    Jet j = constant(value, num_vars, order);
    if (order > 0) j.c_[1 + static_cast<std::size_t>(var)] = 1.0;
    return j;
  }

  /// Constant with the same shape as this jet.
  Jet constant_like(double value) const { return Jet(layout_, value); }

  double value() const noexcept { return c_[0]; }
  int order() const noexcept { return layout_->order(); }
  int num_vars() const noexcept { return layout_->num_vars(); }
  const JetLayout& layout() const noexcept { return *layout_; }
  std::span<const double> coefficients() const noexcept { return c_; }

  /// True when every coefficient above degree 0 vanishes.
  bool is_constant() const {
    return std::all_of(c_.begin() + 1, c_.end(), [](double v) { return v == 0.0; });
  }

  /// Raw Taylor coefficient of the given multi-index.
  double coefficient(std::span<const int> alpha) const { return c_[checked_position(alpha)]; }

  /// Partial derivative d^|alpha| f / dv^alpha (coefficient times alpha!).
  double derivative(std::span<const int> alpha) const {
    double scale = 1.0;
    for (int a : alpha)
      for (int k = 2; k <= a; ++k) scale *= k;
    return c_[checked_position(alpha)] * scale;
  }

  /// Partial derivative with respect to one variable; the order drops by one.
  Jet diff(int var) const {
    if (var < 0 || var >= num_vars()) throw OrderBudgetError("differentiation variable out of range");
    if (order() == 0) throw OrderBudgetError("cannot differentiate an order-0 jet");
    Jet r(JetLayout::get(num_vars(), order() - 1), 0.0);
    for (std::size_t p = 0; p < r.c_.size(); ++p) {
      const std::size_t up = layout_->raised(var, p);
      r.c_[p] = static_cast<double>(layout_->multi_index(up)[var]) * c_[up];
    }
    return r;
  }

  /// Drop every coefficient of degree above `order`.
  Jet truncated(int new_order) const {
    if (new_order >= order()) return *this;
    if (new_order < 0) throw OrderBudgetError("negative truncation order");
    Jet r(JetLayout::get(num_vars(), new_order), 0.0);
    std::copy_n(c_.begin(), r.c_.size(), r.c_.begin());
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (double& v : r.c_) v = -v;
    return r;
  }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    auto [x, y] = align(a, b);
    for (std::size_t p = 0; p < x.c_.size(); ++p) x.c_[p] += y.c_[p];
    return x;
  }

  friend Jet operator-(const Jet& a, const Jet& b) {
    auto [x, y] = align(a, b);
    for (std::size_t p = 0; p < x.c_.size(); ++p) x.c_[p] -= y.c_[p];
    return x;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    if (a.num_vars() == 0) return b * a.value();
    if (b.num_vars() == 0) return a * b.value();
    auto [x, y] = align(a, b);
    Jet r(x.layout_, 0.0);
    const JetLayout& lay = *x.layout_;
    for (std::size_t lhs = 0; lhs < x.c_.size(); ++lhs) {
      const double av = x.c_[lhs];
      if (av == 0.0) continue;
      for (const auto& t : lay.terms_for(lhs)) r.c_[t.out] += av * y.c_[t.rhs];
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r = a * reciprocal(b);
    r.c_[0] = a.value() / b.value();
    return r;
  }

  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a += -s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) {
    const double v = a.value() / s;
    a *= 1.0 / s;
    a.c_[0] = v;
    return a;
  }
  friend Jet operator/(double s, const Jet& a) {
    Jet r = reciprocal(a) * s;
    r.c_[0] = s / a.value();
    return r;
  }

  /// f(a) for a univariate f given by its Taylor coefficients at a.value():
  /// taylor[k] = f^(k)(a0) / k!. Horner evaluation in the nilpotent part.
  friend Jet compose(const Jet& a, std::span<const double> taylor) {
    Jet shifted = a;
    shifted.c_[0] = 0.0;
    const int k_max = std::min<int>(a.order(), static_cast<int>(taylor.size()) - 1);
    Jet r = a.constant_like(taylor[static_cast<std::size_t>(k_max)]);
    for (int k = k_max - 1; k >= 0; --k) {
      r = r * shifted;
      r.c_[0] += taylor[static_cast<std::size_t>(k)];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double a0 = a.value();
    if (a0 == 0.0 || !std::isfinite(a0)) throw DomainError("division by a jet with zero value");
    std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
    double p = 1.0 / a0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = (k % 2 == 0) ? p : -p;
      p /= a0;
    }
    return compose(a, t);
  }

  friend Jet exp(const Jet& a) {
    std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
    double v = std::exp(a.value());
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = v;
      v /= static_cast<double>(k + 1);
    }
    return compose(a, t);
  }

  friend Jet log(const Jet& a) {
    const double a0 = a.value();
    if (!(a0 > 0.0)) throw DomainError("log of non-positive value " + std::to_string(a0));
    std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
    t[0] = std::log(a0);
    double p = 1.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
      p /= a0;
      t[k] = ((k % 2 == 1) ? p : -p) / static_cast<double>(k);
    }
    return compose(a, t);
  }

  /// Real power; requires a positive base unless the exponent is an integer.
  friend Jet pow(const Jet& a, double r) {
    if (r == std::floor(r) && std::abs(r) <= 1024.0) return pow(a, static_cast<int>(r));
    const double a0 = a.value();
    if (!(a0 > 0.0)) throw DomainError("non-integer power of non-positive value " + std::to_string(a0));
    std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
    double binom = 1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = binom * std::pow(a0, r - static_cast<double>(k));
      binom *= (r - static_cast<double>(k)) / static_cast<double>(k + 1);
    }
    Jet out = compose(a, t);
    out.c_[0] = std::pow(a0, r);
    return out;
  }

  friend Jet pow(const Jet& a, int p) {
    if (p < 0) {
      Jet r = reciprocal(pow(a, -p));
      r.c_[0] = std::pow(a.value(), static_cast<double>(p));
      return r;
    }
    Jet result = a.constant_like(1.0);
    Jet base = a;
    for (int e = p; e > 0;) {
      if (e & 1) result = result * base;
      e >>= 1;
      if (e > 0) base = base * base;
    }
    result.c_[0] = std::pow(a.value(), static_cast<double>(p));
    return result;
  }

  friend Jet pow(const Jet& a, const Jet& b) {
    if (b.is_constant()) return pow(a, b.value());
    Jet r = exp(b * log(a));
    r.c_[0] = std::pow(a.value(), b.value());
    return r;
  }

  friend Jet sqrt(const Jet& a) {
    if (!(a.value() > 0.0)) throw DomainError("sqrt of non-positive value " + std::to_string(a.value()));
    Jet r = pow(a, 0.5);
    r.c_[0] = std::sqrt(a.value());
    return r;
  }

  friend Jet sin(const Jet& a) {
    std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
    const double s = std::sin(a.value()), c = std::cos(a.value());
    const double cycle[4] = {s, c, -s, -c};
    double fact = 1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (k > 0) fact *= static_cast<double>(k);
      t[k] = cycle[k % 4] / fact;
    }
    return compose(a, t);
  }

  friend Jet cos(const Jet& a) {
    std::vector<double> t(static_cast<std::size_t>(a.order()) + 1);
    const double s = std::sin(a.value()), c = std::cos(a.value());
    const double cycle[4] = {c, -s, -c, s};
    double fact = 1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (k > 0) fact *= static_cast<double>(k);
      t[k] = cycle[k % 4] / fact;
    }
    return compose(a, t);
  }

 private:
  std::size_t checked_position(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != num_vars())
      throw OrderBudgetError("multi-index has " + std::to_string(alpha.size()) + " entries, jet has " +
                             std::to_string(num_vars()) + " variables");
    const int total = std::accumulate(alpha.begin(), alpha.end(), 0);
    if (total > order())
      throw OrderBudgetError("derivative of order " + std::to_string(total) + " requested from jet of order " +
                             std::to_string(order()));
    auto pos = layout_->position(alpha);
    if (!pos) throw OrderBudgetError("invalid multi-index");
    return *pos;
  }

  // Bring both operands to a common shape: scalar jets broadcast, higher
  // orders truncate to the lower one.
  static std::pair<Jet, Jet> align(const Jet& a, const Jet& b) {
    if (a.num_vars() == 0 && b.num_vars() != 0) return {b.constant_like(a.value()), b};
    if (b.num_vars() == 0 && a.num_vars() != 0) return {a, a.constant_like(b.value())};
    if (a.num_vars() != b.num_vars())
      throw OrderBudgetError("jets over " + std::to_string(a.num_vars()) + " and " + std::to_string(b.num_vars()) +
                             " variables cannot be combined");
    const int k = std::min(a.order(), b.order());
    return {a.truncated(k), b.truncated(k)};
  }

  std::shared_ptr<const JetLayout> layout_;
  std::vector<double> c_;
};

/// Seed jets: one per value; values at positions listed in `active` become
/// the differentiation variables 0, 1, ... in that order.
inline std::vector<Jet> lift(std::span<const double> values, std::span<const int> active, int order) {
  const int m = static_cast<int>(active.size());
  auto layout = JetLayout::get(m, order);
  std::vector<Jet> out;
  out.reserve(values.size());
  for (double v : values) out.emplace_back(layout, v);
  for (int slot = 0; slot < m; ++slot) {
    const int idx = active[static_cast<std::size_t>(slot)];
    if (idx < 0 || idx >= static_cast<int>(values.size())) throw OrderBudgetError("active index out of range");
    out[static_cast<std::size_t>(idx)] = Jet::variable(values[static_cast<std::size_t>(idx)], slot, m, order);
  }
  return out;
}

enum class JetOp { add, sub, mul, div, pow, sqrt, exp, log, sin, cos };

/// Apply one primitive to its operands (binary for add..pow, unary otherwise).
inline Jet jet_apply(JetOp op, std::span<const Jet> args) {
  const bool binary = op == JetOp::add || op == JetOp::sub || op == JetOp::mul || op == JetOp::div ||
                      op == JetOp::pow;
  if (args.size() != (binary ? 2u : 1u)) throw EvaluationError("wrong operand count", "apply");
  switch (op) {
    case JetOp::add: return args[0] + args[1];
    case JetOp::sub: return args[0] - args[1];
    case JetOp::mul: return args[0] * args[1];
    case JetOp::div: return args[0] / args[1];
    case JetOp::pow: return pow(args[0], args[1]);
    case JetOp::sqrt: return sqrt(args[0]);
    case JetOp::exp: return exp(args[0]);
    case JetOp::log: return log(args[0]);
    case JetOp::sin: return sin(args[0]);
    case JetOp::cos: return cos(args[0]);
  }
  return {};
}

/// Partial derivative value at the expansion point.
inline double extract(const Jet& jet, std::span<const int> alpha) { return jet.derivative(alpha); }

}  // namespace finsler
