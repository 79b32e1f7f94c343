#pragma once

/**
 * @file randers_change.hpp
 * @brief Randers conformal change L* = e^sigma L + b_i y^i and its closed forms.
 *
 * The changed space can always be computed from scratch by feeding
 * changed_metric_spec() to LocalGeometry. ChangedPoint instead evaluates the
 * closed-form expressions of the starred tensors in terms of the base space,
 * so the two routes can be compared.
 */

#include <finsler/error.hpp>
#include <finsler/expr.hpp>
#include <finsler/finsler_core.hpp>
#include <finsler/jet.hpp>
#include <finsler/spec_lang.hpp>
#include <finsler/tensor.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace finsler {

inline bool is_zero_one_form(const ChangeSpec& c) {
  for (const auto& e : c.b)
    if (!expr::is_constant(e, 0.0)) return false;
  return true;
}

inline bool is_zero_sigma(const ChangeSpec& c) { return expr::is_constant(c.sigma, 0.0); }
inline bool is_constant_sigma(const ChangeSpec& c) { return expr::is_closed(c.sigma); }
inline bool is_identity_change(const ChangeSpec& c) { return is_zero_sigma(c) && is_zero_one_form(c); }

namespace detail {

inline Expr riemannian_length_expr(const MetricSpec& m) {
  Expr q = expr::constant(0.0);
  for (int i = 0; i < m.dim; ++i)
    for (int j = i; j < m.dim; ++j) {
      Expr term = expr::mul(expr::mul(m.a[static_cast<std::size_t>(i * m.dim + j)], expr::variable(VarKind::y, i)),
                            expr::variable(VarKind::y, j));
      if (i != j) term = expr::mul(expr::constant(2.0), term);
      q = expr::add(q, term);
    }
  return expr::call(Func::sqrt, q);
}

}  // namespace detail

/// Metric spec of L* = e^sigma L + b_i y^i. The identity change returns the
/// base unchanged, and a pure conformal change of a Riemannian base stays
/// Riemannian (a*_ij = e^{2 sigma} a_ij).
inline MetricSpec changed_metric_spec(const MetricSpec& base, const ChangeSpec& change) {
  if (base.dim != change.dim)
    throw ConfigError("change dimension " + std::to_string(change.dim) + " does not match metric dimension " +
                      std::to_string(base.dim));
  if (is_identity_change(change)) return base;

  MetricSpec out = base;
  if (is_zero_one_form(change) && base.mode == MetricMode::riemannian) {
    const Expr factor = expr::exp(expr::mul(expr::constant(2.0), change.sigma));
    for (auto& a : out.a) a = expr::mul(factor, a);
    return out;
  }
  const Expr length = base.mode == MetricMode::direct ? base.length : detail::riemannian_length_expr(base);
  Expr l = expr::mul(expr::exp(change.sigma), length);
  for (int i = 0; i < change.dim; ++i)
    l = expr::add(l, expr::mul(change.b[static_cast<std::size_t>(i)], expr::variable(VarKind::y, i)));
  out.mode = MetricMode::direct;
  out.length = l;
  out.a.clear();
  return out;
}

/// Value and gradient of a function of x.
struct ScalarField {
  double value = 0.0;
  std::vector<double> gradient;
};

inline ScalarField evaluate_scalar_field(const Expr& e, std::span<const double> x) {
  std::vector<int> active(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) active[k] = static_cast<int>(k);
  const auto xs = lift(x, active, 1);
  const Jet f = evaluate(e, Bindings<Jet>{xs, {}, {}, {}});
  ScalarField out{f.value(), std::vector<double>(x.size(), 0.0)};
  if (f.num_vars() == static_cast<int>(x.size()))
    for (std::size_t k = 0; k < x.size(); ++k) out.gradient[k] = f.diff(static_cast<int>(k)).value();
  return out;
}

/// Closed-form starred objects at one point, expressed through the base space.
class ChangedPoint {
 public:
  ChangedPoint(const LocalGeometry& base, const ChangeSpec& change) : base_(base), n_(base.dim()) {
    if (change.dim != n_) throw ConfigError("change dimension does not match the metric");
    const auto& x = base.point().x;
    const auto& y = base.point().y;
    const ScalarField s = evaluate_scalar_field(change.sigma, x);
    sigma_ = s.value;
    sigma_gradient_ = s.gradient;
    es_ = std::exp(sigma_);
    form_ = evaluate_one_form(change, x);

    ginv_ = base.inverse_fundamental();
    y_lower_ = base.lowered_y();
    length_ = base.length();
    beta_ = 0.0;
    for (int i = 0; i < n_; ++i) beta_ += form_.b(i) * y[i];
    length_star_ = es_ * length_ + beta_;
    if (!(length_star_ > 0.0)) throw DomainError("changed metric L* = e^sigma L + beta is not positive at the point");
    tau_ = es_ * length_star_ / length_;

    b_up_ = raise(form_.b);
    b2_ = dot(form_.b, b_up_);
    phi_ = std::exp(-2.0 * sigma_) * (length_ * es_ * b2_ + beta_) / std::pow(length_star_, 3);

    a_ = Tensor(n_, "l");
    for (int i = 0; i < n_; ++i) a_(i) = beta_ * y_lower_(i) / (length_ * length_) - form_.b(i);
    a_up_ = raise(a_);
    a2_ = dot(a_, a_up_);
  }

  double sigma() const noexcept { return sigma_; }
  const std::vector<double>& sigma_gradient() const noexcept { return sigma_gradient_; }
  double beta() const noexcept { return beta_; }
  double length() const noexcept { return length_; }
  double length_star() const noexcept { return length_star_; }
  /// tau = e^sigma L* / L
  double tau() const noexcept { return tau_; }
  double phi() const noexcept { return phi_; }
  double b2() const noexcept { return b2_; }
  double a2() const noexcept { return a2_; }
  const Tensor& b() const noexcept { return form_.b; }
  /// db(i, j) = dx_j b_i
  const Tensor& db() const noexcept { return form_.db; }
  const Tensor& b_up() const noexcept { return b_up_; }
  /// a_i = beta L^-2 y_i - b_i
  const Tensor& a() const noexcept { return a_; }
  const Tensor& a_up() const noexcept { return a_up_; }

  /// l*_i = e^sigma l_i + b_i
  Tensor support_covector() const {
    Tensor l = base_.support_covector();
    for (int i = 0; i < n_; ++i) l(i) = es_ * l(i) + form_.b(i);
    return l;
  }

  /// h*_ij = e^sigma (L*/L) h_ij
  Tensor angular() const {
    Tensor h = base_.angular();
    for (double& v : h.data()) v *= tau_;
    return h;
  }

  /// g*_ij = tau g_ij + b_i b_j + e^sigma L^-1 (b_i y_j + b_j y_i) - beta e^sigma L^-3 y_i y_j
  Tensor fundamental() const {
    const Tensor g = base_.fundamental();
    const auto& b = form_.b;
    const auto& yl = y_lower_;
    Tensor out(n_, "ll");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        out(i, j) = tau_ * g(i, j) + b(i) * b(j) + es_ / length_ * (b(i) * yl(j) + b(j) * yl(i)) -
                    beta_ * es_ / std::pow(length_, 3) * yl(i) * yl(j);
    return out;
  }

  /// g*^ij = tau^-1 g^ij + phi y^i y^j - L^-1 tau^-2 (y^i b^j + y^j b^i)
  Tensor inverse_closed_form() const {
    const auto& y = base_.point().y;
    Tensor out(n_, "uu");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        out(i, j) = ginv_(i, j) / tau_ + phi_ * y[i] * y[j] -
                    (y[i] * b_up_(j) + y[j] * b_up_(i)) / (length_ * tau_ * tau_);
    return out;
  }

  /// C*_ijk = tau [C_ijk - (h_ij a_k + h_jk a_i + h_ki a_j) / (2 L*)]
  Tensor cartan() const {
    const Tensor c = base_.cartan();
    const Tensor h = base_.angular();
    Tensor out(n_, "lll");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          out(i, j, k) = tau_ * (c(i, j, k) - (h(i, j) * a_(k) + h(j, k) * a_(i) + h(k, i) * a_(j)) / (2.0 * length_star_));
    return out;
  }

  /// C*^j_ik, stored as out(j, i, k):
  ///   C^j_ik - (h^j_i a_k + h^j_k a_i + h_ik a^j) / (2 L*) - (tau L)^-1 C_ikr y^j b^r
  ///   - tau^-1 / (2 L L*) (2 a_i a_k + a^2 h_ik) y^j
  Tensor cartan_mixed() const {
    const Tensor c = base_.cartan();
    const Tensor h = base_.angular();
    const auto& y = base_.point().y;
    Tensor h_mixed(n_, "ul");  // h^j_i
    Tensor c_mixed(n_, "ull");  // C^j_ik
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int r = 0; r < n_; ++r) s += ginv_(j, r) * h(r, i);
        h_mixed(j, i) = s;
        for (int k = 0; k < n_; ++k) {
          double t = 0.0;
          for (int r = 0; r < n_; ++r) t += ginv_(j, r) * c(r, i, k);
          c_mixed(j, i, k) = t;
        }
      }
    Tensor out(n_, "ull");
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i)
        for (int k = 0; k < n_; ++k) {
          double cb = 0.0;
          for (int r = 0; r < n_; ++r) cb += c(i, k, r) * b_up_(r);
          out(j, i, k) = c_mixed(j, i, k) -
                         (h_mixed(j, i) * a_(k) + h_mixed(j, k) * a_(i) + h(i, k) * a_up_(j)) / (2.0 * length_star_) -
                         cb * y[j] / (tau_ * length_) -
                         (2.0 * a_(i) * a_(k) + a2_ * h(i, k)) * y[j] / (tau_ * 2.0 * length_ * length_star_);
        }
    return out;
  }

 private:
  Tensor raise(const Tensor& v) const {
    Tensor out(n_, "u");
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += ginv_(i, j) * v(j);
      out(i) = s;
    }
    return out;
  }

  double dot(const Tensor& a, const Tensor& b) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += a(i) * b(i);
    return s;
  }

  const LocalGeometry& base_;
  int n_;
  double sigma_ = 0.0;
  std::vector<double> sigma_gradient_;
  double es_ = 1.0;
  OneForm form_;
  Tensor ginv_;
  Tensor y_lower_;
  double length_ = 0.0;
  double beta_ = 0.0;
  double length_star_ = 0.0;
  double tau_ = 1.0;
  Tensor b_up_;
  double b2_ = 0.0;
  double phi_ = 0.0;
  Tensor a_;
  Tensor a_up_;
  double a2_ = 0.0;
};

/// max_ij |g_ik inv^kj - delta_i^j|
inline double inverse_residual(const Tensor& g, const Tensor& inv) {
  const int n = g.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += g(i, k) * inv(k, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

/// C*^j_ik = g*^jr C*_rik from oracle tensors, stored as out(j, i, k).
inline Tensor raise_cartan(const Tensor& ginv, const Tensor& c) {
  const int n = c.dim();
  Tensor out(n, "ull");
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int r = 0; r < n; ++r) s += ginv(j, r) * c(r, i, k);
        out(j, i, k) = s;
      }
  return out;
}

/// D^i = G*^i - G^i
inline Tensor difference_vector(const LocalGeometry& base, const LocalGeometry& changed) {
  Tensor d = changed.spray();
  const Tensor g = base.spray();
  for (std::size_t k = 0; k < d.size(); ++k) d.data()[k] -= g.data()[k];
  return d;
}

/// D^i_j = dy_j D^i = N*^i_j - N^i_j
inline Tensor difference_connection(const LocalGeometry& base, const LocalGeometry& changed) {
  Tensor d = changed.nonlinear_connection();
  const Tensor nl = base.nonlinear_connection();
  for (std::size_t k = 0; k < d.size(); ++k) d.data()[k] -= nl.data()[k];
  return d;
}

/// A_i = e^sigma L dx_i sigma + dx_i beta - db_i/dt, with dx_i beta = (dx_i b_j) y^j
/// and db_i/dt = (dx_j b_i) y^j along the canonical lift.
inline Tensor projectivity_defect(const ChangeSpec& change, const SamplePoint& p, double length) {
  const int n = change.dim;
  const ScalarField s = evaluate_scalar_field(change.sigma, p.x);
  const OneForm form = evaluate_one_form(change, p.x);
  Tensor a(n, "l");
  for (int i = 0; i < n; ++i) {
    double v = std::exp(s.value) * length * s.gradient[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) v += (form.db(j, i) - form.db(i, j)) * p.y[static_cast<std::size_t>(j)];
    a(i) = v;
  }
  return a;
}

inline Tensor projectivity_defect(const MetricSpec& base, const ChangeSpec& change, const SamplePoint& p) {
  return projectivity_defect(change, p, metric_length(base, p));
}

/// Largest component of D - (D.y / |y|^2) y, the part of D not along y.
inline double collinearity_residual(const Tensor& d, std::span<const double> y) {
  double dy = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    dy += d(static_cast<int>(i)) * y[i];
    yy += y[i] * y[i];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    worst = std::max(worst, std::abs(d(static_cast<int>(i)) - dy / yy * y[i]));
  return worst;
}

}  // namespace finsler
