#pragma once

/**
 * @file finsler_core.hpp
 * @brief Intrinsic tensors of a Finsler space at one point.
 *
 * Everything is derived from the energy F = L^2/2 expanded as a jet in the
 * 2n variables (x^1..x^n, y^1..y^n). Taking partial derivatives of a jet is
 * exact, so each layer (g, then G^i, then N^i_j, ...) is itself a jet of
 * lower order and can be differentiated again:
 *
 *   order K      F
 *   order K-2    g_ij, g^ij, G^i
 *   order K-3    N^i_j
 *   order K-4    G^i_jk, R^i_k
 *   order K-6    Douglas D^h_ijk, Weyl W^h_ij
 *
 * Cartan connection, Berwald connection, Douglas and Weyl tensors follow the
 * standard conventions:
 *   F^i_jk  = g^ir (d_j g_rk + d_k g_rj - d_r g_jk) / 2,  d_j = dx_j - N^m_j dy_m
 *   G^i_jk  = dy_j dy_k G^i
 *   D^h_ijk = dy_i dy_j dy_k (G^h - (dy_m G^m) y^h / (n+1))
 *   R^i_k   = 2 dx_k G^i - y^j dx_j dy_k G^i + 2 G^j G^i_jk - N^i_j N^j_k
 *   W^i_k   = A^i_k - (dy_m A^m_k) y^i / (n+1),  A^i_k = R^i_k - Ric/(n-1) delta^i_k
 *   W^h_ij  = (dy_j W^h_i - dy_i W^h_j) / 3
 */

#include <finsler/error.hpp>
#include <finsler/expr.hpp>
#include <finsler/jet.hpp>
#include <finsler/spec_lang.hpp>
#include <finsler/tensor.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace finsler {

/// Jet order that supports every tensor, including Douglas and Weyl.
inline constexpr int kFullOrder = 6;

/// Base point x and supporting element y (y != 0).
struct SamplePoint {
  std::vector<double> x;
  std::vector<double> y;
};

/// L(x, y) on doubles or jets.
template <class T>
T metric_length(const MetricSpec& m, std::span<const T> x, std::span<const T> y) {
  Bindings<T> b{x, y, {}, {}};
  if (m.mode == MetricMode::direct) return evaluate(m.length, b);
  T q = b.constant(0.0);
  for (int i = 0; i < m.dim; ++i)
    for (int j = 0; j < m.dim; ++j) q = q + evaluate(m.a[static_cast<std::size_t>(i * m.dim + j)], b) * y[i] * y[j];
  if constexpr (std::is_same_v<T, Jet>) return sqrt(q);
  else return std::sqrt(q);
}

/// Energy L^2 / 2. In Riemannian mode this is a_ij y^i y^j / 2 without a
/// square root, so y-derivatives of a_ij vanish exactly.
template <class T>
T metric_energy(const MetricSpec& m, std::span<const T> x, std::span<const T> y) {
  Bindings<T> b{x, y, {}, {}};
  if (m.mode == MetricMode::direct) {
    T l = evaluate(m.length, b);
    return l * l * 0.5;
  }
  T q = b.constant(0.0);
  for (int i = 0; i < m.dim; ++i)
    for (int j = 0; j < m.dim; ++j) q = q + evaluate(m.a[static_cast<std::size_t>(i * m.dim + j)], b) * y[i] * y[j];
  return q * 0.5;
}

inline double metric_length(const MetricSpec& m, const SamplePoint& p) {
  return metric_length<double>(m, p.x, p.y);
}

namespace detail {

inline Eigen::MatrixXd to_matrix(const Tensor& t) {
  Eigen::MatrixXd m(t.dim(), t.dim());
  for (int i = 0; i < t.dim(); ++i)
    for (int j = 0; j < t.dim(); ++j) m(i, j) = t(i, j);
  return m;
}

inline double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : INFINITY;
}

// Gauss-Jordan elimination on a matrix of jets, pivoting on values.
inline std::vector<Jet> invert_jet_matrix(std::vector<Jet> a, int n) {
  std::vector<Jet> inv(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv[static_cast<std::size_t>(i * n + j)] = a[0].constant_like(i == j ? 1.0 : 0.0);
  auto at = [n](std::vector<Jet>& m, int i, int j) -> Jet& { return m[static_cast<std::size_t>(i * n + j)]; };
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(at(a, r, col).value()) > std::abs(at(a, pivot, col).value())) pivot = r;
    if (at(a, pivot, col).value() == 0.0) throw SingularityError("singular fundamental tensor", INFINITY);
    if (pivot != col)
      for (int j = 0; j < n; ++j) {
        std::swap(at(a, pivot, j), at(a, col, j));
        std::swap(at(inv, pivot, j), at(inv, col, j));
      }
    const Jet recip = reciprocal(at(a, col, col));
    for (int j = 0; j < n; ++j) {
      at(a, col, j) = at(a, col, j) * recip;
      at(inv, col, j) = at(inv, col, j) * recip;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet f = at(a, r, col);
      if (f.value() == 0.0 && f.is_constant()) continue;
      for (int j = 0; j < n; ++j) {
        at(a, r, j) = at(a, r, j) - f * at(a, col, j);
        at(inv, r, j) = at(inv, r, j) - f * at(inv, col, j);
      }
    }
  }
  return inv;
}

}  // namespace detail

/// Numeric inverse g^ij with a conditioning guard.
inline Tensor inverse_metric(const Tensor& g, double max_condition = 1e12) {
  const Eigen::MatrixXd m = detail::to_matrix(g);
  const double cond = detail::condition_number(m);
  if (!std::isfinite(cond) || cond > max_condition)
    throw SingularityError("fundamental tensor is singular (condition " + std::to_string(cond) + ")", cond);
  const Eigen::MatrixXd inv = m.fullPivLu().inverse();
  Tensor out(g.dim(), "uu");
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j) out(i, j) = 0.5 * (inv(i, j) + inv(j, i));
  return out;
}

/// Every intrinsic tensor of the metric at one sample point. Construction
/// performs all jet work for the requested order; accessors only copy values.
/// Accessors that need more derivatives than the order provides throw
/// OrderBudgetError.
class LocalGeometry {
 public:
  LocalGeometry(const MetricSpec& metric, SamplePoint p, int order = kFullOrder)
      : n_(metric.dim), order_(order), point_(std::move(p)) {
    if (static_cast<int>(point_.x.size()) != n_ || static_cast<int>(point_.y.size()) != n_)
      throw ConfigError("sample point dimension does not match the metric");
    if (order_ < 2) throw OrderBudgetError("local geometry needs jet order >= 2");
    build(metric);
  }

  int dim() const noexcept { return n_; }
  int order() const noexcept { return order_; }
  const SamplePoint& point() const noexcept { return point_; }

  double length() const noexcept { return length_; }
  double energy() const noexcept { return energy_.value(); }

  /// l_i = dy_i L
  Tensor support_covector() const {
    Tensor t(n_, "l");
    for (int i = 0; i < n_; ++i) t(i) = fy_[i].value() / length_;
    return t;
  }

  /// y_i = g_ij y^j (= dy_i F)
  Tensor lowered_y() const {
    Tensor t(n_, "l");
    for (int i = 0; i < n_; ++i) t(i) = fy_[i].value();
    return t;
  }

  Tensor fundamental() const { return values(g_, "ll"); }
  Tensor inverse_fundamental() const { return ginv_; }

  /// h_ij = g_ij - y_i y_j / L^2
  Tensor angular() const {
    Tensor h = fundamental();
    const double l2 = length_ * length_;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) h(i, j) -= fy_[i].value() * fy_[j].value() / l2;
    return h;
  }

  /// C_ijk = dy_k g_ij / 2
  Tensor cartan() const {
    require(3, "Cartan tensor");
    Tensor t(n_, "lll");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) t(i, j, k) = 0.5 * dy(g_[ij(i, j)], k).value();
    return t;
  }

  Tensor spray() const { return values(spray_, "u"); }

  /// 2G^i = gamma^i_jk y^j y^k with the Christoffel-type symbols of g_ij(x, y).
  /// An independent route to spray(), used as a cross-check.
  Tensor spray_christoffel() const {
    require(3, "Christoffel spray");
    Tensor gdx(n_, "lll");  // gdx(a, b, c) = dx_c g_ab
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int c = 0; c < n_; ++c) gdx(a, b, c) = dx(g_[ij(a, b)], c).value();
    Tensor out(n_, "u");
    const auto& y = point_.y;
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int r = 0; r < n_; ++r)
        for (int j = 0; j < n_; ++j)
          for (int k = 0; k < n_; ++k)
            s += ginv_(i, r) * (gdx(j, r, k) + gdx(k, r, j) - gdx(j, k, r)) * 0.5 * y[j] * y[k];
      out(i) = 0.5 * s;
    }
    return out;
  }

  /// N^i_j = dy_j G^i
  Tensor nonlinear_connection() const {
    require(3, "nonlinear connection");
    return values(nonlinear_, "ul");
  }

  /// G^i_jk = dy_k N^i_j
  Tensor berwald() const {
    require(4, "Berwald connection");
    return values(berwald_, "ull");
  }

  /// F^i_jk of the Cartan connection.
  Tensor cartan_connection() const {
    require(3, "Cartan connection");
    const Tensor c = cartan();
    const Tensor nl = nonlinear_connection();
    // delta_c g_ab = dx_c g_ab - N^m_c dy_m g_ab
    Tensor dg(n_, "lll");
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int cc = 0; cc < n_; ++cc) {
          double s = dx(g_[ij(a, b)], cc).value();
          for (int m = 0; m < n_; ++m) s -= nl(m, cc) * 2.0 * c(a, b, m);
          dg(a, b, cc) = s;
        }
    Tensor out(n_, "ull");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) {
          double s = 0.0;
          for (int r = 0; r < n_; ++r) s += ginv_(i, r) * (dg(r, k, j) + dg(r, j, k) - dg(j, k, r));
          out(i, j, k) = 0.5 * s;
        }
    return out;
  }

  Tensor douglas() const {
    require(6, "Douglas tensor");
    return values(douglas_, "ulll");
  }

  /// Riemann curvature R^i_k of the spray.
  Tensor riemann_curvature() const {
    require(4, "Riemann curvature");
    return values(riemann_, "ul");
  }

  /// Weyl projective curvature W^i_k.
  Tensor weyl_curvature() const {
    require(5, "Weyl curvature");
    return values(weyl_curvature_, "ul");
  }

  /// Weyl torsion W^h_ij (antisymmetric in ij).
  Tensor weyl() const {
    require(6, "Weyl tensor");
    return values(weyl_, "ull");
  }

  /// G^i as jets of order order()-2 over (x, y); variables 0..n-1 are x,
  /// n..2n-1 are y.
  const std::vector<Jet>& spray_jets() const noexcept { return spray_; }

  /// G^i_jk as jets of order order()-4, flattened as (i * n + j) * n + k.
  const std::vector<Jet>& berwald_jets() const {
    require(4, "Berwald connection");
    return berwald_;
  }

  Jet dx(const Jet& f, int i) const { return f.diff(i); }
  Jet dy(const Jet& f, int i) const { return f.diff(n_ + i); }

 private:
  std::size_t ij(int i, int j) const { return static_cast<std::size_t>(i * n_ + j); }
  std::size_t ijk(int i, int j, int k) const { return static_cast<std::size_t>((i * n_ + j) * n_ + k); }

  void require(int needed, const char* what) const {
    if (order_ < needed)
      throw OrderBudgetError(std::string(what) + " needs jet order >= " + std::to_string(needed) +
                             ", context built with " + std::to_string(order_));
  }

  Tensor values(const std::vector<Jet>& jets, const char* variance) const {
    Tensor t(n_, variance);
    for (std::size_t k = 0; k < jets.size(); ++k) t.data()[k] = jets[k].value();
    return t;
  }

  void build(const MetricSpec& metric) {
    const int n = n_;
    std::vector<double> seed(point_.x);
    seed.insert(seed.end(), point_.y.begin(), point_.y.end());
    std::vector<int> active(static_cast<std::size_t>(2 * n));
    for (int k = 0; k < 2 * n; ++k) active[static_cast<std::size_t>(k)] = k;
    const auto vars = lift(seed, active, order_);
    const std::span<const Jet> xs(vars.data(), static_cast<std::size_t>(n));
    const std::span<const Jet> ys(vars.data() + n, static_cast<std::size_t>(n));

    energy_ = metric_energy<Jet>(metric, xs, ys);
    const double e = energy_.value();
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("L must be positive and finite at the sample point");
    length_ = std::sqrt(2.0 * e);

    fy_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fy_[i] = dy(energy_, i);
    g_.resize(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g_[ij(i, j)] = dy(fy_[i], j);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) g_[ij(i, j)] = g_[ij(j, i)];
    ginv_ = inverse_metric(values(g_, "ll"));

    // G^i = g^il (y^k dx_k dy_l F - dx_l F) / 2
    const auto ginv = detail::invert_jet_matrix(g_, n);
    std::vector<Jet> rhs(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
      Jet s = -dx(energy_, l);
      for (int k = 0; k < n; ++k) s = s + dx(fy_[l], k) * ys[k];
      rhs[l] = s;
    }
    spray_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      Jet s;
      for (int l = 0; l < n; ++l) s = s + ginv[ij(i, l)] * rhs[l];
      spray_[i] = s * 0.5;
    }
    if (order_ < 3) return;

    nonlinear_.resize(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) nonlinear_[ij(i, j)] = dy(spray_[i], j);
    if (order_ < 4) return;

    berwald_.resize(static_cast<std::size_t>(n * n * n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) berwald_[ijk(i, j, k)] = dy(nonlinear_[ij(i, j)], k);

    riemann_.resize(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        Jet s = dx(spray_[i], k) * 2.0;
        for (int j = 0; j < n; ++j) {
          s = s - ys[j] * dx(nonlinear_[ij(i, k)], j);
          s = s + spray_[j] * berwald_[ijk(i, j, k)] * 2.0;
          s = s - nonlinear_[ij(i, j)] * nonlinear_[ij(j, k)];
        }
        riemann_[ij(i, k)] = s;
      }
    if (order_ < 5) return;

    Jet ricci;
    for (int m = 0; m < n; ++m) ricci = ricci + riemann_[ij(m, m)];
    const Jet scalar = ricci / static_cast<double>(n - 1);
    std::vector<Jet> a(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) a[ij(i, k)] = i == k ? riemann_[ij(i, k)] - scalar : riemann_[ij(i, k)];
    weyl_curvature_.resize(static_cast<std::size_t>(n * n));
    for (int k = 0; k < n; ++k) {
      Jet trace;
      for (int m = 0; m < n; ++m) trace = trace + dy(a[ij(m, k)], m);
      for (int i = 0; i < n; ++i) weyl_curvature_[ij(i, k)] = a[ij(i, k)] - trace * ys[i] / static_cast<double>(n + 1);
    }
    if (order_ < 6) return;

    weyl_.resize(static_cast<std::size_t>(n * n * n));
    for (int h = 0; h < n; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          weyl_[ijk(h, i, j)] = (dy(weyl_curvature_[ij(h, i)], j) - dy(weyl_curvature_[ij(h, j)], i)) / 3.0;

    Jet trace;
    for (int m = 0; m < n; ++m) trace = trace + nonlinear_[ij(m, m)];
    std::vector<Jet> projected(static_cast<std::size_t>(n));
    for (int h = 0; h < n; ++h) projected[h] = spray_[h] - trace * ys[h] / static_cast<double>(n + 1);
    douglas_.resize(static_cast<std::size_t>(n * n * n * n));
    for (int h = 0; h < n; ++h)
      for (int i = 0; i < n; ++i) {
        const Jet di = dy(projected[h], i);
        for (int j = 0; j < n; ++j) {
          const Jet dij = dy(di, j);
          for (int k = 0; k < n; ++k) douglas_[ijk(h, i, j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = dy(dij, k);
        }
      }
  }

  int n_;
  int order_;
  SamplePoint point_;
  double length_ = 0.0;
  Jet energy_;
  std::vector<Jet> fy_;
  std::vector<Jet> g_;
  Tensor ginv_;
  std::vector<Jet> spray_;
  std::vector<Jet> nonlinear_;
  std::vector<Jet> berwald_;
  std::vector<Jet> riemann_;
  std::vector<Jet> weyl_curvature_;
  std::vector<Jet> weyl_;
  std::vector<Jet> douglas_;
};

// ---------------------------------------------------------------------------
// Single-shot entry points. Each builds a context with the smallest order
// that supports the requested object.

inline Tensor fundamental_tensor(const MetricSpec& m, const SamplePoint& p) {
  return LocalGeometry(m, p, 2).fundamental();
}

struct SupportAndAngular {
  Tensor l;  // l_i
  Tensor y;  // y_i
  Tensor h;  // h_ij
};

inline SupportAndAngular supporting_covector_and_angular(const MetricSpec& m, const SamplePoint& p) {
  LocalGeometry geo(m, p, 2);
  return {geo.support_covector(), geo.lowered_y(), geo.angular()};
}

inline Tensor cartan_tensor(const MetricSpec& m, const SamplePoint& p) { return LocalGeometry(m, p, 3).cartan(); }
inline Tensor spray(const MetricSpec& m, const SamplePoint& p) { return LocalGeometry(m, p, 2).spray(); }
inline Tensor nonlinear_connection(const MetricSpec& m, const SamplePoint& p) {
  return LocalGeometry(m, p, 3).nonlinear_connection();
}
inline Tensor cartan_connection_h(const MetricSpec& m, const SamplePoint& p) {
  return LocalGeometry(m, p, 3).cartan_connection();
}
inline Tensor berwald_connection(const MetricSpec& m, const SamplePoint& p) {
  return LocalGeometry(m, p, 4).berwald();
}
inline Tensor douglas_tensor(const MetricSpec& m, const SamplePoint& p) { return LocalGeometry(m, p, 6).douglas(); }
inline Tensor weyl_tensor(const MetricSpec& m, const SamplePoint& p) { return LocalGeometry(m, p, 6).weyl(); }

/// b_i(x) and its first partials dx_j b_i, from a change spec.
struct OneForm {
  Tensor b;    // b_i
  Tensor db;   // db(i, j) = dx_j b_i
};

inline OneForm evaluate_one_form(const ChangeSpec& c, std::span<const double> x) {
  const int n = c.dim;
  std::vector<int> active(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) active[static_cast<std::size_t>(k)] = k;
  const auto xs = lift(x, active, 1);
  OneForm f{Tensor(n, "l"), Tensor(n, "ll")};
  const Bindings<Jet> bind{xs, {}, {}, {}};
  for (int i = 0; i < n; ++i) {
    const Jet bi = evaluate(c.b[static_cast<std::size_t>(i)], bind);
    f.b(i) = bi.value();
    for (int j = 0; j < n; ++j) f.db(i, j) = bi.diff(j).value();
  }
  return f;
}

/// E_ij, F_ij (symmetric / antisymmetric parts of b_i|j) and F^i_j.
struct EFTensors {
  Tensor e;        // E_ij
  Tensor f;        // F_ij
  Tensor f_mixed;  // F^i_j = g^ir F_rj
};

/// b_i|j = dx_j b_i - b_r F^r_ij  (h-covariant derivative in the Cartan connection)
inline EFTensors ef_tensors(const LocalGeometry& geo, const ChangeSpec& c) {
  const int n = geo.dim();
  const OneForm form = evaluate_one_form(c, geo.point().x);
  const Tensor conn = geo.cartan_connection();
  Tensor cov(n, "ll");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = form.db(i, j);
      for (int r = 0; r < n; ++r) s -= form.b(r) * conn(r, i, j);
      cov(i, j) = s;
    }
  EFTensors out{Tensor(n, "ll"), Tensor(n, "ll"), Tensor(n, "ul")};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.e(i, j) = 0.5 * (cov(i, j) + cov(j, i));
      out.f(i, j) = 0.5 * (cov(i, j) - cov(j, i));
    }
  const Tensor ginv = geo.inverse_fundamental();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int r = 0; r < n; ++r) s += ginv(i, r) * out.f(r, j);
      out.f_mixed(i, j) = s;
    }
  return out;
}

inline EFTensors ef_tensors(const MetricSpec& m, const ChangeSpec& c, const SamplePoint& p) {
  return ef_tensors(LocalGeometry(m, p, 3), c);
}

}  // namespace finsler
