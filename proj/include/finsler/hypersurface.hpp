#pragma once

/**
 * @file hypersurface.hpp
 * @brief Induced frames, unit normals and normal curvature of a hypersurface
 * x(u) in the base space and in the Randers-conformally changed space.
 *
 * Index conventions: B(i, a) = dx^i/du^a, B2[i](a, b) = d^2x^i/du^a du^b,
 * normal = N^i, normal_lower = N_i, inverse(a, i) = B^a_i.
 */

#include <finsler/error.hpp>
#include <finsler/expr.hpp>
#include <finsler/finsler_core.hpp>
#include <finsler/jet.hpp>
#include <finsler/randers_change.hpp>
#include <finsler/spec_lang.hpp>
#include <finsler/tensor.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

/// Gaussian coordinates u and supporting element v on the hypersurface.
struct HyperPoint {
  std::vector<double> u;
  std::vector<double> v;
};

/// x(u), y = B v and the first two derivatives of the embedding.
struct Embedding {
  std::vector<double> x;
  std::vector<double> y;
  Eigen::MatrixXd B;
  std::vector<Eigen::MatrixXd> B2;

  SamplePoint point() const { return {x, y}; }
};

struct Frame {
  Eigen::MatrixXd B;
  std::vector<Eigen::MatrixXd> B2;
  Eigen::VectorXd normal;
  Eigen::VectorXd normal_lower;
  Eigen::MatrixXd inverse;
};

struct FrameResiduals {
  double orthogonality = 0.0;  // g_ij B^i_a N^j
  double unit = 0.0;           // g_ij N^i N^j - 1
  double duality = 0.0;        // B^i_a B^b_i - delta
  double tangency = 0.0;       // B^i_a N_i
  double normal_dual = 0.0;    // N^i N_i - 1
  double completeness = 0.0;   // B^i_a B^a_j + N^i N_j - delta

  double max() const {
    return std::max({orthogonality, unit, duality, tangency, normal_dual, completeness});
  }
};

inline void check_hypersurface(const MetricSpec& m, const HypersurfaceSpec& hs, const HyperPoint& q) {
  if (hs.dim != m.dim)
    throw ConfigError("hypersurface dimension " + std::to_string(hs.dim) + " does not match metric dimension " +
                      std::to_string(m.dim));
  const std::size_t k = static_cast<std::size_t>(hs.dim - 1);
  if (q.u.size() != k || q.v.size() != k)
    throw ConfigError("hyper point needs " + std::to_string(k) + " coordinates u and v");
}

inline Embedding embed(const HypersurfaceSpec& hs, const HyperPoint& q) {
  const int n = hs.dim, k = n - 1;
  std::vector<Jet> u;
  for (int a = 0; a < k; ++a) u.push_back(Jet::variable(q.u[static_cast<std::size_t>(a)], a, k, 2));
  Bindings<Jet> bind;
  bind.u = u;

  Embedding e;
  e.x.resize(static_cast<std::size_t>(n));
  e.y.assign(static_cast<std::size_t>(n), 0.0);
  e.B.resize(n, k);
  e.B2.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(k, k));
  for (int i = 0; i < n; ++i) {
    const Jet xi = evaluate(hs.embedding[static_cast<std::size_t>(i)], bind);
    e.x[static_cast<std::size_t>(i)] = xi.value();
    for (int a = 0; a < k; ++a) {
      const Jet d = xi.diff(a);
      e.B(i, a) = d.value();
      for (int b = 0; b < k; ++b) e.B2[static_cast<std::size_t>(i)](a, b) = d.diff(b).value();
      e.y[static_cast<std::size_t>(i)] += e.B(i, a) * q.v[static_cast<std::size_t>(a)];
    }
  }
  if (k > 0) {
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(e.B).singularValues();
    if (!(s(k - 1) > 1e-10 * s(0)))
      throw DomainError("rank deficient projection factors B^i_a at the hyper point");
  }
  return e;
}

namespace detail {

/// Reference covector fixing the sign of N: grad of the implicit function,
/// then the constant orient vector, else empty.
inline std::optional<Eigen::VectorXd> orientation_reference(const HypersurfaceSpec& hs, const std::vector<double>& x) {
  const int n = hs.dim;
  if (hs.implicit) {
    std::vector<Jet> xj;
    for (int i = 0; i < n; ++i) xj.push_back(Jet::variable(x[static_cast<std::size_t>(i)], i, n, 1));
    Bindings<Jet> bind;
    bind.x = xj;
    const Jet f = evaluate(*hs.implicit, bind);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = f.diff(i).value();
    return r;
  }
  if (hs.orient) return Eigen::Map<const Eigen::VectorXd>(hs.orient->data(), n);
  return std::nullopt;
}

inline void orient(Eigen::VectorXd& normal, const std::optional<Eigen::VectorXd>& ref) {
  if (ref) {
    const double s = ref->dot(normal);
    if (s < 0.0) normal = -normal;
    if (s != 0.0) return;
  }
  for (int i = 0; i < normal.size(); ++i)
    if (std::abs(normal(i)) > 1e-12) {
      if (normal(i) < 0.0) normal = -normal;
      return;
    }
}

}  // namespace detail

/// Frame in the metric g at the embedded point.
inline Frame frame(const HypersurfaceSpec& hs, const Embedding& e, const Tensor& g) {
  const int n = hs.dim, k = n - 1;
  const Eigen::MatrixXd gm = detail::to_matrix(g);
  const Eigen::MatrixXd m = e.B.transpose() * gm;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (k > 0 && !(s(k - 1) > 1e-10 * s(0)))
    throw DomainError("rank deficient projection factors B^i_a at the hyper point");

  Frame f;
  f.B = e.B;
  f.B2 = e.B2;
  f.normal = svd.matrixV().col(n - 1);
  const double norm2 = f.normal.dot(gm * f.normal);
  if (!(norm2 > 0.0)) throw DomainError("cannot normalize N: metric not positive definite at the hyper point");
  f.normal /= std::sqrt(norm2);
  detail::orient(f.normal, detail::orientation_reference(hs, e.x));

  f.normal_lower = gm * f.normal;
  const Eigen::MatrixXd induced = e.B.transpose() * gm * e.B;
  f.inverse = induced.ldlt().solve(e.B.transpose() * gm);
  return f;
}

inline FrameResiduals frame_residuals(const Frame& f, const Tensor& g) {
  const Eigen::MatrixXd gm = detail::to_matrix(g);
  const int n = static_cast<int>(f.normal.size()), k = n - 1;
  FrameResiduals r;
  r.orthogonality = (f.B.transpose() * gm * f.normal).cwiseAbs().maxCoeff();
  r.unit = std::abs(f.normal.dot(gm * f.normal) - 1.0);
  r.duality = (f.inverse * f.B - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  r.tangency = (f.B.transpose() * f.normal_lower).cwiseAbs().maxCoeff();
  r.normal_dual = std::abs(f.normal.dot(f.normal_lower) - 1.0);
  r.completeness =
      (f.B * f.inverse + f.normal * f.normal_lower.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  return r;
}

/// H_a = N_i (v^b B^i_ba + N^i_j B^j_a)
inline Eigen::VectorXd normal_curvature(const Frame& f, const Tensor& connection, std::span<const double> v) {
  const int n = static_cast<int>(f.normal.size()), k = n - 1;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < k; ++a)
    for (int i = 0; i < n; ++i) {
      double t = 0.0;
      for (int b = 0; b < k; ++b) t += v[static_cast<std::size_t>(b)] * f.B2[static_cast<std::size_t>(i)](b, a);
      for (int j = 0; j < n; ++j) t += connection(i, j) * f.B(j, a);
      h(a) += f.normal_lower(i) * t;
    }
  return h;
}

inline Frame frame(const MetricSpec& m, const HypersurfaceSpec& hs, const HyperPoint& q) {
  check_hypersurface(m, hs, q);
  const Embedding e = embed(hs, q);
  return frame(hs, e, fundamental_tensor(m, e.point()));
}

inline Eigen::VectorXd normal_curvature(const MetricSpec& m, const HypersurfaceSpec& hs, const HyperPoint& q) {
  check_hypersurface(m, hs, q);
  const Embedding e = embed(hs, q);
  const LocalGeometry geo(m, e.point(), 3);
  return normal_curvature(frame(hs, e, geo.fundamental()), geo.nonlinear_connection(), q.v);
}

/// Unit normal of the changed space, by the oracle and by the closed form.
struct ChangedFrame {
  Frame base;
  Frame oracle;                    // solved in g*
  Eigen::VectorXd normal_closed;   // N / sqrt(tau)
  Eigen::VectorXd lower_closed;    // sqrt(tau) N_i
  Eigen::VectorXd lower_contracted;  // g*_ij N*^j with the oracle N*
  double tau = 1.0;
  double bN = 0.0;
  double normal_residual = 0.0;  // |N*_oracle - N / sqrt(tau)|
  double lower_residual = 0.0;   // |g*_ij N*^j - sqrt(tau) N_i|
  double unit_residual = 0.0;    // |g*_ij N*^i N*^j - 1|
  double norm_identity = 0.0;    // |g*_ij N^i N^j - (tau + bN^2)|
};

namespace detail {

inline double max_rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a(i), b(i)));
  return worst;
}

}  // namespace detail

inline ChangedFrame changed_frame(const LocalGeometry& base_geo, const LocalGeometry& star_geo, const ChangeSpec& c,
                                  const HypersurfaceSpec& hs, const Embedding& e) {
  ChangedFrame out;
  out.base = frame(hs, e, base_geo.fundamental());
  const Tensor gs = star_geo.fundamental();
  out.oracle = frame(hs, e, gs);

  const ChangedPoint cp(base_geo, c);
  out.tau = cp.tau();
  const Eigen::Map<const Eigen::VectorXd> b(cp.b().data().data(), hs.dim);
  out.bN = b.dot(out.base.normal);

  const double rt = std::sqrt(out.tau);
  out.normal_closed = out.base.normal / rt;
  out.lower_closed = out.base.normal_lower * rt;
  const Eigen::MatrixXd gsm = detail::to_matrix(gs);
  out.lower_contracted = gsm * out.oracle.normal;

  out.normal_residual = detail::max_rel_diff(out.oracle.normal, out.normal_closed);
  out.lower_residual = detail::max_rel_diff(out.lower_contracted, out.lower_closed);
  out.unit_residual = std::abs(out.oracle.normal.dot(gsm * out.oracle.normal) - 1.0);
  out.norm_identity = relative_error(out.base.normal.dot(gsm * out.base.normal), out.tau + out.bN * out.bN);
  return out;
}

inline ChangedFrame changed_frame(const MetricSpec& m, const ChangeSpec& c, const HypersurfaceSpec& hs,
                                  const HyperPoint& q) {
  check_hypersurface(m, hs, q);
  const Embedding e = embed(hs, q);
  const LocalGeometry base(m, e.point(), 2);
  const LocalGeometry star(changed_metric_spec(m, c), e.point(), 2);
  return changed_frame(base, star, c, hs, e);
}

struct ChangedCurvature {
  Eigen::VectorXd H;
  Eigen::VectorXd H_star;
  double tau = 1.0;
  double ratio_residual = 0.0;       // max_a |H*_a - sqrt(tau) H_a| (relative)
  double connection_residual = 0.0;  // max_a |N_i D^i_j B^j_a|
  double defect = 0.0;               // max_i |A_i| at the hyper point
};

/// Normal curvature in both spaces. The ratio law only holds for projective
/// changes, so a pointwise defect above defect_tol is a precondition failure.
inline ChangedCurvature changed_normal_curvature(const LocalGeometry& base_geo, const LocalGeometry& star_geo,
                                                 const ChangeSpec& c, const HypersurfaceSpec& hs, const Embedding& e,
                                                 std::span<const double> v, double defect_tol = 1e-12) {
  ChangedCurvature out;
  out.defect = max_abs(projectivity_defect(c, e.point(), base_geo.length()));
  if (out.defect > defect_tol)
    throw PreconditionError("change is not projective at the hyper point (max |A_i| = " + std::to_string(out.defect) +
                            ")");
  const ChangedFrame cf = changed_frame(base_geo, star_geo, c, hs, e);
  out.tau = cf.tau;
  out.H = normal_curvature(cf.base, base_geo.nonlinear_connection(), v);
  out.H_star = normal_curvature(cf.oracle, star_geo.nonlinear_connection(), v);
  out.ratio_residual = detail::max_rel_diff(out.H_star, out.H * std::sqrt(out.tau));

  const Tensor d = difference_connection(base_geo, star_geo);
  const int n = hs.dim, k = n - 1;
  for (int a = 0; a < k; ++a) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += cf.base.normal_lower(i) * d(i, j) * cf.base.B(j, a);
    out.connection_residual = std::max(out.connection_residual, std::abs(s));
  }
  return out;
}

inline ChangedCurvature changed_normal_curvature(const MetricSpec& m, const ChangeSpec& c, const HypersurfaceSpec& hs,
                                                 const HyperPoint& q, double defect_tol = 1e-12) {
  check_hypersurface(m, hs, q);
  const Embedding e = embed(hs, q);
  const LocalGeometry base(m, e.point(), 3);
  const LocalGeometry star(changed_metric_spec(m, c), e.point(), 3);
  return changed_normal_curvature(base, star, c, hs, e, q.v, defect_tol);
}

}  // namespace finsler
