#pragma once

/**
 * @file harness.hpp
 * @brief Verification suites over seeded sample points and report assembly.
 *
 * Suites: core-identities, change-identities, projectivity, hypersurface,
 * invariants-5, geodesics. Checks gated on projectivity are recorded as
 * skipped when the change is not projective on the samples.
 */

#include <finsler/error.hpp>
#include <finsler/finsler_core.hpp>
#include <finsler/geodesics.hpp>
#include <finsler/hypersurface.hpp>
#include <finsler/randers_change.hpp>
#include <finsler/report.hpp>
#include <finsler/sampling.hpp>
#include <finsler/spec_lang.hpp>
#include <finsler/tensor.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace finsler {

enum class Suite { core, change, projectivity, hypersurface, invariants, geodesics };

inline constexpr std::array<Suite, 6> kAllSuites{Suite::core,         Suite::change,     Suite::projectivity,
                                                 Suite::hypersurface, Suite::invariants, Suite::geodesics};

inline const char* suite_name(Suite s) {
  switch (s) {
    case Suite::core: return "core-identities";
    case Suite::change: return "change-identities";
    case Suite::projectivity: return "projectivity";
    case Suite::hypersurface: return "hypersurface";
    case Suite::invariants: return "invariants-5";
    case Suite::geodesics: return "geodesics";
  }
  return "";
}

inline Suite parse_suite(const std::string& name) {
  for (Suite s : kAllSuites)
    if (name == suite_name(s)) return s;
  throw ConfigError("unknown suite '" + name + "'");
}

struct SuiteConfig {
  std::string metric_path;
  std::string change_path;
  std::string hypersurface_path;  // empty: no hypersurface
  int samples = 100;
  std::uint64_t seed = 1;
  std::string tolerance_profile = "default";
  Tolerances tolerances;
  std::vector<Suite> suites{kAllSuites.begin(), kAllSuites.end()};
  int geodesic_runs = 10;
  double t_end = 10.0;
  int fd_points = 3;
  int fd_components = 3;
};

struct SuiteInputs {
  MetricSpec metric;
  ChangeSpec change;
  std::optional<HypersurfaceSpec> hypersurface;
};

inline SuiteInputs load_inputs(const SuiteConfig& config) {
  SuiteInputs in;
  auto metric = load_spec(config.metric_path);
  if (!std::holds_alternative<MetricSpec>(metric)) throw ConfigError(config.metric_path + ": not a metric spec");
  in.metric = std::get<MetricSpec>(metric);
  auto change = load_spec(config.change_path);
  if (!std::holds_alternative<ChangeSpec>(change)) throw ConfigError(config.change_path + ": not a change spec");
  in.change = std::get<ChangeSpec>(change);
  if (!config.hypersurface_path.empty()) {
    auto hs = load_spec(config.hypersurface_path);
    if (!std::holds_alternative<HypersurfaceSpec>(hs))
      throw ConfigError(config.hypersurface_path + ": not a hypersurface spec");
    in.hypersurface = std::get<HypersurfaceSpec>(hs);
  }
  if (in.change.dim != in.metric.dim) throw ConfigError("change and metric dimensions differ");
  if (in.hypersurface && in.hypersurface->dim != in.metric.dim)
    throw ConfigError("hypersurface and metric dimensions differ");
  return in;
}

inline Environment make_environment(const SuiteConfig& config) {
  Environment e;
#if defined(__clang__)
  e.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  e.compiler = "gcc " __VERSION__;
#else
  e.compiler = "unknown";
#endif
  e.eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
            std::to_string(EIGEN_MINOR_VERSION);
  e.boost = std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
            std::to_string(BOOST_VERSION % 100);
  e.metric = config.metric_path;
  e.change = config.change_path;
  e.hypersurface = config.hypersurface_path;
  e.seed = config.seed;
  e.samples = config.samples;
  e.tolerance_profile = config.tolerance_profile;
  for (Suite s : config.suites) e.suites.push_back(suite_name(s));
  return e;
}

// ---------------------------------------------------------------------------
// Check accumulation

class Check {
 public:
  Check(std::string id, Suite suite, std::string identity, double tol, bool standard = false) {
    rec_.id = std::move(id);
    rec_.suite = suite_name(suite);
    rec_.identity = std::move(identity);
    rec_.tolerance = tol;
    rec_.standard_formula = standard;
  }

  void sample() { ++rec_.samples; }

  void compare(double value, double expected) {
    if (!std::isfinite(value) || !std::isfinite(expected)) {
      finite_ = false;
      return;
    }
    const double a = std::abs(value - expected);
    rec_.max_abs = std::max(rec_.max_abs, a);
    rec_.max_rel = std::max(rec_.max_rel, relative_error(value, expected));
  }

  void compare(const Tensor& value, const Tensor& expected) {
    for (std::size_t k = 0; k < value.size(); ++k) compare(value.data()[k], expected.data()[k]);
  }

  void zero(double residual) { compare(residual, 0.0); }

  void zero(const Tensor& t) {
    for (double v : t.data()) zero(v);
  }

  void note(std::string text) {
    if (!rec_.notes.empty()) rec_.notes += "; ";
    rec_.notes += std::move(text);
  }

  double max_abs() const { return rec_.max_abs; }
  double max_rel() const { return rec_.max_rel; }
  bool finite() const { return finite_; }

  /// pass iff every comparison was finite and max_rel <= tolerance.
  CheckRecord hard() const {
    CheckRecord r = rec_;
    r.verdict = finite_ && r.max_rel <= r.tolerance ? Verdict::pass : Verdict::fail;
    if (!finite_) r.notes = r.notes.empty() ? "non-finite value" : r.notes + "; non-finite value";
    return r;
  }

  CheckRecord reported() const {
    CheckRecord r = rec_;
    r.verdict = Verdict::reported_residual;
    if (!finite_) r.notes = r.notes.empty() ? "non-finite value" : r.notes + "; non-finite value";
    return r;
  }

  CheckRecord decided(bool ok) const {
    CheckRecord r = rec_;
    r.verdict = ok && finite_ ? Verdict::pass : Verdict::fail;
    return r;
  }

  CheckRecord skipped(const std::string& why) const {
    CheckRecord r = rec_;
    r.samples = 0;
    r.max_abs = 0.0;
    r.max_rel = 0.0;
    r.verdict = Verdict::skipped;
    r.notes = why;
    return r;
  }

 private:
  CheckRecord rec_;
  bool finite_ = true;
};

namespace detail {

inline std::string sci(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

inline Tensor scaled(Tensor t, double s) {
  for (double& v : t.data()) v *= s;
  return t;
}

inline SamplePoint shifted(const SamplePoint& p, bool in_y, int i, double h) {
  SamplePoint q = p;
  (in_y ? q.y : q.x)[static_cast<std::size_t>(i)] += h;
  return q;
}

/// Central difference of a tensor-valued function of the point along x^i or y^i.
template <class F>
Tensor central(const SamplePoint& p, bool in_y, int i, double h, F&& f) {
  Tensor up = f(shifted(p, in_y, i, h));
  const Tensor dn = f(shifted(p, in_y, i, -h));
  for (std::size_t k = 0; k < up.size(); ++k) up.data()[k] = (up.data()[k] - dn.data()[k]) / (2.0 * h);
  return up;
}

/// Stack n central differences into a tensor with one more lower index,
/// placed last: out(..., i) = d_i f(...).
template <class F>
Tensor gradient(const SamplePoint& p, bool in_y, double h, int n, F&& f) {
  std::vector<Tensor> parts;
  for (int i = 0; i < n; ++i) parts.push_back(central(p, in_y, i, h, f));
  Tensor out(n, parts[0].variance() + "l");
  const std::size_t m = parts[0].size();
  for (std::size_t k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i) out.data()[k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = parts[static_cast<std::size_t>(i)].data()[k];
  return out;
}

/// Bracket whose y-derivative is the Douglas tensor:
/// T^h_ij = G^h_ij - (P_ij y^h + P_i delta^h_j + P_j delta^h_i) / (n + 1),  P = N^m_m.
inline Tensor douglas_bracket(const MetricSpec& m, const SamplePoint& p) {
  const LocalGeometry geo(m, p, 5);
  const int n = geo.dim();
  const Tensor bw = geo.berwald();
  const auto& jets = geo.berwald_jets();
  std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
  Tensor pij(n, "ll");
  for (int i = 0; i < n; ++i)
    for (int mm = 0; mm < n; ++mm) {
      pi[static_cast<std::size_t>(i)] += bw(mm, mm, i);
      const Jet& jet = jets[static_cast<std::size_t>((mm * n + mm) * n + i)];
      for (int j = 0; j < n; ++j) pij(i, j) += geo.dy(jet, j).value();
    }
  Tensor t(n, "ull");
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        t(h, i, j) = bw(h, i, j) - (pij(i, j) * p.y[static_cast<std::size_t>(h)] + (h == j ? pi[static_cast<std::size_t>(i)] : 0.0) +
                                    (h == i ? pi[static_cast<std::size_t>(j)] : 0.0)) /
                                       (n + 1);
  return t;
}

/// R^i_k from finite differences of G^i and N^i_j in x.
inline Tensor riemann_fd(const MetricSpec& m, const SamplePoint& p, const LocalGeometry& geo, double h) {
  const int n = geo.dim();
  const Tensor gx = gradient(p, false, h, n, [&](const SamplePoint& q) { return LocalGeometry(m, q, 2).spray(); });
  const Tensor nx =
      gradient(p, false, h, n, [&](const SamplePoint& q) { return LocalGeometry(m, q, 3).nonlinear_connection(); });
  const Tensor g = geo.spray(), nl = geo.nonlinear_connection(), bw = geo.berwald();
  Tensor r(n, "ul");
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 2.0 * gx(i, k);
      for (int j = 0; j < n; ++j) {
        s -= p.y[static_cast<std::size_t>(j)] * nx(i, k, j);
        s += 2.0 * g(j) * bw(i, j, k);
        s -= nl(i, j) * nl(j, k);
      }
      r(i, k) = s;
    }
  return r;
}

/// W^i_k from R^i_k and finite differences of R in y.
inline Tensor weyl_curvature_fd(const MetricSpec& m, const SamplePoint& p, const LocalGeometry& geo, double h) {
  const int n = geo.dim();
  const Tensor r = geo.riemann_curvature();
  const Tensor ry =
      gradient(p, true, h, n, [&](const SamplePoint& q) { return LocalGeometry(m, q, 4).riemann_curvature(); });
  Tensor w(n, "ul");
  double ric = 0.0;
  for (int i = 0; i < n; ++i) ric += r(i, i);
  for (int k = 0; k < n; ++k) {
    double div = 0.0;  // dy_m A^m_k
    for (int mm = 0; mm < n; ++mm) div += ry(mm, k, mm);
    double dric = 0.0;
    for (int mm = 0; mm < n; ++mm) dric += ry(mm, mm, k);
    div -= dric / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double a = r(i, k) - (i == k ? ric / (n - 1) : 0.0);
      w(i, k) = a - div * p.y[static_cast<std::size_t>(i)] / (n + 1);
    }
  }
  return w;
}

/// F^i_jk from finite differences of g_ij in x.
inline Tensor cartan_connection_fd(const MetricSpec& m, const SamplePoint& p, const LocalGeometry& geo, double h) {
  const int n = geo.dim();
  const Tensor gx = gradient(p, false, h, n, [&](const SamplePoint& q) { return LocalGeometry(m, q, 2).fundamental(); });
  const Tensor c = geo.cartan(), nl = geo.nonlinear_connection(), ginv = geo.inverse_fundamental();
  Tensor dg(n, "lll");  // delta_c g_ab
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc) {
        double s = gx(a, b, cc);
        for (int mm = 0; mm < n; ++mm) s -= nl(mm, cc) * 2.0 * c(a, b, mm);
        dg(a, b, cc) = s;
      }
  Tensor out(n, "ull");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int r = 0; r < n; ++r) s += ginv(i, r) * (dg(r, k, j) + dg(r, j, k) - dg(j, k, r));
        out(i, j, k) = 0.5 * s;
      }
  return out;
}

/// G^i = g^il (y^k dx_k y_l - dx_l E) / 2 from finite differences in x.
inline Tensor spray_fd(const MetricSpec& m, const SamplePoint& p, const LocalGeometry& geo, double h) {
  const int n = geo.dim();
  const Tensor yx = gradient(p, false, h, n, [&](const SamplePoint& q) { return LocalGeometry(m, q, 2).lowered_y(); });
  const Tensor ex = gradient(p, false, h, n, [&](const SamplePoint& q) {
    Tensor e(n, "");
    e.data()[0] = LocalGeometry(m, q, 2).energy();
    return e;
  });
  const Tensor ginv = geo.inverse_fundamental();
  Tensor out(n, "u");
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int l = 0; l < n; ++l) {
      double t = -ex.data()[static_cast<std::size_t>(l)];
      for (int k = 0; k < n; ++k) t += p.y[static_cast<std::size_t>(k)] * yx(l, k);
      s += ginv(i, l) * t;
    }
    out(i) = 0.5 * s;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Runner

class Runner {
 public:
  Runner(const SuiteConfig& config, const SuiteInputs& inputs)
      : cfg_(config), in_(inputs), tol_(config.tolerances), star_(changed_metric_spec(inputs.metric, inputs.change)) {}

  Report run() {
    Report report;
    report.environment = make_environment(cfg_);
    if (cfg_.suites.empty()) return report;
    if (cfg_.samples < 1) throw ConfigError("sample count must be at least 1");
    points_ = sample_points(in_.metric, cfg_.samples, cfg_.seed, &in_.change);
    classify();
    for (Suite s : kAllSuites) {
      if (std::find(cfg_.suites.begin(), cfg_.suites.end(), s) == cfg_.suites.end()) continue;
      switch (s) {
        case Suite::core: core(); break;
        case Suite::change: change(); break;
        case Suite::projectivity: projectivity(); break;
        case Suite::hypersurface: hypersurface(); break;
        case Suite::invariants: invariants(); break;
        case Suite::geodesics: geodesics(); break;
      }
    }
    report.checks = std::move(records_);
    return report;
  }

 private:
  int n() const { return in_.metric.dim; }
  void add(CheckRecord r) { records_.push_back(std::move(r)); }

  void classify() {
    defect_ = 0.0;
    for (const auto& p : points_) defect_ = std::max(defect_, max_abs(projectivity_defect(in_.metric, in_.change, p)));
    projective_ = defect_ <= tol_["defect"];
  }

  std::string not_projective() const { return "change is not projective (max |A_i| = " + detail::sci(defect_, 3) + ")"; }

  // -- core-identities ------------------------------------------------------
  void core() {
    const Suite S = Suite::core;
    const double ex = tol_["exact"];
    Check length("core.euler.length", S, "l_i y^i = L", ex);
    Check energy("core.euler.energy", S, "g_ij y^i y^j = L^2", ex);
    Check angular("core.euler.angular", S, "h_ij y^j = 0", ex);
    Check cartan("core.euler.cartan", S, "C_ijk y^k = 0", ex);
    Check connection("core.euler.connection", S, "N^i_j y^j = 2 G^i", ex, true);
    Check a_y("core.euler.a", S, "a_i y^i = 0,  a_i = beta y_i / L^2 - b_i", ex);
    Check symmetry("core.symmetry", S, "g_ij = g_ji,  C_ijk totally symmetric", ex);
    Check inverse("core.inverse.metric", S, "g_ij g^jk = delta_i^k", tol_["inverse_metric"]);
    Check christoffel("core.spray.christoffel", S, "2 G^i = gamma^i_jk y^j y^k", ex, true);
    Check homogeneity("core.spray.homogeneity", S, "G^i(x, 2y) = 4 G^i(x, y)", ex, true);
    Check berwald("core.berwald.euler", S, "G^i_jk y^k = N^i_j", ex, true);
    Check riemann("core.riemann.euler", S, "R^i_k y^k = 0", ex, true);
    Check cc_spray("core.cartan_connection.spray", S, "F^i_jk y^j y^k = 2 G^i", tol_["connection"], true);
    Check cc_sym("core.cartan_connection.symmetry", S, "F^i_jk = F^i_kj", ex, true);
    Check douglas("core.douglas.structure", S, "D^h_ijk totally symmetric, D^h_hjk = 0, D^h_ijk y^k = 0", ex, true);
    Check weyl("core.weyl.structure", S, "W^h_ij = -W^h_ji, W^h_hj = 0, W^i_i = 0, W^i_k y^k = 0", ex, true);

    const int dim = n();
    for (const auto& p : points_) {
      const LocalGeometry geo(in_.metric, p, kFullOrder);
      const ChangedPoint cp(geo, in_.change);
      const auto& y = p.y;
      const Tensor l = geo.support_covector(), g = geo.fundamental(), h = geo.angular(), c = geo.cartan();
      const Tensor G = geo.spray(), nl = geo.nonlinear_connection(), bw = geo.berwald(), r = geo.riemann_curvature();
      const Tensor f = geo.cartan_connection(), d = geo.douglas(), wk = geo.weyl_curvature(), w = geo.weyl();
      for (Check* ch : {&length, &energy, &angular, &cartan, &connection, &a_y, &symmetry, &inverse, &christoffel,
                        &homogeneity, &berwald, &riemann, &cc_spray, &cc_sym, &douglas, &weyl})
        ch->sample();

      double ly = 0.0, gyy = 0.0, ay = 0.0;
      for (int i = 0; i < dim; ++i) {
        ly += l(i) * y[i];
        ay += cp.a()(i) * y[i];
        double hy = 0.0, ny = 0.0, ry = 0.0, fyy = 0.0, wy = 0.0;
        for (int j = 0; j < dim; ++j) {
          gyy += g(i, j) * y[i] * y[j];
          hy += h(i, j) * y[j];
          ny += nl(i, j) * y[j];
          ry += r(i, j) * y[j];
          wy += wk(i, j) * y[j];
          symmetry.compare(g(i, j), g(j, i));
          for (int k = 0; k < dim; ++k) {
            fyy += f(i, j, k) * y[j] * y[k];
            symmetry.compare(c(i, j, k), c(j, i, k));
            symmetry.compare(c(i, j, k), c(i, k, j));
            cc_sym.compare(f(i, j, k), f(i, k, j));
          }
          double cy = 0.0, by = 0.0;
          for (int k = 0; k < dim; ++k) {
            cy += c(i, j, k) * y[k];
            by += bw(i, j, k) * y[k];
          }
          cartan.zero(cy);
          berwald.compare(by, nl(i, j));
        }
        angular.zero(hy);
        connection.compare(ny, 2.0 * G(i));
        riemann.zero(ry);
        cc_spray.compare(fyy, 2.0 * G(i));
        weyl.zero(wy);
      }
      length.compare(ly, geo.length());
      energy.compare(gyy, geo.length() * geo.length());
      a_y.zero(ay);
      inverse.zero(inverse_residual(g, geo.inverse_fundamental()));
      christoffel.compare(geo.spray_christoffel(), G);
      homogeneity.compare(LocalGeometry(in_.metric, scaled_point(p, 2.0), 2).spray(), detail::scaled(G, 4.0));

      double wtrace = 0.0;
      for (int i = 0; i < dim; ++i) wtrace += wk(i, i);
      weyl.zero(wtrace);
      for (int hh = 0; hh < dim; ++hh)
        for (int i = 0; i < dim; ++i) {
          double dtrace = 0.0;  // D^m_m hh i
          for (int j = 0; j < dim; ++j) {
            weyl.compare(w(hh, i, j), -w(hh, j, i));
            dtrace += d(j, j, hh, i);
            double dyk = 0.0;
            for (int k = 0; k < dim; ++k) {
              douglas.compare(d(hh, i, j, k), d(hh, j, i, k));
              douglas.compare(d(hh, i, j, k), d(hh, i, k, j));
              dyk += d(hh, i, j, k) * y[k];
            }
            douglas.zero(dyk);
          }
          douglas.zero(dtrace);
        }
      for (int j = 0; j < dim; ++j) {
        double wt = 0.0;
        for (int hh = 0; hh < dim; ++hh) wt += w(hh, hh, j);
        weyl.zero(wt);
      }
    }
    for (const Check* ch : {&length, &energy, &angular, &cartan, &connection, &a_y, &symmetry, &inverse, &christoffel,
                            &homogeneity, &berwald, &riemann, &cc_spray, &cc_sym, &douglas, &weyl})
      add(ch->hard());
    finite_differences();
  }

  static SamplePoint scaled_point(const SamplePoint& p, double s) {
    SamplePoint q = p;
    for (double& v : q.y) v *= s;
    return q;
  }

  void finite_differences() {
    const Suite S = Suite::core;
    const double tol = tol_["fd"], h = 1e-5;
    const MetricSpec& m = in_.metric;
    const int dim = n();
    struct Family {
      Check check;
      std::function<std::pair<Tensor, Tensor>(const SamplePoint&, const LocalGeometry&)> pair;
    };
    std::vector<Family> fams;
    const auto add_family = [&](const char* id, const char* identity, auto fn) {
      fams.push_back({Check(id, S, identity, tol, true), fn});
    };
    add_family("fd.support", "l_i = dy_i L", [&](const SamplePoint& p, const LocalGeometry& geo) {
      Tensor fd(dim, "l");
      for (int i = 0; i < dim; ++i)
        fd(i) = (metric_length(m, detail::shifted(p, true, i, h)) - metric_length(m, detail::shifted(p, true, i, -h))) /
                (2.0 * h);
      return std::pair{geo.support_covector(), fd};
    });
    add_family("fd.fundamental", "g_ij = dy_j y_i", [&](const SamplePoint& p, const LocalGeometry& geo) {
      return std::pair{geo.fundamental(), detail::gradient(p, true, h, dim, [&](const SamplePoint& q) {
                         return LocalGeometry(m, q, 2).lowered_y();
                       })};
    });
    add_family("fd.cartan", "C_ijk = dy_k g_ij / 2", [&](const SamplePoint& p, const LocalGeometry& geo) {
      return std::pair{geo.cartan(), detail::scaled(detail::gradient(p, true, h, dim, [&](const SamplePoint& q) {
                                                      return LocalGeometry(m, q, 2).fundamental();
                                                    }),
                                                    0.5)};
    });
    add_family("fd.spray", "G^i = g^il (y^k dx_k y_l - dx_l E) / 2", [&](const SamplePoint& p, const LocalGeometry& geo) {
      return std::pair{geo.spray(), detail::spray_fd(m, p, geo, h)};
    });
    add_family("fd.nonlinear", "N^i_j = dy_j G^i", [&](const SamplePoint& p, const LocalGeometry& geo) {
      return std::pair{geo.nonlinear_connection(), detail::gradient(p, true, h, dim, [&](const SamplePoint& q) {
                         return LocalGeometry(m, q, 2).spray();
                       })};
    });
    add_family("fd.berwald", "G^i_jk = dy_k N^i_j", [&](const SamplePoint& p, const LocalGeometry& geo) {
      return std::pair{geo.berwald(), detail::gradient(p, true, h, dim, [&](const SamplePoint& q) {
                         return LocalGeometry(m, q, 3).nonlinear_connection();
                       })};
    });
    add_family("fd.cartan_connection", "F^i_jk = g^ir (d_j g_rk + d_k g_rj - d_r g_jk) / 2, d_j = dx_j - N^m_j dy_m",
               [&](const SamplePoint& p, const LocalGeometry& geo) {
                 return std::pair{geo.cartan_connection(), detail::cartan_connection_fd(m, p, geo, h)};
               });
    add_family("fd.riemann", "R^i_k = 2 dx_k G^i - y^j dx_j N^i_k + 2 G^j G^i_jk - N^i_j N^j_k",
               [&](const SamplePoint& p, const LocalGeometry& geo) {
                 return std::pair{geo.riemann_curvature(), detail::riemann_fd(m, p, geo, h)};
               });
    add_family("fd.douglas", "D^h_ijk = dy_k (G^h_ij - (P_ij y^h + P_i delta^h_j + P_j delta^h_i) / (n+1)), P = N^m_m",
               [&](const SamplePoint& p, const LocalGeometry& geo) {
                 return std::pair{geo.douglas(), detail::gradient(p, true, h, dim, [&](const SamplePoint& q) {
                                    return detail::douglas_bracket(m, q);
                                  })};
               });
    add_family("fd.weyl_curvature", "W^i_k = A^i_k - (dy_m A^m_k) y^i / (n+1), A^i_k = R^i_k - R^m_m delta^i_k / (n-1)",
               [&](const SamplePoint& p, const LocalGeometry& geo) {
                 return std::pair{geo.weyl_curvature(), detail::weyl_curvature_fd(m, p, geo, h)};
               });
    add_family("fd.weyl", "W^h_ij = (dy_j W^h_i - dy_i W^h_j) / 3", [&](const SamplePoint& p, const LocalGeometry& geo) {
      const Tensor wy = detail::gradient(p, true, h, dim, [&](const SamplePoint& q) {
        return LocalGeometry(m, q, 5).weyl_curvature();
      });  // wy(h, i, j) = dy_j W^h_i
      Tensor fd(dim, "ull");
      for (int a = 0; a < dim; ++a)
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) fd(a, i, j) = (wy(a, i, j) - wy(a, j, i)) / 3.0;
      return std::pair{geo.weyl(), fd};
    });

    std::mt19937_64 rng(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
    const int count = std::min(cfg_.fd_points, static_cast<int>(points_.size()));
    for (int s = 0; s < count; ++s) {
      const SamplePoint& p = points_[static_cast<std::size_t>(s)];
      const LocalGeometry geo(m, p, kFullOrder);
      for (auto& fam : fams) {
        const auto [value, fd] = fam.pair(p, geo);
        std::vector<std::size_t> idx(value.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(cfg_.fd_components)));
        fam.check.sample();
        for (std::size_t k : idx) fam.check.compare(value.data()[k], fd.data()[k]);
      }
    }
    for (auto& fam : fams) {
      fam.check.note(std::to_string(cfg_.fd_components) + " random components per point, h = 1e-5");
      add(fam.check.hard());
    }
  }

  // -- change-identities ----------------------------------------------------
  void change() {
    const Suite S = Suite::change;
    const double ex = tol_["exact"], inv = tol_["inverse"];
    Check support("change.support", S, "l*_i = e^sigma l_i + b_i", ex);
    Check angular("change.angular", S, "h*_ij = tau h_ij,  tau = e^sigma L*/L", ex);
    Check fundamental("change.fundamental", S,
                      "g*_ij = tau g_ij + b_i b_j + e^sigma L^-1 (b_i y_j + b_j y_i) - beta e^sigma L^-3 y_i y_j", ex);
    Check cartan("change.cartan", S, "C*_ijk = tau [C_ijk - (h_ij a_k + h_jk a_i + h_ki a_j) / (2 L*)]", inv);
    Check inverse_closed("change.inverse.closed_form", S,
                         "g*^ij = tau^-1 g^ij + phi y^i y^j - L^-1 tau^-2 (y^i b^j + y^j b^i),  "
                         "phi = e^-2sigma (L e^sigma b^2 + beta) / L*^3",
                         inv);
    Check inverse_oracle("change.inverse.oracle", S, "g*_ij g*^jk = delta_i^k (g*^ij inverted numerically)",
                         tol_["inverse_metric"]);
    Check mixed("change.cartan_mixed", S,
                "C*^j_ik = C^j_ik - (h^j_i a_k + h^j_k a_i + h_ik a^j) / (2 L*) - (tau L)^-1 C_ikr y^j b^r "
                "- (2 a_i a_k + a^2 h_ik) y^j / (2 tau L L*)",
                inv);
    Check conformal("reduce.conformal", S,
                    "beta = 0: h* = e^2sigma h, g* = e^2sigma g, C* = e^2sigma C, g*^-1 = e^-2sigma g^-1", ex);
    Check randers("reduce.randers", S,
                  "sigma = 0: g*_ij = tau g_ij + b_i b_j + l_i b_j + l_j b_i + (1 - tau) l_i l_j, "
                  "C*_ijk = tau C_ijk + (h_ij m_k + h_jk m_i + h_ki m_j) / (2L), m_i = b_i - beta l_i / L",
                  inv);
    Check identity("reduce.identity", S, "sigma = 0, b = 0: every starred quantity equals its base value", 0.0);

    const bool b_zero = is_zero_one_form(in_.change), s_zero = is_zero_sigma(in_.change);
    const bool ident = is_identity_change(in_.change);
    const int dim = n();
    for (const auto& p : points_) {
      const LocalGeometry geo(in_.metric, p, 3);
      const LocalGeometry star(star_, p, 3);
      const ChangedPoint cp(geo, in_.change);
      for (Check* ch : {&support, &angular, &fundamental, &cartan, &inverse_closed, &inverse_oracle, &mixed})
        ch->sample();
      const Tensor gs = star.fundamental(), gsi = star.inverse_fundamental(), cs = star.cartan();
      support.compare(cp.support_covector(), star.support_covector());
      angular.compare(cp.angular(), star.angular());
      fundamental.compare(cp.fundamental(), gs);
      cartan.compare(cp.cartan(), cs);
      inverse_closed.compare(cp.inverse_closed_form(), gsi);
      inverse_oracle.zero(inverse_residual(gs, gsi));
      mixed.compare(cp.cartan_mixed(), raise_cartan(gsi, cs));

      if (b_zero) {
        conformal.sample();
        const double e2 = std::exp(2.0 * cp.sigma());
        conformal.compare(star.angular(), detail::scaled(geo.angular(), e2));
        conformal.compare(gs, detail::scaled(geo.fundamental(), e2));
        conformal.compare(cs, detail::scaled(geo.cartan(), e2));
        conformal.compare(gsi, detail::scaled(geo.inverse_fundamental(), 1.0 / e2));
      }
      if (s_zero) {
        randers.sample();
        const Tensor l = geo.support_covector(), g = geo.fundamental(), h = geo.angular(), c = geo.cartan();
        const Tensor& b = cp.b();
        const double tau = cp.tau(), L = geo.length();
        Tensor gr(dim, "ll"), cr(dim, "lll");
        std::vector<double> mv(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) mv[static_cast<std::size_t>(i)] = b(i) - cp.beta() * l(i) / L;
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) {
            gr(i, j) = tau * g(i, j) + b(i) * b(j) + l(i) * b(j) + l(j) * b(i) + (1.0 - tau) * l(i) * l(j);
            for (int k = 0; k < dim; ++k)
              cr(i, j, k) = tau * c(i, j, k) + (h(i, j) * mv[static_cast<std::size_t>(k)] +
                                                h(j, k) * mv[static_cast<std::size_t>(i)] +
                                                h(k, i) * mv[static_cast<std::size_t>(j)]) /
                                                   (2.0 * L);
          }
        randers.compare(gs, gr);
        randers.compare(cs, cr);
      }
      if (ident) {
        identity.sample();
        identity.compare(star.support_covector(), geo.support_covector());
        identity.compare(star.angular(), geo.angular());
        identity.compare(gs, geo.fundamental());
        identity.compare(gsi, geo.inverse_fundamental());
        identity.compare(cs, geo.cartan());
        identity.compare(star.spray(), geo.spray());
        identity.compare(star.nonlinear_connection(), geo.nonlinear_connection());
        identity.compare(cp.support_covector(), geo.support_covector());
        identity.compare(cp.angular(), geo.angular());
        identity.compare(cp.fundamental(), geo.fundamental());
        identity.compare(cp.inverse_closed_form(), geo.inverse_fundamental());
        identity.compare(cp.cartan(), geo.cartan());
      }
    }
    add(support.hard());
    add(angular.hard());
    add(fundamental.hard());
    add(cartan.hard());
    inverse_closed.note("closed form compared with the numerically inverted g*_ij");
    add(inverse_closed.reported());
    add(inverse_oracle.hard());
    mixed.note("closed form compared with g*^jr C*_rik from the changed space");
    add(mixed.reported());
    add(b_zero ? conformal.hard() : conformal.skipped("b != 0"));
    add(s_zero ? randers.hard() : randers.skipped("sigma != 0"));
    add(ident ? identity.hard() : identity.skipped("not the identity change"));
  }

  // -- projectivity ---------------------------------------------------------
  void projectivity() {
    const Suite S = Suite::projectivity;
    Check defect("proj.defect", S, "A_i = e^sigma L dx_i sigma + (dx_i b_j - dx_j b_i) y^j = 0", tol_["defect"]);
    Check collinear("proj.collinear", S, "D^i = G*^i - G^i is parallel to y^i", tol_["collinear"]);
    Check threshold("proj.discriminating", S, "max |A_i| > non-projective threshold", tol_["non_projective"]);
    for (const auto& p : points_) {
      defect.sample();
      defect.zero(projectivity_defect(in_.metric, in_.change, p));
      if (projective_) {
        collinear.sample();
        const Tensor d = difference_vector(LocalGeometry(in_.metric, p, 2), LocalGeometry(star_, p, 2));
        collinear.zero(collinearity_residual(d, p.y));
      }
    }
    defect.note(projective_ ? "verdict: projective" : "verdict: not projective");
    add(defect.reported());
    add(projective_ ? collinear.hard() : collinear.skipped(not_projective()));
    if (projective_) {
      add(threshold.skipped("change is projective"));
    } else {
      Check t = threshold;
      for (std::size_t k = 0; k < points_.size(); ++k) t.sample();
      t.zero(defect_);
      t.note("max |A_i| = " + detail::sci(defect_, 3));
      add(t.decided(defect_ > tol_["non_projective"]));
    }
  }

  // -- hypersurface ---------------------------------------------------------
  void hypersurface() {
    const Suite S = Suite::hypersurface;
    Check frame_base("hyper.frame.base", S,
                     "g_ij B^i_a N^j = 0, g_ij N^i N^j = 1, B^i_a B^b_i = delta, B^i_a N_i = 0, N^i N_i = 1, "
                     "B^i_a B^a_j + N^i N_j = delta",
                     tol_["frame"]);
    Check frame_star("hyper.frame.changed", S, "frame relations of the changed space (N* solved in g*)", tol_["frame"]);
    Check norm("hyper.norm_identity", S, "g*_ij N^i N^j = tau + (b_i N^i)^2", tol_["frame"]);
    Check tangency("hyper.tangency", S, "b_i N^i = 0", tol_["normal"]);
    Check normal("hyper.normal_closed", S, "N*^i = N^i / sqrt(tau)", tol_["normal"]);
    Check lower("hyper.lower_closed", S, "N*_i = g*_ij N*^j = sqrt(tau) N_i", tol_["normal"]);
    Check ratio("hyper.curvature_ratio", S, "H*_a = sqrt(tau) H_a,  H_a = N_i (v^b B^i_ba + N^i_j B^j_a)",
                tol_["curvature_ratio"]);
    Check conn("hyper.connection", S, "N_i D^i_j B^j_a = 0,  D^i_j = N*^i_j - N^i_j", tol_["curvature_ratio"]);
    Check geodesic("hyper.totally_geodesic", S, "max|H| <= tol  <=>  max|H*| <= tol sqrt(max tau)",
                   tol_["totally_geodesic"]);
    const std::vector<Check*> all{&frame_base, &frame_star, &norm, &tangency, &normal, &lower, &ratio, &conn, &geodesic};
    if (!in_.hypersurface) {
      for (Check* c : all) add(c->skipped("no hypersurface given"));
      return;
    }
    const HypersurfaceSpec& hs = *in_.hypersurface;
    const auto qs = sample_hyperpoints(hs, in_.metric, cfg_.samples, cfg_.seed, &in_.change);

    double defect = 0.0, bn = 0.0;
    for (const auto& q : qs) {
      const Embedding e = embed(hs, q);
      const LocalGeometry base(in_.metric, e.point(), 3);
      const LocalGeometry star(star_, e.point(), 3);
      const ChangedFrame cf = changed_frame(base, star, in_.change, hs, e);
      defect = std::max(defect, max_abs(projectivity_defect(in_.change, e.point(), base.length())));
      bn = std::max(bn, std::abs(cf.bN));
      for (Check* c : {&frame_base, &frame_star, &norm, &tangency, &normal, &lower}) c->sample();
      frame_base.zero(frame_residuals(cf.base, base.fundamental()).max());
      frame_star.zero(frame_residuals(cf.oracle, star.fundamental()).max());
      norm.zero(cf.norm_identity);
      tangency.zero(cf.bN);
      normal.zero(cf.normal_residual);
      lower.zero(cf.lower_residual);
    }
    const bool tangential = bn <= tol_["normal"];
    const bool projective = defect <= tol_["defect"];

    add(frame_base.hard());
    add(frame_star.hard());
    add(norm.hard());
    tangency.note(tangential ? "b is tangent to the hypersurface at every sample"
                             : "b is not tangent: max |b_i N^i| = " + detail::sci(bn, 3));
    add(tangency.reported());
    if (tangential) {
      add(normal.hard());
    } else {
      normal.note("b_i N^i != 0, so N* is not N / sqrt(tau)");
      add(normal.reported());
    }
    add(lower.hard());

    if (!projective || !tangential) {
      const std::string why = !projective ? "change is not projective on the hypersurface (max |A_i| = " +
                                                detail::sci(defect, 3) + ")"
                                          : "b is not tangent to the hypersurface";
      add(ratio.skipped(why));
      add(conn.skipped(why));
      add(geodesic.skipped(why));
      return;
    }
    double max_h = 0.0, max_hs = 0.0, max_tau = 0.0;
    for (const auto& q : qs) {
      const Embedding e = embed(hs, q);
      const LocalGeometry base(in_.metric, e.point(), 3);
      const LocalGeometry star(star_, e.point(), 3);
      const ChangedCurvature cc = changed_normal_curvature(base, star, in_.change, hs, e, q.v, tol_["defect"]);
      for (Check* c : {&ratio, &conn, &geodesic}) c->sample();
      for (int a = 0; a < cc.H.size(); ++a) ratio.compare(cc.H_star(a), std::sqrt(cc.tau) * cc.H(a));
      conn.zero(cc.connection_residual);
      max_h = std::max(max_h, cc.H.cwiseAbs().maxCoeff());
      max_hs = std::max(max_hs, cc.H_star.cwiseAbs().maxCoeff());
      max_tau = std::max(max_tau, cc.tau);
    }
    add(ratio.hard());
    add(conn.hard());
    const double tg = tol_["totally_geodesic"];
    const bool base_tg = max_h <= tg, star_tg = max_hs <= tg * std::sqrt(max_tau);
    geodesic.zero(max_h);
    geodesic.note("max|H| = " + detail::sci(max_h, 3) + ", max|H*| = " + detail::sci(max_hs, 3) + ": " +
                  (base_tg && star_tg   ? "totally geodesic in both spaces"
                   : !base_tg && !star_tg ? "totally geodesic in neither space"
                                          : "totally geodesic in only one space"));
    add(geodesic.decided(base_tg == star_tg));
  }

  // -- invariants-5 ---------------------------------------------------------
  void invariants() {
    const Suite S = Suite::invariants;
    Check douglas("inv.douglas", S, "D*^h_ijk = D^h_ijk", tol_["douglas_invariance"], true);
    Check weyl("inv.weyl", S, "W*^h_ij = W^h_ij", tol_["weyl_invariance"], true);
    Check dzero("inv.douglas_zero", S, "D^h_ijk = 0 (base space)", tol_["douglas_zero"], true);
    Check wzero("inv.weyl_zero", S, "W^h_ij = 0 (base space)", tol_["weyl_zero"], true);
    double max_cartan = 0.0;
    for (const auto& p : points_) {
      const LocalGeometry geo(in_.metric, p, kFullOrder);
      const Tensor d = geo.douglas(), w = geo.weyl();
      max_cartan = std::max(max_cartan, max_abs(geo.cartan()));
      dzero.sample();
      wzero.sample();
      dzero.zero(d);
      wzero.zero(w);
      if (projective_) {
        const LocalGeometry star(star_, p, kFullOrder);
        douglas.sample();
        weyl.sample();
        douglas.compare(star.douglas(), d);
        weyl.compare(star.weyl(), w);
      }
    }
    add(projective_ ? douglas.hard() : douglas.skipped(not_projective()));
    add(projective_ ? weyl.hard() : weyl.skipped(not_projective()));
    if (in_.metric.mode == MetricMode::riemannian || max_cartan <= tol_["exact"]) {
      if (in_.metric.mode != MetricMode::riemannian) dzero.note("base is Riemannian: C_ijk = 0 at every sample");
      add(dzero.hard());
    } else {
      dzero.note(dzero.max_abs() <= dzero.hard().tolerance ? "D = 0 at sample resolution" : "D != 0");
      add(dzero.reported());
    }
    if (n() == 2) {
      wzero.note("W vanishes identically in dimension 2");
    } else {
      wzero.note(wzero.max_abs() <= tol_["weyl_zero"] ? "W = 0 at sample resolution: projectively flat"
                                                       : "W != 0: not projectively flat");
    }
    add(wzero.reported());
  }

  // -- geodesics ------------------------------------------------------------
  void geodesics() {
    const Suite S = Suite::geodesics;
    Check drift("geo.drift", S, "L(x(t), y(t)) = L(x0, y0) along geodesics of L and of L*", tol_["drift"], true);
    Check deviation("geo.deviation", S, "geodesics of L and L* through (x0, y0) coincide as point sets",
                    tol_["geodesic_deviation"]);
    Check reverse("geo.reverse", S, "reversing y0 retraces the same point set", tol_["geodesic_deviation"]);

    bool reversible = true;
    for (const auto& p : points_) {
      SamplePoint q = scaled_point(p, -1.0);
      reversible = reversible && relative_error(metric_length(in_.metric, q), metric_length(in_.metric, p)) <= 1e-12;
    }

    const auto& box = in_.metric.domain.box;
    double half = std::numeric_limits<double>::infinity();
    for (const auto& iv : box) half = std::min(half, 0.5 * (iv.hi - iv.lo));
    const double speed = 0.04 * half * 10.0 / cfg_.t_end;
    const double tol = tol_["integrator"];
    std::mt19937_64 rng(cfg_.seed ^ 0xc2b2ae3d27d4eb4fULL);
    int done = 0, redrawn = 0;
    while (done < cfg_.geodesic_runs) {
      if (redrawn > 10 * cfg_.geodesic_runs)
        throw IntegrationError("no initial condition keeps the geodesics inside the domain box");
      std::vector<double> x0;
      for (const auto& iv : box) {
        const double c = 0.5 * (iv.lo + iv.hi), w = 0.25 * (iv.hi - iv.lo);
        x0.push_back(std::uniform_real_distribution<double>(c - w, c + w)(rng));
      }
      std::vector<double> y0 = detail::random_direction(rng, n(), Interval{speed, speed});
      if (point_rejection(in_.metric, &in_.change, SamplePoint{x0, y0})) {
        ++redrawn;
        continue;
      }
      try {
        const GeodesicPath a = integrate_geodesic(in_.metric, x0, y0, cfg_.t_end, tol);
        const GeodesicPath b = integrate_geodesic(star_, x0, y0, cfg_.t_end, tol);
        double back = 0.0;
        if (reversible) {
          std::vector<double> yb = a.states.back().y;
          for (double& v : yb) v = -v;
          back = path_deviation(in_.metric, a, integrate_geodesic(in_.metric, a.states.back().x, yb, cfg_.t_end, tol));
        }
        drift.sample();
        drift.zero(a.length_drift);
        drift.zero(b.length_drift);
        if (projective_) {
          deviation.sample();
          deviation.zero(path_deviation(in_.metric, a, b));
        }
        if (reversible) {
          reverse.sample();
          reverse.zero(back);
        }
        ++done;
      } catch (const IntegrationError&) {
        ++redrawn;
      }
    }
    const std::string ic = std::to_string(done) + " initial conditions, t_end = " + detail::sci(cfg_.t_end, 1) +
                           (redrawn ? ", " + std::to_string(redrawn) + " redrawn" : "");
    drift.note(ic);
    add(drift.hard());
    deviation.note(ic);
    add(projective_ ? deviation.hard() : deviation.skipped(not_projective()));
    add(reversible ? reverse.hard() : reverse.skipped("L(x, -y) != L(x, y): the metric is not reversible"));
  }

  const SuiteConfig& cfg_;
  const SuiteInputs& in_;
  const Tolerances& tol_;
  MetricSpec star_;
  std::vector<SamplePoint> points_;
  std::vector<CheckRecord> records_;
  double defect_ = 0.0;
  bool projective_ = false;
};

inline Report run_suites(const SuiteConfig& config, const SuiteInputs& inputs) {
  return Runner(config, inputs).run();
}

inline Report run_suites(const SuiteConfig& config) { return run_suites(config, load_inputs(config)); }

}  // namespace finsler
