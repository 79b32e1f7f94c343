#pragma once

/**
 * @file geodesics.hpp
 * @brief Geodesics x'' + 2 G(x, x') = 0 by adaptive Dormand-Prince steps,
 * and point-set comparison of geodesics of two metrics.
 */

#include <finsler/error.hpp>
#include <finsler/finsler_core.hpp>
#include <finsler/spec_lang.hpp>

#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace finsler {

struct GeodesicState {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};

struct GeodesicOptions {
  int samples = 2000;           // dense output states after t = 0
  bool confine = true;          // leaving the spec's x box is an error
  double initial_step = 1e-2;
  double min_step = 1e-12;
  std::size_t max_steps = 1000000;
};

struct GeodesicPath {
  std::vector<GeodesicState> states;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double max_error = 0.0;     // largest accepted local error estimate
  double length_drift = 0.0;  // max |L(t) - L(0)| / L(0) over the states
};

namespace detail {

using OdeState = std::vector<double>;

struct GeodesicSystem {
  const MetricSpec* metric;

  void operator()(const OdeState& s, OdeState& ds, double /*t*/) const {
    const std::size_t n = static_cast<std::size_t>(metric->dim);
    SamplePoint p{{s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n)}, {s.begin() + static_cast<std::ptrdiff_t>(n), s.end()}};
    const Tensor g = LocalGeometry(*metric, p, 2).spray();
    for (std::size_t i = 0; i < n; ++i) {
      ds[i] = s[n + i];
      ds[n + i] = -2.0 * g(static_cast<int>(i));
    }
  }
};

inline GeodesicState unpack(double t, const OdeState& s, std::size_t n) {
  return {t, {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n)}, {s.begin() + static_cast<std::ptrdiff_t>(n), s.end()}};
}

inline bool inside(const MetricSpec& m, const OdeState& s) {
  for (std::size_t i = 0; i < m.domain.box.size(); ++i)
    if (!(s[i] >= m.domain.box[i].lo && s[i] <= m.domain.box[i].hi)) return false;
  return true;
}

}  // namespace detail

inline GeodesicPath integrate_geodesic(const MetricSpec& m, std::span<const double> x0, std::span<const double> y0,
                                       double t_end, double tol, const GeodesicOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  const std::size_t n = static_cast<std::size_t>(m.dim);
  if (x0.size() != n || y0.size() != n) throw ConfigError("x0 and y0 need " + std::to_string(n) + " components");
  if (!(tol > 0.0)) throw ConfigError("integration tolerance must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (opt.samples < 1) throw ConfigError("geodesic output needs at least one sample");

  detail::OdeState s(2 * n);
  std::copy(x0.begin(), x0.end(), s.begin());
  std::copy(y0.begin(), y0.end(), s.begin() + static_cast<std::ptrdiff_t>(n));
  if (opt.confine && !detail::inside(m, s)) throw IntegrationError("initial point outside the domain box");
  const double l0 = metric_length(m, SamplePoint{{x0.begin(), x0.end()}, {y0.begin(), y0.end()}});
  if (!(l0 > 0.0)) throw PreconditionError("L(x0, y0) must be positive");

  const detail::GeodesicSystem sys{&m};
  odeint::runge_kutta_dopri5<detail::OdeState> stepper;
  detail::OdeState ds(2 * n), s_new(2 * n), ds_new(2 * n), err(2 * n), dense(2 * n);
  sys(s, ds, 0.0);

  GeodesicPath path;
  path.states.push_back(detail::unpack(0.0, s, n));
  int next = 1;
  const auto sample_time = [&](int k) { return t_end * k / opt.samples; };

  double t = 0.0, dt = std::min(opt.initial_step, t_end);
  while (next <= opt.samples) {
    if (path.steps + path.rejected >= opt.max_steps) throw IntegrationError("step budget exhausted at t = " + std::to_string(t));
    if (dt < opt.min_step) throw IntegrationError("step size underflow at t = " + std::to_string(t));
    const bool last = t + dt >= t_end;
    const double h = last ? t_end - t : dt;

    double norm = 0.0;
    try {
      stepper.do_step(sys, s, ds, t, s_new, ds_new, h, err);
      for (std::size_t i = 0; i < s.size(); ++i)
        norm = std::max(norm, std::abs(err[i]) / (tol * std::max({1.0, std::abs(s[i]), std::abs(s_new[i])})));
      if (!std::isfinite(norm)) norm = std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      norm = std::numeric_limits<double>::infinity();
    }
    if (norm > 1.0) {
      ++path.rejected;
      dt = h * (std::isfinite(norm) ? std::max(0.2, 0.9 * std::pow(norm, -0.2)) : 0.25);
      continue;
    }

    ++path.steps;
    for (std::size_t i = 0; i < s.size(); ++i) path.max_error = std::max(path.max_error, std::abs(err[i]));
    const double t_new = last ? t_end : t + h;
    while (next <= opt.samples && (sample_time(next) <= t_new || (next == opt.samples && last))) {
      const double ts = sample_time(next);
      if (next == opt.samples && last) {
        dense = s_new;
      } else {
        stepper.calc_state(ts, dense, s, ds, t, s_new, ds_new, t_new);
      }
      path.states.push_back(detail::unpack(ts, dense, n));
      ++next;
    }
    s.swap(s_new);
    ds.swap(ds_new);
    t = t_new;
    if (opt.confine && !detail::inside(m, s))
      throw IntegrationError("geodesic left the domain box at t = " + std::to_string(t));
    dt = h * (norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0));
  }

  for (const auto& st : path.states)
    path.length_drift =
        std::max(path.length_drift, std::abs(metric_length(m, SamplePoint{st.x, st.y}) - l0) / l0);
  return path;
}

/// One line per state: "t x1..xn y1..yn".
inline void write_path(std::ostream& out, const GeodesicPath& path) {
  char buf[32];
  for (const auto& st : path.states) {
    std::snprintf(buf, sizeof buf, "%.17g", st.t);
    out << buf;
    for (double v : st.x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    for (double v : st.y) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

/// Length of the path measured with the base metric (trapezoid rule).
inline double path_length(const MetricSpec& base, const GeodesicPath& path) {
  double s = 0.0;
  for (std::size_t k = 1; k < path.states.size(); ++k) {
    const auto& a = path.states[k - 1];
    const auto& b = path.states[k];
    s += 0.5 * (b.t - a.t) *
         (metric_length(base, SamplePoint{a.x, a.y}) + metric_length(base, SamplePoint{b.x, b.y}));
  }
  return s;
}

namespace detail {

inline double distance_to_polyline(const std::vector<double>& p, const std::vector<GeodesicState>& line) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = p.size();
  for (std::size_t k = 0; k + 1 < line.size(); ++k) {
    const auto& a = line[k].x;
    const auto& b = line[k + 1].x;
    double ab2 = 0.0, apab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ab2 += (b[i] - a[i]) * (b[i] - a[i]);
      apab += (p[i] - a[i]) * (b[i] - a[i]);
    }
    const double s = ab2 > 0.0 ? std::clamp(apab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = a[i] + s * (b[i] - a[i]) - p[i];
      d2 += c * c;
    }
    best = std::min(best, d2);
  }
  return std::sqrt(best);
}

}  // namespace detail

/// Largest distance from a state of the shorter path (in base arclength) to
/// the polyline through the other path.
inline double path_deviation(const MetricSpec& base, const GeodesicPath& a, const GeodesicPath& b) {
  const bool a_shorter = path_length(base, a) <= path_length(base, b);
  const GeodesicPath& shorter = a_shorter ? a : b;
  const GeodesicPath& longer = a_shorter ? b : a;
  double worst = 0.0;
  for (const auto& st : shorter.states) worst = std::max(worst, detail::distance_to_polyline(st.x, longer.states));
  return worst;
}

/// Point-set distance between the geodesics of base and changed through the
/// same initial data.
inline double projective_deviation(const MetricSpec& base, const MetricSpec& changed, std::span<const double> x0,
                                   std::span<const double> y0, double t_end, double tol,
                                   const GeodesicOptions& opt = {}) {
  const GeodesicPath a = integrate_geodesic(base, x0, y0, t_end, tol, opt);
  const GeodesicPath b = integrate_geodesic(changed, x0, y0, t_end, tol, opt);
  return path_deviation(base, a, b);
}

/// Integrate, then integrate back from the end point with reversed velocity.
inline double reverse_deviation(const MetricSpec& m, std::span<const double> x0, std::span<const double> y0,
                                double t_end, double tol, const GeodesicOptions& opt = {}) {
  const GeodesicPath forward = integrate_geodesic(m, x0, y0, t_end, tol, opt);
  const GeodesicState& end = forward.states.back();
  std::vector<double> back(end.y);
  for (double& v : back) v = -v;
  const GeodesicPath backward = integrate_geodesic(m, end.x, back, t_end, tol, opt);
  return path_deviation(m, forward, backward);
}

}  // namespace finsler
