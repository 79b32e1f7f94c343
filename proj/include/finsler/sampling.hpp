#pragma once

/**
 * @file sampling.hpp
 * @brief Seeded sample points in a spec's domain, rejecting points where the
 * base or changed metric is not positive or not regular.
 */

#include <finsler/error.hpp>
#include <finsler/finsler_core.hpp>
#include <finsler/hypersurface.hpp>
#include <finsler/randers_change.hpp>
#include <finsler/spec_lang.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace finsler {

struct SamplingStats {
  int accepted = 0;
  int rejected = 0;
  std::string first_rejection;  // reason for the first rejected draw
};

inline constexpr double kMaxCondition = 1e10;

/// Why p is unusable, or nullopt. Checks L > 0 and a positive definite,
/// well-conditioned g, and the same for L* when a change is given.
inline std::optional<std::string> point_rejection(const MetricSpec& m, const ChangeSpec* change, const SamplePoint& p) {
  const auto regular = [](const Tensor& g) -> std::optional<std::string> {
    if (!g.all_finite()) return "g is not finite";
    const Eigen::MatrixXd gm = detail::to_matrix(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gm);
    const auto& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 0.0)) return "g is not positive definite";
    if (ev.maxCoeff() / ev.minCoeff() > kMaxCondition) return "g is ill-conditioned";
    return std::nullopt;
  };
  try {
    const double l = metric_length(m, p);
    if (!(l > 0.0)) return "L <= 0";
    if (auto why = regular(fundamental_tensor(m, p))) return why;
    if (change) {
      const MetricSpec star = changed_metric_spec(m, *change);
      const double ls = metric_length(star, p);
      if (!(ls > 0.0)) return "L* <= 0";
      if (auto why = regular(fundamental_tensor(star, p))) return "changed space: " + *why;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    return e.what();
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<double> random_direction(std::mt19937_64& rng, int n, const Interval& radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> r(radius.lo, radius.hi);
  std::vector<double> y(static_cast<std::size_t>(n));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : y) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  const double scale = r(rng) / std::sqrt(norm);
  for (double& v : y) v *= scale;
  return y;
}

inline void check_count(int count) {
  if (count < 1) throw ConfigError("sample count must be at least 1");
}

inline void too_tight(const SamplingStats& s) {
  throw DomainError("sampling domain too tight: " + std::to_string(s.rejected) + " of " +
                    std::to_string(s.rejected + s.accepted) + " draws rejected (first: " + s.first_rejection + ")");
}

}  // namespace detail

/// x uniform in the box, y uniform in direction with |y| uniform in the
/// radius interval. Deterministic in seed.
inline std::vector<SamplePoint> sample_points(const MetricSpec& m, int count, std::uint64_t seed,
                                              const ChangeSpec* change = nullptr, SamplingStats* stats = nullptr) {
  detail::check_count(count);
  std::mt19937_64 rng(seed);
  SamplingStats local;
  SamplingStats& s = stats ? *stats : local;
  s = {};
  std::vector<SamplePoint> out;
  const long max_draws = 100L * count;
  while (static_cast<int>(out.size()) < count) {
    if (s.accepted + s.rejected >= max_draws) detail::too_tight(s);
    SamplePoint p;
    for (const auto& iv : m.domain.box) p.x.push_back(std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng));
    p.y = detail::random_direction(rng, m.dim, m.domain.radius);
    if (auto why = point_rejection(m, change, p)) {
      if (s.rejected++ == 0) s.first_rejection = *why;
      continue;
    }
    ++s.accepted;
    out.push_back(std::move(p));
  }
  return out;
}

/// Points (u, v) on a hypersurface, rejecting rank-deficient or non-positive
/// induced points.
inline std::vector<HyperPoint> sample_hyperpoints(const HypersurfaceSpec& hs, const MetricSpec& m, int count,
                                                  std::uint64_t seed, const ChangeSpec* change = nullptr,
                                                  SamplingStats* stats = nullptr) {
  detail::check_count(count);
  std::mt19937_64 rng(seed);
  SamplingStats local;
  SamplingStats& s = stats ? *stats : local;
  s = {};
  std::vector<HyperPoint> out;
  const long max_draws = 100L * count;
  while (static_cast<int>(out.size()) < count) {
    if (s.accepted + s.rejected >= max_draws) detail::too_tight(s);
    HyperPoint q;
    for (const auto& iv : hs.domain.box) q.u.push_back(std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng));
    q.v = detail::random_direction(rng, hs.dim - 1, hs.domain.radius);
    std::optional<std::string> why;
    try {
      check_hypersurface(m, hs, q);
      why = point_rejection(m, change, embed(hs, q).point());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      why = e.what();
    }
    if (why) {
      if (s.rejected++ == 0) s.first_rejection = *why;
      continue;
    }
    ++s.accepted;
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace finsler
