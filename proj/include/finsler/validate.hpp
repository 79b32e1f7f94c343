#pragma once

/**
 * @file validate.hpp
 * @brief Statistical validation of parsed specs on raw (unrejected) draws
 * from their sampling domains.
 *
 * Records use suite "validate". A failing record names the first offending
 * sample point in its notes.
 */

#include <finsler/error.hpp>
#include <finsler/finsler_core.hpp>
#include <finsler/hypersurface.hpp>
#include <finsler/randers_change.hpp>
#include <finsler/report.hpp>
#include <finsler/sampling.hpp>
#include <finsler/spec_lang.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace finsler {

inline constexpr double kHomogeneityTolerance = 1e-10;
inline constexpr double kRankTolerance = 1e-10;

namespace detail {

inline std::string format_vector(const std::vector<double>& v) {
  std::ostringstream out;
  out.precision(6);
  out << '(';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ')';
  return out.str();
}

inline std::string describe(const SamplePoint& p) {
  return "x = " + format_vector(p.x) + ", y = " + format_vector(p.y);
}

/// Counts offending samples; max_rel is the offending fraction and the
/// tolerance is zero.
class Offenders {
 public:
  Offenders(std::string id, std::string identity) {
    rec_.id = std::move(id);
    rec_.suite = "validate";
    rec_.identity = std::move(identity);
  }

  void ok() { ++rec_.samples; }

  void offend(const std::string& where, const std::string& why) {
    ++rec_.samples;
    ++bad_;
    if (first_.empty()) first_ = "first offending point " + where + ": " + why;
  }

  CheckRecord record() const {
    CheckRecord r = rec_;
    r.max_abs = bad_;
    r.max_rel = r.samples ? static_cast<double>(bad_) / r.samples : 0.0;
    r.verdict = bad_ == 0 ? Verdict::pass : Verdict::fail;
    r.notes = first_;
    return r;
  }

 private:
  CheckRecord rec_;
  int bad_ = 0;
  std::string first_;
};

inline std::optional<std::string> irregular(const Tensor& g) {
  if (!g.all_finite()) return "g is not finite";
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_matrix(g));
  const auto& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) return "g is not positive definite (smallest eigenvalue " + std::to_string(ev.minCoeff()) + ")";
  if (ev.maxCoeff() / ev.minCoeff() > kMaxCondition) return "g is ill-conditioned";
  return std::nullopt;
}

}  // namespace detail

/// Homogeneity |L(x, ly) - l L(x, y)| for l in [0.5, 2], positivity of L,
/// regularity of g and, with a change, positivity of L* and regularity of g*.
inline std::vector<CheckRecord> validate_spec(const MetricSpec& m, int samples, std::uint64_t seed = 1,
                                              const ChangeSpec* change = nullptr) {
  detail::check_count(samples);
  if (change && change->dim != m.dim) throw ConfigError("change and metric dimensions differ");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lambda(0.5, 2.0);

  CheckRecord homogeneity;
  homogeneity.id = "validate.homogeneity";
  homogeneity.suite = "validate";
  homogeneity.identity = "L(x, l y) = l L(x, y), l in [0.5, 2]";
  homogeneity.tolerance = kHomogeneityTolerance;
  std::string first_inhomogeneous;
  detail::Offenders positive("validate.positivity", "L > 0");
  detail::Offenders regular("validate.invertibility", "g_ij positive definite and invertible");
  detail::Offenders positive_star("validate.changed_positivity", "L* = e^sigma L + beta > 0");
  detail::Offenders regular_star("validate.changed_invertibility", "g*_ij positive definite and invertible");
  const MetricSpec star = change ? changed_metric_spec(m, *change) : MetricSpec{};

  for (int s = 0; s < samples; ++s) {
    SamplePoint p;
    for (const auto& iv : m.domain.box) p.x.push_back(std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng));
    p.y = detail::random_direction(rng, m.dim, m.domain.radius);
    const double l = lambda(rng);
    const std::string where = detail::describe(p);

    try {
      const double base = metric_length(m, p);
      SamplePoint q = p;
      for (double& v : q.y) v *= l;
      const double scaled = metric_length(m, q);
      ++homogeneity.samples;
      const double rel = relative_error(scaled, l * base);
      homogeneity.max_abs = std::max(homogeneity.max_abs, std::abs(scaled - l * base));
      if (rel > homogeneity.max_rel) homogeneity.max_rel = rel;
      if (rel > homogeneity.tolerance && first_inhomogeneous.empty())
        first_inhomogeneous = "first offending point " + where + ", l = " + std::to_string(l);
      if (base > 0.0) {
        positive.ok();
      } else {
        positive.offend(where, "L = " + std::to_string(base));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      positive.offend(where, e.what());
    }

    try {
      if (auto why = detail::irregular(fundamental_tensor(m, p))) {
        regular.offend(where, *why);
      } else {
        regular.ok();
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      regular.offend(where, e.what());
    }

    if (!change) continue;
    try {
      const double ls = metric_length(star, p);
      if (ls > 0.0) {
        positive_star.ok();
      } else {
        positive_star.offend(where, "L* = " + std::to_string(ls));
      }
      if (auto why = detail::irregular(fundamental_tensor(star, p))) {
        regular_star.offend(where, *why);
      } else {
        regular_star.ok();
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      positive_star.offend(where, e.what());
    }
  }

  homogeneity.verdict = homogeneity.max_rel <= homogeneity.tolerance ? Verdict::pass : Verdict::fail;
  homogeneity.notes = first_inhomogeneous;
  std::vector<CheckRecord> out{homogeneity, positive.record(), regular.record()};
  if (change) {
    out.push_back(positive_star.record());
    out.push_back(regular_star.record());
  }
  return out;
}

/// Rank of B^i_a: smallest over largest singular value above 1e-10.
inline std::vector<CheckRecord> validate_spec(const HypersurfaceSpec& hs, const MetricSpec& m, int samples,
                                              std::uint64_t seed = 1) {
  detail::check_count(samples);
  if (hs.dim != m.dim) throw ConfigError("hypersurface and metric dimensions differ");
  std::mt19937_64 rng(seed);
  detail::Offenders rank("validate.rank", "B^i_a has rank n-1");
  for (int s = 0; s < samples; ++s) {
    HyperPoint q;
    for (const auto& iv : hs.domain.box) q.u.push_back(std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng));
    q.v = detail::random_direction(rng, hs.dim - 1, hs.domain.radius);
    const std::string where = "u = " + detail::format_vector(q.u);
    try {
      check_hypersurface(m, hs, q);
      const Embedding e = embed(hs, q);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.B);
      const auto& sv = svd.singularValues();
      if (sv.minCoeff() > kRankTolerance * sv.maxCoeff()) {
        rank.ok();
      } else {
        rank.offend(where, "singular values " + std::to_string(sv.maxCoeff()) + " .. " + std::to_string(sv.minCoeff()));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      rank.offend(where, e.what());
    }
  }
  return {rank.record()};
}

}  // namespace finsler
