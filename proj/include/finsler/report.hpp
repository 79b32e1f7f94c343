#pragma once

/**
 * @file report.hpp
 * @brief Check records, tolerance tables and report emitters (text tables and
 * JSON lines). Field names of the JSON records are documented in
 * docs/report-format.md.
 */

#include <finsler/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace finsler {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Verdict { pass, fail, reported_residual, skipped };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::reported_residual: return "reported-residual";
    case Verdict::skipped: return "skipped";
  }
  return "fail";
}

inline Verdict parse_verdict(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "reported-residual") return Verdict::reported_residual;
  if (s == "skipped") return Verdict::skipped;
  throw ConfigError("unknown verdict '" + s + "'");
}

struct CheckRecord {
  std::string id;
  std::string suite;
  std::string identity;           // the relation being checked
  bool standard_formula = false;  // textbook definition rather than a closed form of the change
  int samples = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::skipped;
  std::string notes;

  bool operator==(const CheckRecord&) const = default;
};

struct Environment {
  std::string tool = "finsler";
  std::string version = kToolVersion;
  std::string compiler;
  std::string eigen;
  std::string boost;
  std::string metric;
  std::string change;
  std::string hypersurface;
  std::uint64_t seed = 0;
  int samples = 0;
  std::string tolerance_profile = "default";
  std::vector<std::string> suites;

  bool operator==(const Environment&) const = default;
};

struct Tally {
  int pass = 0;
  int fail = 0;
  int reported_residual = 0;
  int skipped = 0;

  int total() const { return pass + fail + reported_residual + skipped; }
  bool operator==(const Tally&) const = default;
};

struct Report {
  Environment environment;
  std::vector<CheckRecord> checks;

  Tally tally() const {
    Tally t;
    for (const auto& c : checks) switch (c.verdict) {
        case Verdict::pass: ++t.pass; break;
        case Verdict::fail: ++t.fail; break;
        case Verdict::reported_residual: ++t.reported_residual; break;
        case Verdict::skipped: ++t.skipped; break;
      }
    return t;
  }

  /// 0 when every hard check passes, 1 otherwise.
  int exit_status() const { return tally().fail > 0 ? 1 : 0; }

  const CheckRecord* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Tolerances

class Tolerances {
 public:
  Tolerances() : values_(defaults()) {}

  static std::map<std::string, double> defaults() {
    return {
        {"exact", 1e-10},
        {"inverse", 1e-8},
        {"inverse_metric", 1e-11},
        {"fd", 1e-5},
        {"defect", 1e-12},
        {"collinear", 1e-8},
        {"frame", 1e-10},
        {"normal", 1e-9},
        {"connection", 1e-9},
        {"curvature_ratio", 1e-8},
        {"totally_geodesic", 1e-10},
        {"douglas_invariance", 1e-8},
        {"weyl_invariance", 1e-6},
        {"douglas_zero", 1e-9},
        {"weyl_zero", 1e-7},
        {"geodesic_deviation", 1e-5},
        {"drift", 1e-6},
        {"integrator", 1e-9},
        {"non_projective", 1e-3},
    };
  }

  /// default, strict (x0.1) or loose (x100). The integrator tolerance and the
  /// non-projective threshold are not scaled.
  static Tolerances profile(const std::string& name) {
    Tolerances t;
    double scale = 1.0;
    if (name == "strict") {
      scale = 0.1;
    } else if (name == "loose") {
      scale = 100.0;
    } else if (name != "default") {
      throw ConfigError("unknown tolerance profile '" + name + "' (expected default, strict or loose)");
    }
    for (auto& [key, value] : t.values_)
      if (key != "integrator" && key != "non_projective") value *= scale;
    return t;
  }

  /// Profile named by FINSLER_TOL_PROFILE, or the default profile.
  static std::string profile_from_environment() {
    const char* env = std::getenv("FINSLER_TOL_PROFILE");
    return env && *env ? env : "default";
  }

  double operator[](const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("unknown tolerance '" + name + "'");
    return it->second;
  }

  void set(const std::string& name, double value) {
    if (!values_.count(name)) throw ConfigError("unknown tolerance '" + name + "'");
    if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("tolerance '" + name + "' must be finite and >= 0");
    values_[name] = value;
  }

  /// Parse NAME=VALUE.
  void apply_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("tolerance override '" + text + "' is not NAME=VALUE");
    const std::string name = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw ConfigError("tolerance override '" + text + "' has a malformed value");
    set(name, v);
  }

  const std::map<std::string, double>& values() const noexcept { return values_; }

 private:
  std::map<std::string, double> values_;
};

// ---------------------------------------------------------------------------
// JSON lines

namespace detail {

inline nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
inline double number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const Environment& e) {
  return {{"record", "environment"},
          {"tool", e.tool},
          {"version", e.version},
          {"compiler", e.compiler},
          {"eigen", e.eigen},
          {"boost", e.boost},
          {"metric", e.metric},
          {"change", e.change},
          {"hypersurface", e.hypersurface},
          {"seed", e.seed},
          {"samples", e.samples},
          {"tolerance_profile", e.tolerance_profile},
          {"suites", e.suites}};
}

inline nlohmann::json to_json(const CheckRecord& c) {
  return {{"record", "check"},
          {"id", c.id},
          {"suite", c.suite},
          {"identity", c.identity},
          {"standard_formula", c.standard_formula},
          {"samples", c.samples},
          {"max_abs", detail::number(c.max_abs)},
          {"max_rel", detail::number(c.max_rel)},
          {"tolerance", c.tolerance},
          {"verdict", to_string(c.verdict)},
          {"notes", c.notes}};
}

inline nlohmann::json to_json(const Tally& t, int exit_status) {
  return {{"record", "summary"},
          {"checks", t.total()},
          {"pass", t.pass},
          {"fail", t.fail},
          {"reported_residual", t.reported_residual},
          {"skipped", t.skipped},
          {"exit_status", exit_status}};
}

/// One JSON object per line: environment, then checks, then the summary.
/// A report without checks is header-only.
inline void write_json_lines(std::ostream& out, const Report& r) {
  out << to_json(r.environment).dump() << '\n';
  if (r.checks.empty()) return;
  for (const auto& c : r.checks) out << to_json(c).dump() << '\n';
  out << to_json(r.tally(), r.exit_status()).dump() << '\n';
}

inline Report read_json_lines(std::istream& in) {
  Report r;
  std::string line;
  bool seen_environment = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("malformed report line: ") + ex.what());
    }
    const std::string kind = j.value("record", "");
    if (kind == "environment") {
      Environment& e = r.environment;
      e.tool = j.at("tool");
      e.version = j.at("version");
      e.compiler = j.at("compiler");
      e.eigen = j.at("eigen");
      e.boost = j.at("boost");
      e.metric = j.at("metric");
      e.change = j.at("change");
      e.hypersurface = j.at("hypersurface");
      e.seed = j.at("seed");
      e.samples = j.at("samples");
      e.tolerance_profile = j.at("tolerance_profile");
      e.suites = j.at("suites").get<std::vector<std::string>>();
      seen_environment = true;
    } else if (kind == "check") {
      CheckRecord c;
      c.id = j.at("id");
      c.suite = j.at("suite");
      c.identity = j.at("identity");
      c.standard_formula = j.at("standard_formula");
      c.samples = j.at("samples");
      c.max_abs = detail::number(j.at("max_abs"));
      c.max_rel = detail::number(j.at("max_rel"));
      c.tolerance = j.at("tolerance");
      c.verdict = parse_verdict(j.at("verdict"));
      c.notes = j.at("notes");
      r.checks.push_back(std::move(c));
    } else if (kind != "summary") {
      throw ConfigError("unknown report record '" + kind + "'");
    }
  }
  if (!seen_environment) throw ConfigError("report has no environment record");
  return r;
}

// ---------------------------------------------------------------------------
// Text

namespace detail {

inline std::string sci(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace detail

inline void write_text(std::ostream& out, const Report& r) {
  const Environment& e = r.environment;
  out << e.tool << ' ' << e.version << "  (" << e.compiler << ", Eigen " << e.eigen << ", Boost " << e.boost << ")\n";
  out << "metric        " << e.metric << '\n';
  out << "change        " << e.change << '\n';
  if (!e.hypersurface.empty()) out << "hypersurface  " << e.hypersurface << '\n';
  out << "seed " << e.seed << "  samples " << e.samples << "  tolerance profile " << e.tolerance_profile << '\n';
  out << "suites       ";
  for (const auto& s : e.suites) out << ' ' << s;
  out << '\n';
  if (r.checks.empty()) return;

  std::size_t id_width = 5;
  for (const auto& c : r.checks) id_width = std::max(id_width, c.id.size() + 2);
  out << '\n'
      << detail::pad("check", id_width) << detail::pad("verdict", 19) << detail::pad("n", 6)
      << detail::pad("max_abs", 11) << detail::pad("max_rel", 11) << "tol\n";
  std::string suite;
  for (const auto& c : r.checks) {
    if (c.suite != suite) {
      suite = c.suite;
      out << "[" << suite << "]\n";
    }
    out << detail::pad(c.id, id_width) << detail::pad(to_string(c.verdict), 19)
        << detail::pad(std::to_string(c.samples), 6) << detail::pad(detail::sci(c.max_abs), 11)
        << detail::pad(detail::sci(c.max_rel), 11) << detail::sci(c.tolerance) << '\n';
    out << "    " << c.identity << (c.standard_formula ? "  [standard]" : "") << '\n';
    if (!c.notes.empty()) out << "    note: " << c.notes << '\n';
  }
  const Tally t = r.tally();
  out << "\npass " << t.pass << "  fail " << t.fail << "  reported-residual " << t.reported_residual << "  skipped "
      << t.skipped << "  (" << t.total() << " checks)\n";
}

}  // namespace finsler
