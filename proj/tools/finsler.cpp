// finsler: verify identities of a Randers conformal change, integrate
// geodesics, and check spec files.
//
// Exit status: 0 all hard checks pass, 1 a check failed, 2 configuration or
// evaluation error.

#include <finsler/error.hpp>
#include <finsler/geodesics.hpp>
#include <finsler/harness.hpp>
#include <finsler/report.hpp>
#include <finsler/spec_lang.hpp>
#include <finsler/validate.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;

struct VerifyArgs {
  std::string metric, change, hypersurface, report = "-", format = "text";
  int samples = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> tol, suites;
  bool no_suites = false;
};

struct GeodesicArgs {
  std::string metric, output = "-";
  std::vector<double> x0, y0;
  double t_end = 10.0, tol = 1e-9;
  int samples = 2000;
  bool free = false;
};

struct ParseArgs {
  std::string file, metric;
  int samples = 100;
  std::uint64_t seed = 1;
  bool print = false;
};

template <class Emit>
void write_to(const std::string& path, Emit&& emit) {
  if (path == "-") {
    emit(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw finsler::ConfigError("cannot open '" + path + "' for writing");
  emit(out);
  out.flush();
  if (!out) throw finsler::ConfigError("write to '" + path + "' failed");
}

int verify(const VerifyArgs& a) {
  finsler::SuiteConfig cfg;
  cfg.metric_path = a.metric;
  cfg.change_path = a.change;
  cfg.hypersurface_path = a.hypersurface;
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  cfg.tolerance_profile = finsler::Tolerances::profile_from_environment();
  cfg.tolerances = finsler::Tolerances::profile(cfg.tolerance_profile);
  for (const auto& t : a.tol) cfg.tolerances.apply_override(t);
  if (a.no_suites) {
    cfg.suites.clear();
  } else if (!a.suites.empty()) {
    cfg.suites.clear();
    for (const auto& s : a.suites) cfg.suites.push_back(finsler::parse_suite(s));
  }
  if (cfg.samples < 1) throw finsler::ConfigError("sample count must be at least 1");

  const finsler::Report report = finsler::run_suites(cfg);
  write_to(a.report, [&](std::ostream& out) {
    if (a.format == "json-lines") {
      finsler::write_json_lines(out, report);
    } else {
      finsler::write_text(out, report);
    }
  });
  if (a.report != "-") {
    const finsler::Tally t = report.tally();
    std::cerr << "pass " << t.pass << "  fail " << t.fail << "  reported-residual " << t.reported_residual
              << "  skipped " << t.skipped << "\n";
  }
  return report.exit_status();
}

int geodesic(const GeodesicArgs& a) {
  const auto spec = finsler::load_spec(a.metric);
  if (!std::holds_alternative<finsler::MetricSpec>(spec)) throw finsler::ConfigError(a.metric + ": not a metric spec");
  finsler::GeodesicOptions opt;
  opt.samples = a.samples;
  opt.confine = !a.free;
  const auto path = finsler::integrate_geodesic(std::get<finsler::MetricSpec>(spec), a.x0, a.y0, a.t_end, a.tol, opt);
  write_to(a.output, [&](std::ostream& out) { finsler::write_path(out, path); });
  std::cerr << "steps " << path.steps << "  rejected " << path.rejected << "  length drift " << path.length_drift
            << "\n";
  return 0;
}

int parse(const ParseArgs& a) {
  const finsler::Spec spec = finsler::load_spec(a.file);
  if (a.print) std::cout << finsler::print_spec(spec);

  std::vector<finsler::CheckRecord> records;
  if (const auto* m = std::get_if<finsler::MetricSpec>(&spec)) {
    records = finsler::validate_spec(*m, a.samples, a.seed);
  } else if (!a.metric.empty()) {
    const auto base = finsler::load_spec(a.metric);
    const auto* m = std::get_if<finsler::MetricSpec>(&base);
    if (!m) throw finsler::ConfigError(a.metric + ": not a metric spec");
    if (const auto* c = std::get_if<finsler::ChangeSpec>(&spec)) records = finsler::validate_spec(*m, a.samples, a.seed, c);
    if (const auto* h = std::get_if<finsler::HypersurfaceSpec>(&spec))
      records = finsler::validate_spec(*h, *m, a.samples, a.seed);
  }

  int status = 0;
  for (const auto& r : records) {
    std::cout << r.id << "  " << finsler::to_string(r.verdict) << "  " << r.samples << " samples";
    if (!r.notes.empty()) std::cout << "  " << r.notes;
    std::cout << '\n';
    if (r.verdict == finsler::Verdict::fail) status = 1;
  }
  std::cout << a.file << ": " << (status ? "invalid" : "ok") << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler geometry toolkit for Randers conformal changes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", finsler::kToolVersion);

  VerifyArgs v;
  auto* verify_cmd = app.add_subcommand("verify", "run verification suites and write a report");
  verify_cmd->add_option("--metric", v.metric, "metric spec file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--change", v.change, "change spec file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--hypersurface", v.hypersurface, "hypersurface spec file")->check(CLI::ExistingFile);
  verify_cmd->add_option("--samples", v.samples, "sample points per suite")->capture_default_str();
  verify_cmd->add_option("--seed", v.seed, "sampling seed")->capture_default_str();
  verify_cmd->add_option("--tol", v.tol, "tolerance override NAME=VALUE")->take_all();
  verify_cmd->add_option("--suite", v.suites, "suite to run (default: all)")->take_all();
  verify_cmd->add_flag("--no-suites", v.no_suites, "run no suites (header-only report)");
  verify_cmd->add_option("--report", v.report, "report path, - for stdout")->capture_default_str();
  verify_cmd->add_option("--format", v.format, "report format")
      ->check(CLI::IsMember({"text", "json-lines"}))
      ->capture_default_str();

  GeodesicArgs g;
  auto* geodesic_cmd = app.add_subcommand("geodesic", "integrate a geodesic and print the path");
  geodesic_cmd->add_option("--metric", g.metric, "metric spec file")->required()->check(CLI::ExistingFile);
  geodesic_cmd->add_option("--x0", g.x0, "initial position")->required()->expected(1, finsler::kMaxDimension);
  geodesic_cmd->add_option("--y0", g.y0, "initial velocity")->required()->expected(1, finsler::kMaxDimension);
  geodesic_cmd->add_option("--t-end", g.t_end, "final time")->capture_default_str();
  geodesic_cmd->add_option("--tol", g.tol, "integrator tolerance")->capture_default_str();
  geodesic_cmd->add_option("--points", g.samples, "output samples")->capture_default_str();
  geodesic_cmd->add_option("--output", g.output, "path file, - for stdout")->capture_default_str();
  geodesic_cmd->add_flag("--free", g.free, "do not stop at the sampling box");

  ParseArgs p;
  auto* parse_cmd = app.add_subcommand("parse", "parse and validate a spec file");
  parse_cmd->add_option("--check", p.file, "spec file")->required()->check(CLI::ExistingFile);
  parse_cmd->add_option("--metric", p.metric, "base metric for change and hypersurface specs")
      ->check(CLI::ExistingFile);
  parse_cmd->add_option("--samples", p.samples, "validation samples")->capture_default_str();
  parse_cmd->add_option("--seed", p.seed, "validation seed")->capture_default_str();
  parse_cmd->add_flag("--print", p.print, "print the normalized spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*verify_cmd) return verify(v);
    if (*geodesic_cmd) return geodesic(g);
    if (*parse_cmd) return parse(p);
  } catch (const finsler::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
