// Acceptance battery: one PASS/FAIL line per criterion at fixed tolerances.
// Tolerances are the default table regardless of FINSLER_TOL_PROFILE.

#include <finsler/harness.hpp>
#include <finsler/report.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace finsler;

namespace {

const std::string kSpecs = FINSLER_SPEC_DIR;

SuiteConfig config(const std::string& metric, const std::string& change, const std::string& hyper,
                   std::vector<Suite> suites) {
  SuiteConfig c;
  c.metric_path = kSpecs + "/metrics/" + metric + ".metric";
  c.change_path = kSpecs + "/changes/" + change + ".change";
  if (!hyper.empty()) c.hypersurface_path = kSpecs + "/hypersurfaces/" + hyper + ".hyper";
  c.samples = 100;
  c.seed = 1;
  c.suites = std::move(suites);
  return c;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

class Criterion {
 public:
  explicit Criterion(int number) : number_(number) {}

  void require(bool ok, const std::string& what) {
    ++checked_;
    if (!ok) {
      ok_ = false;
      if (first_.empty()) first_ = what;
    }
  }

  /// Record present, not skipped, hard verdict pass and value within tol.
  void hard(const Report& r, const std::string& label, const std::string& id, double tol, bool absolute = false) {
    const CheckRecord* c = r.find(id);
    if (!c) return require(false, label + ": " + id + " missing");
    const double v = absolute ? c->max_abs : c->max_rel;
    worst_ = std::max(worst_, v / (tol > 0.0 ? tol : 1.0));
    require(c->verdict == Verdict::pass && v <= tol, label + ": " + id + " " + to_string(c->verdict) + " " + sci(v) +
                                                         " > " + sci(tol));
  }

  /// Record present with the expected verdict.
  void verdict(const Report& r, const std::string& label, const std::string& id, Verdict expected) {
    const CheckRecord* c = r.find(id);
    if (!c) return require(false, label + ": " + id + " missing");
    require(c->verdict == expected, label + ": " + id + " is " + to_string(c->verdict) + ", expected " +
                                        to_string(expected));
  }

  /// Value of a non-skipped record within tol, whatever its verdict class.
  void value(const Report& r, const std::string& label, const std::string& id, double tol, bool absolute = true) {
    const CheckRecord* c = r.find(id);
    if (!c) return require(false, label + ": " + id + " missing");
    const double v = absolute ? c->max_abs : c->max_rel;
    worst_ = std::max(worst_, v / (tol > 0.0 ? tol : 1.0));
    require(c->verdict != Verdict::skipped && c->verdict != Verdict::fail && v <= tol,
            label + ": " + id + " " + to_string(c->verdict) + " " + sci(v) + " > " + sci(tol));
  }

  bool print(const std::string& title) const {
    std::cout << "criterion " << number_ << ": " << (ok_ ? "PASS" : "FAIL") << "  " << title << "  (" << checked_
              << " assertions, worst value/tol " << sci(worst_) << ")";
    if (!ok_) std::cout << "  first failure: " << first_;
    std::cout << std::endl;
    return ok_;
  }

 private:
  int number_;
  bool ok_ = true;
  int checked_ = 0;
  double worst_ = 0.0;
  std::string first_;
};

std::string json(const Report& r) {
  std::ostringstream out;
  write_json_lines(out, r);
  const std::string s = out.str();
  return s.substr(s.find('\n') + 1);
}

Report run(const SuiteConfig& c, Criterion& crit, const std::string& label) {
  try {
    return run_suites(c);
  } catch (const Error& e) {
    crit.require(false, label + ": " + e.what());
    return {};
  }
}

}  // namespace

int main() {
  bool all = true;
  const std::vector<std::string> metrics{"euclidean2", "euclidean3", "minkowski2", "polar2",  "randers2",
                                         "randers3",   "sphere2",    "sphere3",    "warped3"};
  const auto identity_for = [](const std::string& m) { return m.back() == '3' ? "identity3" : "identity2"; };

  // 1 and 7 share the core runs
  Criterion c1(1), c7(7);
  for (const auto& m : metrics) {
    SuiteConfig cfg = config(m, identity_for(m), "", {Suite::core});
    const Report r = run(cfg, c1, m);
    for (const char* id : {"core.euler.length", "core.euler.energy", "core.euler.angular", "core.euler.cartan",
                           "core.euler.a", "core.euler.connection"})
      c1.hard(r, m, id, 1e-10);
    for (const char* id : {"fd.support", "fd.fundamental", "fd.cartan", "fd.spray", "fd.nonlinear", "fd.berwald",
                           "fd.cartan_connection", "fd.riemann", "fd.douglas", "fd.weyl_curvature", "fd.weyl"}) {
      c7.hard(r, m, id, 1e-5);
      if (const CheckRecord* c = r.find(id)) c7.require(c->samples >= 3, m + ": " + id + " has fewer than 3 components");
    }
  }
  all &= c1.print("Euler and homogeneity identities on every bundled metric");

  // 2 two-path closed forms
  Criterion c2(2);
  const std::vector<std::pair<std::string, std::string>> two_path{
      {"euclidean2", "randers_closed2"}, {"randers2", "randers2"},     {"sphere2", "randers_open2"},
      {"randers2", "generic2"},          {"randers3", "generic3"},     {"sphere2", "conformal2"},
      {"randers3", "conformal3"},        {"minkowski2", "homothety2"}, {"warped3", "homothety3"}};
  for (const auto& [m, ch] : two_path) {
    const std::string label = m + "+" + ch;
    const Report r = run(config(m, ch, "", {Suite::change}), c2, label);
    for (const char* id : {"change.support", "change.angular", "change.fundamental", "change.cartan"})
      c2.hard(r, label, id, 1e-10);
    c2.hard(r, label, "change.inverse.oracle", 1e-8);
    c2.verdict(r, label, "change.inverse.closed_form", Verdict::reported_residual);
    c2.verdict(r, label, "change.cartan_mixed", Verdict::reported_residual);
  }
  all &= c2.print("closed forms agree with the changed-space oracle; inverse and mixed Cartan reported");

  // 3 reductions
  Criterion c3(3);
  {
    const Report conf = run(config("randers2", "conformal2", "", {Suite::change}), c3, "conformal2");
    c3.hard(conf, "conformal2", "reduce.conformal", 1e-10);
    const Report hom = run(config("sphere3", "homothety3", "", {Suite::change}), c3, "homothety3");
    c3.hard(hom, "homothety3", "reduce.conformal", 1e-10);
    const Report rand = run(config("sphere2", "randers_open2", "", {Suite::change}), c3, "randers_open2");
    c3.hard(rand, "randers_open2", "reduce.randers", 1e-10);
    const Report rand2 = run(config("randers2", "randers2", "", {Suite::change}), c3, "randers2");
    c3.hard(rand2, "randers2", "reduce.randers", 1e-10);
    for (const auto& m : {std::string("randers2"), std::string("warped3")}) {
      const Report id = run(config(m, identity_for(m), "", {Suite::change}), c3, m + "+identity");
      c3.hard(id, m + "+identity", "reduce.identity", 0.0, true);
    }
  }
  all &= c3.print("conformal, Randers and identity reductions");

  // 4 projectivity
  Criterion c4(4);
  for (const auto& [m, ch] : std::vector<std::pair<std::string, std::string>>{{"euclidean2", "randers_closed2"},
                                                                                {"euclidean3", "randers_closed3"}}) {
    const std::string label = m + "+" + ch;
    const Report r = run(config(m, ch, "", {Suite::projectivity, Suite::geodesics}), c4, label);
    c4.value(r, label, "proj.defect", 1e-12);
    if (const CheckRecord* c = r.find("proj.defect"))
      c4.require(c->notes.find("verdict: projective") != std::string::npos, label + ": not classified projective");
    c4.hard(r, label, "proj.collinear", 1e-8);
    c4.hard(r, label, "geo.deviation", 1e-5, true);
    if (const CheckRecord* c = r.find("geo.deviation"))
      c4.require(c->samples >= 10, label + ": fewer than 10 initial conditions");
  }
  for (const auto& [m, ch] : std::vector<std::pair<std::string, std::string>>{{"euclidean2", "conformal2"},
                                                                                {"euclidean3", "conformal3"}}) {
    const std::string label = m + "+" + ch;
    const Report r = run(config(m, ch, "", {Suite::projectivity}), c4, label);
    const CheckRecord* d = r.find("proj.defect");
    c4.require(d && d->max_abs > 1e-3, label + ": defect not above 1e-3");
    c4.require(d && d->notes.find("not projective") != std::string::npos, label + ": not classified non-projective");
    c4.verdict(r, label, "proj.discriminating", Verdict::pass);
    c4.verdict(r, label, "proj.collinear", Verdict::skipped);
  }
  all &= c4.print("projective Randers changes: defect, collinearity, geodesics; non-constant sigma rejected");

  // 5 hypersurfaces
  Criterion c5(5);
  for (const auto& [m, ch, h] : std::vector<std::tuple<std::string, std::string, std::string>>{
           {"euclidean2", "circle_tangent2", "circle2"},
           {"euclidean3", "randers_tangent3", "plane3"},
           {"sphere3", "randers_tangent3", "plane3"}}) {
    const std::string label = m + "+" + ch + "+" + h;
    const Report r = run(config(m, ch, h, {Suite::hypersurface}), c5, label);
    c5.hard(r, label, "hyper.frame.base", 1e-10);
    c5.hard(r, label, "hyper.frame.changed", 1e-10);
    c5.hard(r, label, "hyper.norm_identity", 1e-10);
    c5.hard(r, label, "hyper.normal_closed", 1e-9);
    c5.hard(r, label, "hyper.lower_closed", 1e-9);
    c5.hard(r, label, "hyper.curvature_ratio", 1e-8);
    c5.hard(r, label, "hyper.connection", 1e-8);
    c5.verdict(r, label, "hyper.totally_geodesic", Verdict::pass);
  }
  for (const auto& m : {std::string("euclidean3"), std::string("sphere3")}) {
    const std::string label = m + "+randers_tangent3+plane3";
    const Report r = run(config(m, "randers_tangent3", "plane3", {Suite::hypersurface}), c5, label);
    c5.hard(r, label, "hyper.totally_geodesic", 1e-10, true);
    if (const CheckRecord* c = r.find("hyper.totally_geodesic"))
      c5.require(c->notes.find("totally geodesic in both") != std::string::npos, label + ": hyperplane not totally geodesic");
  }
  all &= c5.print("hypersurface frames, changed normals and normal curvature");

  // 6 projective invariants
  Criterion c6(6);
  for (const auto& [m, ch] : std::vector<std::pair<std::string, std::string>>{{"euclidean2", "randers_closed2"},
                                                                                {"euclidean3", "randers_closed3"},
                                                                                {"sphere2", "randers_closed2"},
                                                                                {"sphere3", "randers_closed3"}}) {
    const std::string label = m + "+" + ch;
    const Report r = run(config(m, ch, "", {Suite::invariants}), c6, label);
    c6.hard(r, label, "inv.douglas", 1e-8, true);
    c6.hard(r, label, "inv.weyl", 1e-6, true);
    c6.hard(r, label, "inv.douglas_zero", 1e-9, true);
    c6.value(r, label, "inv.weyl_zero", 1e-7);
  }
  {
    const Report polar = run(config("polar2", "identity2", "", {Suite::invariants}), c6, "polar2");
    c6.hard(polar, "polar2", "inv.douglas_zero", 1e-9, true);
    c6.value(polar, "polar2", "inv.weyl_zero", 1e-7);
    // non-constant curvature: D = 0 but W is visibly nonzero
    const Report warped = run(config("warped3", "identity3", "", {Suite::invariants}), c6, "warped3");
    c6.hard(warped, "warped3", "inv.douglas_zero", 1e-9, true);
    const CheckRecord* w = warped.find("inv.weyl_zero");
    c6.require(w && w->max_abs > 1e-3, "warped3: W not detected");
  }
  all &= c6.print("Douglas and Weyl invariance; D = 0 on Riemannian, W = 0 on flat and round bases");

  all &= c7.print("tensor families against central finite differences");

  // 8 determinism
  Criterion c8(8);
  for (const auto& [m, ch, h] : std::vector<std::tuple<std::string, std::string, std::string>>{
           {"euclidean2", "circle_tangent2", "circle2"}, {"randers3", "generic3", "plane3"}}) {
    const std::string label = m + "+" + ch;
    SuiteConfig cfg = config(m, ch, h, {kAllSuites.begin(), kAllSuites.end()});
    const std::string a = json(run(cfg, c8, label));
    const std::string b = json(run(cfg, c8, label));
    c8.require(!a.empty() && a == b, label + ": reports differ");
  }
  all &= c8.print("same seed reproduces the structured report byte for byte");

  return all ? 0 : 1;
}
