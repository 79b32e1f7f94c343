#include <finsler/finsler_core.hpp>
#include <finsler/hypersurface.hpp>
#include <finsler/randers_change.hpp>
#include <finsler/spec_lang.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

using namespace finsler;

namespace {

template <class T>
T load(const std::string& rel) {
  return std::get<T>(load_spec(std::string(FINSLER_SPEC_DIR) + "/" + rel));
}
MetricSpec metric(const std::string& name) { return load<MetricSpec>("metrics/" + name + ".metric"); }
ChangeSpec change(const std::string& name) { return load<ChangeSpec>("changes/" + name + ".change"); }
HypersurfaceSpec hyper(const std::string& name) { return load<HypersurfaceSpec>("hypersurfaces/" + name + ".hyper"); }

std::vector<HyperPoint> hyper_points(int k, int count, unsigned seed, double lo = -0.8, double hi = 0.8) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi), v(0.5, 1.5);
  std::vector<HyperPoint> out;
  for (int s = 0; s < count; ++s) {
    HyperPoint q;
    for (int a = 0; a < k; ++a) {
      q.u.push_back(u(rng));
      q.v.push_back(v(rng) * (a % 2 ? -1.0 : 1.0));
    }
    out.push_back(q);
  }
  return out;
}

TEST(Embedding, CircleDerivatives) {
  const Embedding e = embed(hyper("circle2"), HyperPoint{{0.4}, {2.0}});
  EXPECT_DOUBLE_EQ(e.x[0], std::cos(0.4));
  EXPECT_NEAR(e.B(0, 0), -std::sin(0.4), 1e-15);
  EXPECT_NEAR(e.B2[1](0, 0), -std::sin(0.4), 1e-15);
  EXPECT_NEAR(e.y[1], 2.0 * std::cos(0.4), 1e-15);
}

TEST(Frame, CircleOutwardNormal) {
  const MetricSpec m = metric("euclidean2");
  const HypersurfaceSpec hs = hyper("circle2");
  for (double u : {-2.5, -0.3, 0.0, 1.0, 2.9}) {
    const Frame f = frame(m, hs, HyperPoint{{u}, {1.0}});
    EXPECT_NEAR(f.normal(0), std::cos(u), 1e-14);
    EXPECT_NEAR(f.normal(1), std::sin(u), 1e-14);
  }
}

TEST(Frame, OrientVectorAndFallback) {
  const MetricSpec m = metric("randers2");
  const Frame f = frame(m, hyper("line2"), HyperPoint{{0.3}, {-1.0}});
  EXPECT_GT(f.normal(1), 0.0);

  HypersurfaceSpec bare = hyper("line2");
  bare.orient.reset();
  const Frame g = frame(m, bare, HyperPoint{{0.3}, {-1.0}});
  for (int i = 0; i < 2; ++i) EXPECT_EQ(g.normal(i), f.normal(i));
}

struct Case {
  const char* metric;
  const char* hyper;
};

class FrameRelations : public ::testing::TestWithParam<Case> {};

TEST_P(FrameRelations, HoldToRoundoff) {
  const MetricSpec m = metric(GetParam().metric);
  const HypersurfaceSpec hs = hyper(GetParam().hyper);
  for (const auto& q : hyper_points(hs.dim - 1, 20, 11)) {
    const Embedding e = embed(hs, q);
    const Tensor g = fundamental_tensor(m, e.point());
    const FrameResiduals r = frame_residuals(frame(hs, e, g), g);
    EXPECT_LE(r.orthogonality, 1e-12);
    EXPECT_LE(r.unit, 1e-12);
    EXPECT_LE(r.duality, 1e-12);
    EXPECT_LE(r.tangency, 1e-12);
    EXPECT_LE(r.normal_dual, 1e-12);
    EXPECT_LE(r.completeness, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Bundled, FrameRelations,
                         ::testing::Values(Case{"euclidean2", "circle2"}, Case{"randers2", "circle2"},
                                           Case{"sphere2", "line2"}, Case{"minkowski2", "circle2"},
                                           Case{"randers3", "plane3"}, Case{"warped3", "plane3"}));

TEST(NormalCurvature, CircleHasUnitCurvature) {
  const MetricSpec m = metric("euclidean2");
  for (double v : {1.0, 0.5, -2.0}) {
    const Eigen::VectorXd h = normal_curvature(m, hyper("circle2"), HyperPoint{{0.7}, {v}});
    EXPECT_NEAR(h(0), -v, 1e-14);
  }
}

TEST(NormalCurvature, TotallyGeodesicExamples) {
  for (const auto& q : hyper_points(2, 5, 12))
    EXPECT_EQ(normal_curvature(metric("euclidean3"), hyper("plane3"), q).cwiseAbs().maxCoeff(), 0.0);
  for (const auto& q : hyper_points(1, 5, 13))
    EXPECT_LE(normal_curvature(metric("sphere2"), hyper("line2"), q).cwiseAbs().maxCoeff(), 1e-13);
  for (const auto& q : hyper_points(2, 5, 14))
    EXPECT_LE(normal_curvature(metric("sphere3"), hyper("plane3"), q).cwiseAbs().maxCoeff(), 1e-13);
}

// For a curve, N^i_j y^j = 2 G^i turns H into the geodesic residual of x(u).
TEST(NormalCurvature, CurveMatchesSprayResidual) {
  const MetricSpec m = metric("randers2");
  const HypersurfaceSpec hs = hyper("circle2");
  for (const auto& q : hyper_points(1, 10, 15)) {
    const Embedding e = embed(hs, q);
    const Frame f = frame(m, hs, q);
    const Tensor g = spray(m, e.point());
    const double v = q.v[0];
    double expected = 0.0;
    for (int i = 0; i < 2; ++i) expected += f.normal_lower(i) * (v * v * e.B2[static_cast<std::size_t>(i)](0, 0) + 2.0 * g(i));
    EXPECT_NEAR(normal_curvature(m, hs, q)(0) * v, expected, 1e-12);
  }
}

TEST(ChangedFrame, IdentityKeepsNormal) {
  const MetricSpec m = metric("randers2");
  const ChangedFrame cf = changed_frame(m, change("identity2"), hyper("circle2"), HyperPoint{{1.1}, {0.8}});
  EXPECT_EQ(cf.tau, 1.0);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(cf.oracle.normal(i), cf.base.normal(i));
  EXPECT_EQ(cf.normal_residual, 0.0);
}

TEST(ChangedFrame, TangentialOneForm) {
  const MetricSpec m = metric("euclidean2");
  for (const auto& q : hyper_points(1, 20, 16, -3.0, 3.0)) {
    const ChangedFrame cf = changed_frame(m, change("circle_tangent2"), hyper("circle2"), q);
    EXPECT_LE(std::abs(cf.bN), 1e-15);
    EXPECT_LE(cf.normal_residual, 1e-9);
    EXPECT_LE(cf.lower_residual, 1e-9);
    EXPECT_LE(cf.unit_residual, 1e-10);
    EXPECT_LE(cf.norm_identity, 1e-10);
  }
}

TEST(ChangedFrame, TransversalOneFormBreaksClosedForm) {
  const MetricSpec m = metric("euclidean2");
  const ChangedFrame cf = changed_frame(m, change("randers2"), hyper("circle2"), HyperPoint{{0.2}, {1.0}});
  EXPECT_GT(std::abs(cf.bN), 1e-3);
  EXPECT_GT(cf.normal_residual, 1e-4);
  EXPECT_LE(cf.unit_residual, 1e-12);
  EXPECT_LE(cf.norm_identity, 1e-12);
}

TEST(ChangedNormalCurvature, CircleRatioLaw) {
  const MetricSpec m = metric("euclidean2");
  for (const auto& q : hyper_points(1, 20, 17, -3.0, 3.0)) {
    const ChangedCurvature cc = changed_normal_curvature(m, change("circle_tangent2"), hyper("circle2"), q);
    EXPECT_GT(std::abs(cc.H(0)), 0.1);
    EXPECT_LE(cc.ratio_residual, 1e-8);
    EXPECT_LE(cc.connection_residual, 1e-8);
    EXPECT_NEAR(cc.H_star(0) / cc.H(0), std::sqrt(cc.tau), 1e-8);
  }
}

TEST(ChangedNormalCurvature, HyperplaneStaysTotallyGeodesic) {
  const MetricSpec m = metric("euclidean3");
  for (const auto& q : hyper_points(2, 10, 18)) {
    const ChangedCurvature cc = changed_normal_curvature(m, change("randers_closed3"), hyper("plane3"), q);
    EXPECT_LE(cc.H.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(cc.H_star.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ChangedNormalCurvature, IdentityIsExact) {
  const ChangedCurvature cc =
      changed_normal_curvature(metric("randers2"), change("identity2"), hyper("circle2"), HyperPoint{{0.5}, {1.3}});
  EXPECT_EQ(cc.H_star(0), cc.H(0));
}

TEST(ChangedNormalCurvature, NonProjectiveIsRejected) {
  EXPECT_THROW(changed_normal_curvature(metric("euclidean2"), change("conformal2"), hyper("circle2"),
                                        HyperPoint{{0.5}, {1.0}}),
               PreconditionError);
}

TEST(Errors, DimensionAndRank) {
  EXPECT_THROW(frame(metric("euclidean3"), hyper("circle2"), HyperPoint{{0.1}, {1.0}}), ConfigError);
  EXPECT_THROW(frame(metric("euclidean2"), hyper("circle2"), HyperPoint{{0.1, 0.2}, {1.0, 1.0}}), ConfigError);
  const HypersurfaceSpec flat = parse_hypersurface("dim 2; x1 = 1; x2 = 2");
  EXPECT_THROW(frame(metric("euclidean2"), flat, HyperPoint{{0.1}, {1.0}}), DomainError);
}

}  // namespace
