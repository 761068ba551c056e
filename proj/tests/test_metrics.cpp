#include <numbers>

#include "test_util.hpp"

using namespace symmetria;

namespace {

PlaneCoefficients plane(double x, double y, double z, double d) { return {Vec3(x, y, z), d}; }

Vec3 rotate(const Vec3& v, const Vec3& axis, double deg) {
  return Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, axis.normalized()) * v;
}

// Distance from p to the surface of the axis-aligned cube [-h, h]^3.
double cube_surface_distance(const Vec3& p, double h) {
  const Vec3 q = p.cwiseAbs() - Vec3::Constant(h);
  if (q.maxCoeff() > 0.0) return q.cwiseMax(0.0).norm();
  return -q.maxCoeff();
}

// Mean reflected distance over a midpoint grid on each face.
double cube_sde_oracle(double h, const PlaneCoefficients& pl, int steps) {
  double sum = 0.0;
  std::size_t count = 0;
  for (int axis = 0; axis < 3; ++axis)
    for (double side : {-h, h})
      for (int i = 0; i < steps; ++i)
        for (int j = 0; j < steps; ++j) {
          Vec3 p;
          p[axis] = side;
          p[(axis + 1) % 3] = -h + 2.0 * h * (i + 0.5) / steps;
          p[(axis + 2) % 3] = -h + 2.0 * h * (j + 0.5) / steps;
          sum += cube_surface_distance(pl.reflect(p), h);
          ++count;
        }
  return sum / static_cast<double>(count);
}

}  // namespace

TEST(PlaneDistance, Examples) {
  const auto u = plane(0.6, 0.8, 0.0, 0.1);
  EXPECT_EQ(plane_distance(u, u), 0.0);
  EXPECT_EQ(plane_distance(u, plane(-0.6, -0.8, 0.0, -0.1)), 0.0);
  EXPECT_NEAR(plane_distance(plane(1, 0, 0, 0), plane(0, 1, 0, 0)), std::sqrt(2.0), 1e-12);
}

TEST(PlaneDistance, SymmetricAndSignFree) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const PlaneCoefficients u{rng.unit_vector(), rng.uniform(-0.3, 0.3)};
    const PlaneCoefficients v{rng.unit_vector(), rng.uniform(-0.3, 0.3)};
    const PlaneCoefficients neg{-v.normal, -v.d};
    EXPECT_EQ(plane_distance(u, v), plane_distance(v, u));
    EXPECT_NEAR(plane_distance(u, v), plane_distance(u, neg), 1e-15);
    EXPECT_LE(plane_distance(u, v), std::sqrt(2.0 + 2.0 * 0.09) + 1e-12);
  }
}

TEST(PlaneCoefficients, FromOriginalFrame) {
  auto [cube, norm] = normalize_object(testutil::hand_cube(2.0, Vec3(5, 0, 0)));
  const auto p = PlaneCoefficients::from_original(Vec3(5.4, 1, 1), Vec3(3, 0, 0), norm);
  EXPECT_EQ(p.normal, Vec3::UnitX());
  EXPECT_NEAR(p.d, -0.4 / norm.scale, 1e-12);
  EXPECT_NEAR(p.d, -0.4 * 0.5 / std::sqrt(12.0), 1e-12);
}

TEST(FScore, HandScenario) {
  // one prediction on the GT plane, the other at delta = 0.3
  const auto gt = plane(1, 0, 0, 0);
  const auto near = plane(1, 0, 0, 0.01);
  const auto far = plane(1, 0, 0, 0.3);
  EXPECT_NEAR(plane_distance(far, gt), 0.3, 1e-15);
  const auto r = f_score({near, far}, {gt});
  const auto& s = r.per_threshold[0];
  EXPECT_EQ(s.threshold, 0.05);
  EXPECT_EQ(s.tp, 1u);
  EXPECT_EQ(s.fp, 1u);
  EXPECT_EQ(s.fn, 0u);
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.f, 2.0 / 3.0);
  // the far prediction misses every threshold up to 0.2
  for (const auto& t : r.per_threshold) EXPECT_EQ(t.f, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.mean_f, 2.0 / 3.0);
}

TEST(FScore, Conventions) {
  const std::vector<PlaneCoefficients> gt{plane(1, 0, 0, 0), plane(0, 0, 1, 0)};
  const auto exact = f_score(gt, gt);
  for (const auto& t : exact.per_threshold) EXPECT_EQ(t.f, 1.0);
  EXPECT_EQ(exact.mean_f, 1.0);
  EXPECT_EQ(f_score({}, {plane(1, 0, 0, 0)}).mean_f, 0.0);
  EXPECT_EQ(f_score({}, {}).mean_f, 1.0);
  const auto spurious = f_score({plane(1, 0, 0, 0)}, {});
  EXPECT_EQ(spurious.mean_f, 0.0);
  EXPECT_EQ(spurious.per_threshold[0].fp, 1u);
  EXPECT_THROW(f_score(gt, gt, {}), Error);
}

TEST(FScore, MatchingModes) {
  // two predictions near one GT plane
  const std::vector<PlaneCoefficients> pred{plane(1, 0, 0, 0), plane(1, 0, 0, 0.02)};
  const std::vector<PlaneCoefficients> gt{plane(1, 0, 0, 0)};
  const auto exist = f_score(pred, gt, {0.05});
  EXPECT_EQ(exist.per_threshold[0].tp, 2u);
  EXPECT_EQ(exist.mean_f, 1.0);
  const auto one = f_score(pred, gt, {0.05}, Matching::kOneToOne);
  EXPECT_EQ(one.per_threshold[0].tp, 1u);
  EXPECT_EQ(one.per_threshold[0].fp, 1u);
  EXPECT_EQ(one.per_threshold[0].fn, 0u);
  EXPECT_DOUBLE_EQ(one.mean_f, 2.0 / 3.0);
  // augmenting path: greedy would pair p0 with g0 and strand g1
  const std::vector<PlaneCoefficients> p2{plane(1, 0, 0, 0.02), plane(1, 0, 0, -0.03)};
  const std::vector<PlaneCoefficients> g2{plane(1, 0, 0, 0), plane(1, 0, 0, 0.05)};
  EXPECT_EQ(f_score(p2, g2, {0.05}, Matching::kOneToOne).per_threshold[0].tp, 2u);
}

TEST(FScore, OrderInvariantAndBounded) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PlaneCoefficients> pred, gt;
    const auto np = rng.index(5), ng = rng.index(4);
    for (std::size_t i = 0; i < np; ++i) pred.push_back({rng.unit_vector(), rng.uniform(-0.05, 0.05)});
    for (std::size_t i = 0; i < ng; ++i) gt.push_back({rng.unit_vector(), rng.uniform(-0.05, 0.05)});
    if (!pred.empty()) gt.push_back({pred[0].normal, pred[0].d + 0.01});
    for (auto m : {Matching::kExistence, Matching::kOneToOne}) {
      const auto a = f_score(pred, gt, kDefaultThresholds, m);
      auto rp = pred, rg = gt;
      std::reverse(rp.begin(), rp.end());
      std::rotate(rg.begin(), rg.begin() + static_cast<std::ptrdiff_t>(rg.size() / 2), rg.end());
      const auto b = f_score(rp, rg, kDefaultThresholds, m);
      ASSERT_EQ(a.per_threshold.size(), 4u);
      for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_EQ(a.per_threshold[t].tp, b.per_threshold[t].tp);
        EXPECT_EQ(a.per_threshold[t].fn, b.per_threshold[t].fn);
        EXPECT_EQ(a.per_threshold[t].f, b.per_threshold[t].f);
        for (double v : {a.per_threshold[t].precision, a.per_threshold[t].recall, a.per_threshold[t].f}) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
        }
      }
    }
  }
}

TEST(Sde, ExactSymmetryIsZero) {
  const auto cube = normalize_object(shapes::cube(0.5, 3)).first;
  for (const Vec3& n : std::vector<Vec3>{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), Vec3(1, 1, 0).normalized()})
    EXPECT_LT(sde(cube, PlaneCoefficients{n, 0.0}), 1e-6) << n.transpose();
  const auto box = normalize_object(shapes::box({0.5, 0.3, 0.2})).first;
  EXPECT_LT(sde(box, PlaneCoefficients{Vec3::UnitZ(), 0.0}), 1e-6);
}

TEST(Sde, SignFlipAndDeterminism) {
  const auto mesh = normalize_object(shapes::extruded_l()).first;
  const Vec3 n = Vec3(0.3, -0.5, 0.8).normalized();
  const double a = sde(mesh, {n, 0.0}, 500, 4);
  EXPECT_EQ(a, sde(mesh, {-n, 0.0}, 500, 4));
  EXPECT_EQ(a, sde(mesh, {n, 0.0}, 500, 4));
  EXPECT_NE(a, sde(mesh, {n, 0.0}, 500, 5));
  EXPECT_GT(a, 0.0);
  EXPECT_THROW(sde(mesh, {Vec3(1, 1, 0), 0.0}), Error);
}

TEST(Sde, TiltedCubePlaneMatchesDenseOracle) {
  auto [cube, norm] = normalize_object(testutil::hand_cube());
  const double h = 0.5 / std::sqrt(3.0);
  ASSERT_NEAR(cube.vertices[0].cwiseAbs().maxCoeff(), h, 1e-12);
  const Vec3 axis = Vec3(1, 1, 1).normalized();
  const PlaneCoefficients tilted{rotate(Vec3::UnitX(), axis, 90.0), 0.0};
  const double oracle = cube_sde_oracle(h, tilted, 300);
  EXPECT_GT(oracle, 0.01);
  const double got = sde(cube, tilted, 100000, 0);
  EXPECT_NEAR(got / oracle, 1.0, 0.02) << got << " vs " << oracle;
}

TEST(AngularError, Examples) {
  const Vec3 g = Vec3(0.2, 0.3, 0.9).normalized();
  EXPECT_NEAR(angular_error({g}, g), 0.0, 1e-6);
  EXPECT_NEAR(angular_error({-g}, g), 0.0, 1e-6);
  const Vec3 off = rotate(g, g.cross(Vec3::UnitX()), 1.0);
  const double e = angular_error({off, Vec3::UnitX()}, g);
  EXPECT_NEAR(e, 1.0, 1e-9);
  EXPECT_EQ(angular_error({}, g), std::numeric_limits<double>::infinity());
  const auto curve = angular_error_curve({e, 0.0, angular_error({}, g)}, {0.5, 1.0 + 1e-6, 5.0});
  EXPECT_DOUBLE_EQ(curve[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve[2], 2.0 / 3.0);
  EXPECT_EQ(angular_error_curve({}, {1.0})[0], 0.0);
}

TEST(AngularError, FoldingProperty) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const Vec3 n = rng.unit_vector(), g = rng.unit_vector();
    const double a = angular_error({n}, g), b = angular_error({n}, -g);
    EXPECT_NEAR(a, b, 1e-9);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 90.0 + 1e-9);
  }
}

TEST(AngularError, Sweep) {
  const auto s = threshold_sweep(0.0, 5.0, 11);
  ASSERT_EQ(s.size(), 11u);
  EXPECT_EQ(s.front(), 0.0);
  EXPECT_EQ(s[2], 1.0);
  EXPECT_EQ(s.back(), 5.0);
}

TEST(Evaluate, PerfectPredictionsOnOffsetCube) {
  const auto mesh = testutil::hand_cube(1.0, Vec3(2, -1, 0.5));
  auto [normalized, norm] = normalize_object(mesh);
  std::vector<GroundTruthPlane> gt;
  for (const Vec3& n : std::vector<Vec3>{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}) gt.push_back({Vec3(2, -1, 0.5), n});
  const auto e = evaluate_object("cube", normalized, norm, {Vec3::UnitZ(), -Vec3::UnitX(), Vec3::UnitY()}, gt, {});
  EXPECT_EQ(e.predicted, 3u);
  EXPECT_EQ(e.truth, 3u);
  EXPECT_EQ(e.f.mean_f, 1.0);
  for (double s : e.sde) EXPECT_LT(s, 1e-6);
  EXPECT_LT(e.mean_sde(), 1e-6);
  for (double a : e.angular_errors) EXPECT_LT(a, 1e-6);
}

TEST(Evaluate, MissedPlaneCountsAgainstRecall) {
  auto [normalized, norm] = normalize_object(shapes::box({0.5, 0.3, 0.2}));
  std::vector<GroundTruthPlane> gt{{norm.centroid, Vec3::UnitX()}, {norm.centroid, Vec3::UnitY()}};
  const auto e = evaluate_object("box", normalized, norm, {Vec3::UnitX()}, gt, {});
  // P = 1, R = 1/2
  EXPECT_DOUBLE_EQ(e.f.mean_f, 2.0 / 3.0);
  EXPECT_NEAR(e.angular_errors[1], 90.0, 1e-9);
}
