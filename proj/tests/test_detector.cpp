#include "test_util.hpp"

using namespace symmetria;
using testutil::TempDir;

namespace {

DetectConfig small_config(FeatureBackend backend = FeatureBackend::kProxy) {
  DetectConfig c;
  c.iterations = 20;
  c.train_samples = 1000;
  c.source_samples = 2000;
  c.views.count = 6;
  c.views.resolution = 112;
  c.backend = backend;
  return c;
}

}  // namespace

TEST(DetectConfig, Validation) {
  DetectConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.iterations = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.train_samples = c.source_samples + 1;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.filter_threshold = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.heads = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.backend = FeatureBackend::kExternal;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_EQ(c.adamw().learning_rate, 0.05);
  EXPECT_EQ(c.model().heads, 3);
  EXPECT_EQ(parse_backend("none"), FeatureBackend::kNone);
  EXPECT_THROW(parse_backend("dino"), Error);
}

TEST(Detect, ExternalWithoutFeaturesIsAnError) {
  auto c = small_config(FeatureBackend::kExternal);
  EXPECT_THROW(detect_mesh(shapes::cube(), c), Error);
  c.features_path = "/nonexistent/f.symfeat";
  EXPECT_THROW(detect_mesh(shapes::cube(), c), Error);
}

TEST(Detect, BackendNoneUsesZeroFeatures) {
  const auto obj = prepare_object(shapes::box({0.5, 0.3, 0.2}), small_config(FeatureBackend::kNone));
  ASSERT_EQ(obj.featured.size(), 2000u);
  for (const auto& f : obj.featured.features) EXPECT_EQ(f, Vec3::Zero());
  EXPECT_FALSE(obj.pca.has_value());
}

TEST(Detect, ProxyFeaturesAreWhitenedAndScaled) {
  const auto obj = prepare_object(shapes::box({0.5, 0.3, 0.2}, 4), small_config());
  ASSERT_TRUE(obj.pca.has_value());
  EXPECT_EQ(obj.pca->rank, 3);
  EXPECT_GT(obj.observed_vertices, 0u);
  EXPECT_NO_THROW(obj.featured.validate());
  double norm_sq = 0.0;
  for (const auto& f : obj.featured.features) norm_sq += f.squaredNorm();
  EXPECT_GT(norm_sq, 0.0);
}

TEST(Detect, SameSeedSameTraceAndReport) {
  const auto mesh = shapes::box({0.5, 0.3, 0.18});
  const auto c = small_config();
  const auto a = detect_mesh(mesh, c);
  const auto b = detect_mesh(mesh, c);
  EXPECT_EQ(a.result.loss_history, b.result.loss_history);
  EXPECT_EQ(result_json("box", c, a).dump(2), result_json("box", c, b).dump(2));
  auto other = c;
  other.seed = 1;
  EXPECT_NE(detect_mesh(mesh, other).result.loss_history, a.result.loss_history);
}

TEST(Detect, LossDecreasesAndKeptPlanesPassFilter) {
  const auto c = small_config();
  const auto d = detect_mesh(shapes::box({0.5, 0.3, 0.18}), c);
  ASSERT_EQ(d.result.loss_history.size(), 20u);
  EXPECT_LT(d.result.loss_history.back(), d.result.loss_history.front());
  ASSERT_EQ(d.result.heads.size(), 3u);
  EXPECT_LE(d.result.planes.size(), 3u);
  EXPECT_GE(d.result.planes.size(), 1u);
  for (const auto& p : d.result.planes) {
    EXPECT_LE(p.plain_residual, c.filter_threshold);
    EXPECT_TRUE(is_unit(p.normal));
    EXPECT_EQ(d.result.heads[p.head].status, "kept");
  }
}

TEST(Detect, HelixHasNoPlanes) {
  const auto c = small_config();
  const auto d = detect_mesh(shapes::helix_tube(), c);
  EXPECT_TRUE(d.result.planes.empty());
  for (const auto& h : d.result.heads) EXPECT_GT(h.plain_residual, c.filter_threshold);
}

TEST(Detect, SphereKeepsAllHeads) {
  DetectConfig c;
  c.backend = FeatureBackend::kNone;
  const auto d = detect_mesh(shapes::ellipsoid({0.5, 0.5, 0.5}), c);
  ASSERT_EQ(d.result.planes.size(), 3u);
  for (const auto& p : d.result.planes) EXPECT_LT(p.plain_residual, 0.005);
  // the regularizer keeps the three heads apart
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b)
      EXPECT_GT(line_angle_deg(d.result.planes[a].normal, d.result.planes[b].normal), 5.0);
}

TEST(Infer, MergesNearDuplicates) {
  // Three heads biased to the same axis: one survives, the rest merge.
  ModelParams p = init_model(ModelConfig{{3, 8, 16}, 3}, 2);
  for (auto& h : p.heads) {
    h.weight.setZero();
    h.bias = Vec3(1.0, 0.0, 0.0);
  }
  p.heads[1].bias = Vec3(1.0, 0.02, 0.0);
  p.heads[2].bias = Vec3(0.0, 0.0, 1.0);
  const auto obj = prepare_object(shapes::box({0.5, 0.3, 0.2}), small_config(FeatureBackend::kNone));
  const auto r = infer(p, obj.featured, small_config(FeatureBackend::kNone), obj.normalization);
  ASSERT_EQ(r.heads.size(), 3u);
  EXPECT_EQ(r.planes.size(), 2u);
  std::size_t merged = 0;
  for (const auto& h : r.heads) merged += h.status == "merged";
  EXPECT_EQ(merged, 1u);
  for (const auto& pl : r.planes) EXPECT_EQ(pl.point_original, obj.normalization.centroid);
}

TEST(Infer, FilterDropsAsymmetricPlane) {
  ModelParams p = init_model(ModelConfig{{3, 8, 16}, 1}, 2);
  p.heads[0].weight.setZero();
  p.heads[0].bias = Vec3(1.0, 0.0, 0.0);
  const auto c = small_config(FeatureBackend::kNone);
  const auto obj = prepare_object(shapes::helix_tube(), c);
  const auto r = infer(p, obj.featured, c);
  ASSERT_EQ(r.heads.size(), 1u);
  EXPECT_EQ(r.heads[0].status, "filtered");
  EXPECT_TRUE(r.planes.empty());
}

TEST(Detect, FromFileMatchesInMemory) {
  TempDir dir("detector");
  const auto mesh = testutil::hand_cube(0.5, Vec3(1, 2, 3));
  save_obj(mesh, dir / "c.obj");
  auto c = small_config(FeatureBackend::kNone);
  c.iterations = 5;
  const auto a = detect(dir / "c.obj", c);
  const auto b = detect_mesh(load_mesh(dir / "c.obj"), c);
  EXPECT_EQ(a.result.loss_history, b.result.loss_history);
  EXPECT_TRUE(a.result.normalization.centroid.isApprox(Vec3(1, 2, 3), 1e-9));
}
