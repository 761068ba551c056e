#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symmetria/adamw.hpp"
#include "symmetria/chamfer.hpp"
#include "symmetria/features.hpp"
#include "symmetria/mesh.hpp"
#include "symmetria/net.hpp"
#include "symmetria/raster.hpp"
#include "symmetria/symfeat.hpp"
#include "symmetria/viewpoints.hpp"

namespace symmetria {

enum class FeatureBackend { kProxy, kExternal, kNone };

inline std::string to_string(FeatureBackend b) {
  switch (b) {
    case FeatureBackend::kProxy: return "proxy";
    case FeatureBackend::kExternal: return "external";
    case FeatureBackend::kNone: return "none";
  }
  return "?";
}

inline FeatureBackend parse_backend(const std::string& s) {
  if (s == "proxy") return FeatureBackend::kProxy;
  if (s == "external") return FeatureBackend::kExternal;
  if (s == "none") return FeatureBackend::kNone;
  throw Error("unknown feature backend '" + s + "' (expected proxy|external|none)");
}

struct ViewConfig {
  std::size_t count = 26;
  ViewSampling sampling = ViewSampling::kFibonacci;
  int resolution = 224;
  double distance = 2.4;
  double fov_y = 0.45;
  double depth_epsilon = 1e-3;
  std::uint32_t patch_size = 14;
};

struct DetectConfig {
  int iterations = 100;
  double learning_rate = 0.05;
  std::size_t train_samples = 5000;
  std::size_t source_samples = 10000;
  int heads = 3;
  double filter_threshold = 0.02;
  std::uint64_t seed = 0;
  FeatureBackend backend = FeatureBackend::kProxy;
  std::filesystem::path features_path;  // SYMFEAT file for the external backend
  ViewConfig views;
  double feature_weight = 1.0;
  double merge_angle_deg = 5.0;
  std::vector<int> encoder_widths{3, 64, 128, 256};
  AdamWConfig optimizer;  // learning_rate is taken from the field above

  void validate() const {
    if (iterations < 1) throw Error("config: iterations must be >= 1");
    if (heads < 1) throw Error("config: heads must be >= 1");
    if (train_samples < 1 || train_samples > source_samples)
      throw Error("config: train sample size must lie in [1, source sample size]");
    if (!(filter_threshold > 0.0)) throw Error("config: filter threshold must be positive");
    if (!(learning_rate > 0.0)) throw Error("config: learning rate must be positive");
    if (!(feature_weight >= 0.0)) throw Error("config: feature weight must be non-negative");
    if (views.count < 1) throw Error("config: at least one viewpoint required");
    if (backend == FeatureBackend::kExternal && features_path.empty())
      throw Error("config: the external backend needs a SYMFEAT feature file");
  }

  ModelConfig model() const { return ModelConfig{encoder_widths, heads}; }
  AdamWConfig adamw() const {
    AdamWConfig c = optimizer;
    c.learning_rate = learning_rate;
    return c;
  }
};

/// Renders one buffer per viewpoint (rotation 0).
inline std::vector<RenderBuffer> render_views(const TriangleMesh& normalized, const ViewConfig& cfg) {
  const auto viewpoints = make_viewpoints(cfg.sampling, cfg.count);
  std::vector<RenderBuffer> out;
  out.reserve(viewpoints.size());
  for (const auto& vp : viewpoints) {
    const Camera cam = make_camera(vp, cfg.distance, cfg.resolution, cfg.fov_y);
    out.push_back(rasterize(normalized, cam, RasterOptions{cfg.depth_epsilon, vp.index}));
  }
  return out;
}

/// Back-projects features of every viewpoint and its three image rotations
/// onto the mesh vertices. The proxy backend computes descriptors in-process;
/// the external backend pairs renders with grids from a SYMFEAT file.
inline VertexFeatureField compute_vertex_features(const TriangleMesh& normalized, const DetectConfig& cfg) {
  const auto buffers = render_views(normalized, cfg.views);
  FeatureAccumulator acc(normalized.vertices.size());
  if (cfg.backend == FeatureBackend::kProxy) {
    for (const auto& b : buffers)
      for (int k = 0; k < 4; ++k) {
        const RenderBuffer rotated = rotate_image_indices(b, k);
        acc.add(rotated, proxy_descriptor(rotated, cfg.views.patch_size));
      }
  } else if (cfg.backend == FeatureBackend::kExternal) {
    if (cfg.features_path.empty()) throw Error("external backend: missing SYMFEAT feature file");
    if (!std::filesystem::exists(cfg.features_path))
      throw Error("external backend: missing features file " + cfg.features_path.string());
    const auto grids = import_features(cfg.features_path, FeatureShape{buffers.size(), cfg.views.resolution});
    std::map<std::pair<std::uint32_t, std::uint32_t>, const PatchFeatureGrid*> index;
    for (const auto& g : grids) index[{g.view_id, g.rotation_k}] = &g;
    for (const auto& b : buffers)
      for (std::uint32_t k = 0; k < 4; ++k) {
        const auto it = index.find({b.view_id, k});
        if (it == index.end())
          throw Error("external backend: no grid for view " + std::to_string(b.view_id) + " rotation " + std::to_string(k));
        acc.add(rotate_image_indices(b, static_cast<int>(k)), *it->second);
      }
  } else {
    throw Error("compute_vertex_features: backend 'none' has no features");
  }
  return acc.finish();
}

/// A mesh brought into the normalized frame with its featured source cloud.
struct PreparedObject {
  TriangleMesh normalized;
  NormalizationInfo normalization;
  SurfaceSample source;
  FeaturedCloud featured;
  std::optional<PcaModel> pca;
  std::size_t observed_vertices = 0;
  Diagnostics diagnostics;
};

inline PreparedObject prepare_object(const TriangleMesh& mesh, const DetectConfig& cfg, Diagnostics diag = {}) {
  PreparedObject obj;
  obj.diagnostics = std::move(diag);
  std::tie(obj.normalized, obj.normalization) = normalize_object(mesh);
  obj.source = sample_surface(obj.normalized, cfg.source_samples, cfg.seed);
  obj.featured.cloud.points = obj.source.points;
  if (cfg.backend == FeatureBackend::kNone) {
    obj.featured.features.assign(obj.source.points.size(), Vec3::Zero());
    return obj;
  }
  const VertexFeatureField field = compute_vertex_features(obj.normalized, cfg);
  obj.observed_vertices = field.observed_count();
  PcaResult pca = pca_reduce(field, obj.normalized.vertices, rms_radius(obj.source.points), &obj.diagnostics);
  obj.featured.features = transfer_to_samples(pca.features, obj.normalized, obj.source.records);
  obj.pca = std::move(pca.model);
  return obj;
}

struct TrainedModel {
  ModelParams params;
  std::vector<double> loss_history;  // total loss of each iteration, before its update
};

/// Optimizes a fresh model on one object. Every iteration draws a new seeded
/// subset of the source points (with their features) and takes one AdamW step.
inline TrainedModel optimize(const FeaturedCloud& source, const DetectConfig& cfg) {
  cfg.validate();
  source.validate();
  if (source.size() < cfg.train_samples) throw Error("optimize: source cloud smaller than the train sample size");
  TrainedModel out;
  out.params = init_model(cfg.model(), cfg.seed);
  OptimizerState state = OptimizerState::for_model(out.params, cfg.adamw());
  Rng rng = make_rng(cfg.seed, Stream::kTrainSubset);
  const LossOptions opt{cfg.feature_weight, true};
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto idx = rng.subset(static_cast<std::uint32_t>(source.size()), static_cast<std::uint32_t>(cfg.train_samples));
    const FeaturedCloud batch = source.select(idx);
    LossAndGradients lg = backward(out.params, batch, opt);
    out.loss_history.push_back(lg.loss.total);
    if (!std::isfinite(lg.loss.total) || !lg.gradients.all_finite())
      throw NumericError("optimize: non-finite loss at iteration " + std::to_string(it + 1), out.loss_history);
    adamw_step(state, out.params, lg.gradients);
  }
  return out;
}

struct HeadReport {
  Vec3 raw = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  bool degenerate = false;
  double plain_residual = 0.0;     // Chamfer between the sample and its reflection
  double extended_residual = 0.0;  // same with features
  std::string status;              // kept | filtered | merged | degenerate
};

struct DetectedPlane {
  std::size_t head = 0;
  Vec3 normal = Vec3::UnitX();           // normalized frame
  Vec3 normal_original = Vec3::UnitX();  // original frame
  Vec3 point_original = Vec3::Zero();    // original centroid
  double plain_residual = 0.0;
  double extended_residual = 0.0;
};

struct SymmetryResult {
  std::vector<DetectedPlane> planes;
  std::vector<HeadReport> heads;
  std::vector<double> loss_history;
  NormalizationInfo normalization;
  std::vector<std::string> warnings;
  double seconds = 0.0;  // wall time; kept out of the deterministic report
};

/// Predicts the planes on a fresh seeded sample, drops planes whose plain
/// Chamfer residual exceeds the filter threshold and merges kept planes
/// closer than `merge_angle_deg`, keeping the lower residual.
inline SymmetryResult infer(const ModelParams& params, const FeaturedCloud& source, const DetectConfig& cfg,
                            const NormalizationInfo& norm = {}) {
  Rng rng = make_rng(cfg.seed, Stream::kInferSubset);
  const auto n = std::min(cfg.train_samples, source.size());
  const FeaturedCloud sample =
      source.select(rng.subset(static_cast<std::uint32_t>(source.size()), static_cast<std::uint32_t>(n)));
  const Prediction pred = predict_normals(params, sample.cloud);

  SymmetryResult res;
  res.normalization = norm;
  std::vector<std::size_t> candidates;
  for (std::size_t h = 0; h < pred.normals.size(); ++h) {
    HeadReport hr;
    hr.raw = pred.raw[h];
    hr.normal = pred.normals[h];
    hr.degenerate = pred.degenerate[h];
    FeaturedCloud mirrored{reflect_points(sample.cloud, hr.normal), sample.features};
    hr.plain_residual = chamfer_distance(sample.cloud, mirrored.cloud);
    hr.extended_residual = extended_chamfer(sample, mirrored, cfg.feature_weight);
    if (hr.degenerate) {
      hr.status = "degenerate";
    } else if (hr.plain_residual > cfg.filter_threshold) {
      hr.status = "filtered";
    } else {
      hr.status = "kept";
      candidates.push_back(h);
    }
    res.heads.push_back(hr);
  }

  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return res.heads[a].plain_residual < res.heads[b].plain_residual;
  });
  std::vector<std::size_t> accepted;
  for (auto h : candidates) {
    const bool duplicate = std::any_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return line_angle_deg(res.heads[a].normal, res.heads[h].normal) < cfg.merge_angle_deg;
    });
    if (duplicate) {
      res.heads[h].status = "merged";
      continue;
    }
    accepted.push_back(h);
  }
  std::sort(accepted.begin(), accepted.end());
  for (auto h : accepted) {
    const HeadReport& hr = res.heads[h];
    DetectedPlane p;
    p.head = h;
    p.normal = hr.normal;
    // Normalization is a translation plus a uniform scale: normals carry over.
    p.normal_original = hr.normal;
    p.point_original = norm.centroid;
    p.plain_residual = hr.plain_residual;
    p.extended_residual = hr.extended_residual;
    res.planes.push_back(p);
  }
  return res;
}

struct Detection {
  PreparedObject object;
  TrainedModel model;
  SymmetryResult result;
};

/// Full pipeline on an in-memory mesh: normalize, sample, features,
/// optimize, infer.
inline Detection detect_mesh(const TriangleMesh& mesh, const DetectConfig& cfg, Diagnostics diag = {}) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Detection d;
  d.object = prepare_object(mesh, cfg, std::move(diag));
  d.model = optimize(d.object.featured, cfg);
  d.result = infer(d.model.params, d.object.featured, cfg, d.object.normalization);
  d.result.loss_history = d.model.loss_history;
  d.result.warnings = d.object.diagnostics.warnings;
  d.result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return d;
}

inline Detection detect(const std::filesystem::path& mesh_path, const DetectConfig& cfg) {
  cfg.validate();
  Diagnostics diag;
  const TriangleMesh mesh = load_mesh(mesh_path, &diag);
  return detect_mesh(mesh, cfg, std::move(diag));
}

}  // namespace symmetria
