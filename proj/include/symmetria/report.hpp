#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "symmetria/bundle.hpp"
#include "symmetria/detector.hpp"
#include "symmetria/metrics.hpp"

namespace symmetria {

using ojson = nlohmann::ordered_json;

inline Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector in JSON");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline ojson config_json(const DetectConfig& c) {
  ojson j;
  j["iterations"] = c.iterations;
  j["learning_rate"] = c.learning_rate;
  j["train_samples"] = c.train_samples;
  j["source_samples"] = c.source_samples;
  j["heads"] = c.heads;
  j["filter_threshold"] = c.filter_threshold;
  j["seed"] = c.seed;
  j["backend"] = to_string(c.backend);
  if (c.backend == FeatureBackend::kExternal) j["features"] = c.features_path.string();
  j["lambda"] = c.feature_weight;
  j["merge_angle_deg"] = c.merge_angle_deg;
  j["encoder_widths"] = c.encoder_widths;
  j["adamw"] = {{"beta1", c.optimizer.beta1},
                {"beta2", c.optimizer.beta2},
                {"epsilon", c.optimizer.epsilon},
                {"weight_decay", c.optimizer.weight_decay}};
  j["views"] = {{"count", c.views.count},
                {"sampling", to_string(c.views.sampling)},
                {"resolution", c.views.resolution},
                {"distance", c.views.distance},
                {"fov_y", c.views.fov_y},
                {"depth_epsilon", c.views.depth_epsilon},
                {"patch_size", c.views.patch_size}};
  return j;
}

/// Deterministic detection report (no timing, no absolute paths beyond what
/// the caller passes as `mesh_name`).
inline ojson result_json(const std::string& mesh_name, const DetectConfig& cfg, const Detection& d) {
  const SymmetryResult& r = d.result;
  ojson j;
  j["tool_version"] = kVersion;
  j["mesh"] = mesh_name;
  j["config"] = config_json(cfg);
  j["normalization"] = {{"centroid", vec_json(r.normalization.centroid)}, {"scale", r.normalization.scale}};
  ojson features;
  features["backend"] = to_string(cfg.backend);
  features["observed_vertices"] = d.object.observed_vertices;
  features["vertex_count"] = d.object.normalized.vertices.size();
  if (d.object.pca) features["pca_rank"] = d.object.pca->rank;
  j["features"] = features;
  j["planes"] = ojson::array();
  for (const auto& p : r.planes) {
    j["planes"].push_back({{"head", p.head},
                           {"normalized", {{"point", vec_json(Vec3::Zero())}, {"normal", vec_json(p.normal)}}},
                           {"original", {{"point", vec_json(p.point_original)}, {"normal", vec_json(p.normal_original)}}},
                           {"plain_residual", p.plain_residual},
                           {"extended_residual", p.extended_residual}});
  }
  j["heads"] = ojson::array();
  for (std::size_t h = 0; h < r.heads.size(); ++h) {
    const auto& hr = r.heads[h];
    j["heads"].push_back({{"head", h},
                          {"status", hr.status},
                          {"normal", vec_json(hr.normal)},
                          {"raw", vec_json(hr.raw)},
                          {"plain_residual", hr.plain_residual},
                          {"extended_residual", hr.extended_residual}});
  }
  j["loss_trace"] = r.loss_history;
  j["warnings"] = r.warnings;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
    throw Error("cannot write " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string loss_csv(const std::vector<double>& trace) {
  std::string out = "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, trace[i]);
    out += buf;
  }
  return out;
}

/// ASCII PLY point cloud.
inline std::string ply_points(const std::vector<Vec3>& points) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(points.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  return out;
}

/// A detection report read back for evaluation.
struct StoredResult {
  std::string mesh;
  NormalizationInfo normalization;
  std::vector<Vec3> normals;  // normalized frame, planes through the origin
};

inline StoredResult parse_result(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("planes")) throw Error("malformed result JSON");
  StoredResult s;
  s.mesh = j.value("mesh", "");
  if (j.contains("normalization")) {
    s.normalization.centroid = json_vec(j["normalization"]["centroid"]);
    s.normalization.scale = j["normalization"]["scale"].get<double>();
  }
  for (const auto& p : j["planes"]) s.normals.push_back(json_vec(p["normalized"]["normal"]).normalized());
  return s;
}

/// Ground-truth planes per object name, in original coordinates.
/// Accepts {"name": [{"point": [...], "normal": [...]}, ...], ...}, optionally
/// wrapped in {"objects": {...}}.
struct GroundTruthPlane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
};

inline std::map<std::string, std::vector<GroundTruthPlane>> parse_ground_truth(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("malformed ground-truth JSON");
  if (j.contains("objects")) j = j["objects"];
  std::map<std::string, std::vector<GroundTruthPlane>> out;
  for (const auto& [name, planes] : j.items()) {
    if (!planes.is_array()) throw Error("ground truth for '" + name + "' is not a list");
    auto& list = out[name];
    for (const auto& p : planes) {
      GroundTruthPlane g;
      g.point = json_vec(p.at("point"));
      g.normal = json_vec(p.at("normal"));
      if (!(g.normal.norm() > 0.0)) throw Error("ground truth for '" + name + "' has a zero normal");
      g.normal.normalize();
      list.push_back(g);
    }
  }
  return out;
}

}  // namespace symmetria
