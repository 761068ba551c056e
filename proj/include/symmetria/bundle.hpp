#pragma once

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symmetria/detector.hpp"
#include "symmetria/raster.hpp"
#include "symmetria/symfeat.hpp"

namespace symmetria {

struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 gray, 3 RGB
  std::vector<std::uint8_t> data;
};

inline void write_png(const Image8& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3) throw Error("write_png: unsupported channel count");
  if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw Error("write_png: pixel buffer size mismatch");
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int r = 0; r < img.height; ++r)
    png_write_row(png, const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(r) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline Image8 read_png(const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw Error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error("libpng failed reading " + path.string());
  }
  png_init_io(png, fp);
  png_read_png(png, info, PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND, nullptr);
  Image8 img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  png_bytepp rows = png_get_rows(png, info);
  const auto stride = static_cast<std::size_t>(img.width) * img.channels;
  img.data.resize(stride * img.height);
  for (int r = 0; r < img.height; ++r) std::copy(rows[r], rows[r] + stride, img.data.begin() + r * stride);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

/// Depth shaded gray: near surface bright, background 0.
inline Image8 depth_image(const RenderBuffer& b, double near, double far) {
  Image8 img{b.width, b.height, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(b.width) * b.height, 0)};
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double z = b.depth[i];
    if (!std::isfinite(z)) continue;
    const double t = std::clamp((far - z) / (far - near), 0.0, 1.0);
    img.data[i] = static_cast<std::uint8_t>(1.0 + std::lround(t * 254.0));
  }
  return img;
}

/// Camera-space normal mapped to RGB by (n + 1) / 2; background black.
inline Image8 normal_image(const RenderBuffer& b) {
  Image8 img{b.width, b.height, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(b.width) * b.height * 3, 0)};
  for (std::size_t i = 0; i < b.normal.size(); ++i) {
    if (!std::isfinite(b.depth[i])) continue;
    for (int c = 0; c < 3; ++c)
      img.data[3 * i + c] = static_cast<std::uint8_t>(std::lround(std::clamp((b.normal[i][c] + 1.0) * 0.5, 0.0, 1.0) * 255.0));
  }
  return img;
}

inline constexpr std::uint32_t kSymhVersion = 1;

/// SYMH: "SYMH", u32 version, u32 count, then count records of u32
/// (vertex, view, rotation_k, row, col).
inline std::string encode_hits(const std::vector<VertexHit>& hits) {
  std::string out = "SYMH";
  detail::put<std::uint32_t>(out, kSymhVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(hits.size()));
  for (const auto& h : hits)
    for (auto v : {h.vertex, h.view, h.rotation_k, h.row, h.col}) detail::put<std::uint32_t>(out, v);
  return out;
}

inline std::vector<VertexHit> decode_hits(const std::string& data) {
  detail::ByteCursor cur(data);
  char magic[4];
  for (char& c : magic) c = cur.get<char>("magic");
  if (std::string(magic, 4) != "SYMH") throw Error("SYMH: bad magic");
  if (cur.get<std::uint32_t>("version") != kSymhVersion) throw Error("SYMH: unsupported version");
  const auto n = cur.get<std::uint32_t>("count");
  if (n > cur.remaining() / 20) throw Error("SYMH: truncated hit table");
  std::vector<VertexHit> hits(n);
  for (auto& h : hits) {
    h.vertex = cur.get<std::uint32_t>("vertex");
    h.view = cur.get<std::uint32_t>("view");
    h.rotation_k = cur.get<std::uint32_t>("rotation");
    h.row = cur.get<std::uint32_t>("row");
    h.col = cur.get<std::uint32_t>("col");
  }
  if (!cur.at_end()) throw Error("SYMH: trailing bytes");
  return hits;
}

inline nlohmann::ordered_json vec_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); }

inline std::string view_stem(std::uint32_t view) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03u", view);
  return buf;
}

/// Writes a view bundle: per view a depth PNG and a normal PNG (rotation 0;
/// the extractor rotates images itself), hits.bin with the vertex hits of all
/// four rotations, and manifest.json describing every camera.
inline nlohmann::ordered_json write_view_bundle(const TriangleMesh& normalized, const ViewConfig& cfg,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto buffers = render_views(normalized, cfg);
  const double near = cfg.distance - 0.5, far = cfg.distance + 0.5;

  nlohmann::ordered_json manifest;
  manifest["format"] = "symmetria-view-bundle";
  manifest["version"] = 1;
  manifest["tool_version"] = kVersion;
  manifest["sampling"] = to_string(cfg.sampling);
  if (cfg.sampling == ViewSampling::kEquiangular) {
    const auto [rows, cols] = equiangular_grid_for(cfg.count);
    manifest["grid"] = {{"rows", rows}, {"cols", cols}};
  }
  manifest["viewpoint_count"] = buffers.size();
  manifest["resolution"] = {cfg.resolution, cfg.resolution};
  manifest["distance"] = cfg.distance;
  manifest["fov_y"] = cfg.fov_y;
  manifest["depth_epsilon"] = cfg.depth_epsilon;
  manifest["depth_range"] = {near, far};
  manifest["pixel_origin"] = "top-left";
  manifest["hits"] = "hits.bin";
  manifest["views"] = nlohmann::ordered_json::array();

  std::vector<VertexHit> hits;
  for (const auto& b : buffers) {
    const std::string stem = view_stem(b.view_id);
    write_png(depth_image(b, near, far), dir / (stem + "_depth.png"));
    write_png(normal_image(b), dir / (stem + "_normal.png"));
    nlohmann::ordered_json v;
    v["view_id"] = b.view_id;
    v["depth_png"] = stem + "_depth.png";
    v["normal_png"] = stem + "_normal.png";
    v["eye"] = vec_json(b.camera.eye);
    v["target"] = vec_json(b.camera.target);
    v["fov_y"] = b.camera.fov_y;
    v["resolution"] = {b.width, b.height};
    v["rotations"] = nlohmann::ordered_json::array();
    for (int k = 0; k < 4; ++k) {
      const RenderBuffer r = rotate_image_indices(b, k);
      v["rotations"].push_back({{"rotation_k", k}, {"up", vec_json(r.camera.up)}, {"hit_count", r.hits.size()}});
      hits.insert(hits.end(), r.hits.begin(), r.hits.end());
    }
    manifest["views"].push_back(std::move(v));
  }
  const std::string table = encode_hits(hits);
  std::ofstream(dir / "hits.bin", std::ios::binary).write(table.data(), static_cast<std::streamsize>(table.size()));
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  return manifest;
}

/// The parts of a bundle manifest a SYMFEAT import is checked against.
inline FeatureShape read_bundle_shape(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open bundle manifest " + manifest_path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("viewpoint_count") || !j.contains("resolution"))
    throw Error("malformed bundle manifest " + manifest_path.string());
  return FeatureShape{j["viewpoint_count"].get<std::size_t>(), j["resolution"][0].get<int>()};
}

}  // namespace symmetria
