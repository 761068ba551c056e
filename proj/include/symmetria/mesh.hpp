#pragma once

#include <algorithm>
#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "symmetria/common.hpp"

namespace symmetria {

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  Vec3 corner(std::size_t t, int k) const { return vertices[triangles[t][k]]; }

  double triangle_area(std::size_t t) const {
    const Vec3 a = corner(t, 0), b = corner(t, 1), c = corner(t, 2);
    return 0.5 * (b - a).cross(c - a).norm();
  }

  double surface_area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
    return total;
  }
};

/// Maps normalized coordinates back to model units: x = centroid + scale * x'.
struct NormalizationInfo {
  Vec3 centroid = Vec3::Zero();
  double scale = 1.0;

  Vec3 to_original(const Vec3& p) const { return centroid + scale * p; }
  Vec3 to_normalized(const Vec3& p) const { return (p - centroid) / scale; }
};

/// Where a surface sample came from; used to carry vertex data onto samples.
struct BarycentricRecord {
  std::uint32_t triangle = 0;
  Vec3 weights = Vec3::Zero();
};

/// Appends a triangle, dropping it (with a warning) when two indices coincide.
/// Throws on out-of-range indices.
inline bool add_triangle(TriangleMesh& mesh, std::uint32_t a, std::uint32_t b, std::uint32_t c,
                         Diagnostics* diag) {
  const auto n = mesh.vertices.size();
  if (a >= n || b >= n || c >= n) {
    throw Error("triangle index out of range (" + std::to_string(a) + ", " + std::to_string(b) +
                ", " + std::to_string(c) + ") with " + std::to_string(n) + " vertices");
  }
  if (a == b || b == c || a == c) {
    warn(diag, "dropped degenerate triangle (" + std::to_string(a) + ", " + std::to_string(b) +
                   ", " + std::to_string(c) + ")");
    return false;
  }
  mesh.triangles.push_back({a, b, c});
  return true;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mesh file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error("cannot read mesh file: " + path.string());
  return buf.str();
}

inline std::uint32_t resolve_obj_index(long idx, std::size_t vertex_count) {
  if (idx > 0) return static_cast<std::uint32_t>(idx - 1);
  if (idx < 0 && static_cast<std::size_t>(-idx) <= vertex_count)
    return static_cast<std::uint32_t>(static_cast<long>(vertex_count) + idx);
  throw Error("invalid OBJ face index " + std::to_string(idx));
}

inline TriangleMesh parse_obj(const std::string& text, Diagnostics* diag) {
  TriangleMesh mesh;
  std::istringstream in(text);
  std::string line;
  std::vector<std::uint32_t> face;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw Error("OBJ line " + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      face.clear();
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        long idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stol(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
        } catch (const std::exception&) {
          throw Error("OBJ line " + std::to_string(line_no) + ": bad face index '" + tok + "'");
        }
        face.push_back(resolve_obj_index(idx, mesh.vertices.size()));
      }
      if (face.size() < 3) throw Error("OBJ line " + std::to_string(line_no) + ": face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < face.size(); ++k) add_triangle(mesh, face[0], face[k], face[k + 1], diag);
    }
  }
  return mesh;
}

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

inline PlyType ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUInt8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUInt16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUInt32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  throw Error("PLY: unknown property type '" + name + "'");
}

inline std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

/// Sequential reader over the PLY body (ASCII tokens or little-endian binary).
class PlyReader {
 public:
  PlyReader(const std::string& data, std::size_t offset, bool binary)
      : data_(data), pos_(offset), binary_(binary), ascii_(binary ? std::string() : data.substr(offset)) {}

  double read(PlyType t) {
    if (!binary_) {
      double v;
      if (!(ascii_ >> v)) throw Error("PLY: truncated ASCII body");
      return v;
    }
    const std::size_t n = ply_size(t);
    if (pos_ + n > data_.size()) throw Error("PLY: truncated binary body");
    const char* p = data_.data() + pos_;
    pos_ += n;
    switch (t) {
      case PlyType::kInt8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::kUInt8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::kInt16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::kUInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::kInt32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::kUInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::kFloat32: { float v; std::memcpy(&v, p, 4); return v; }
      case PlyType::kFloat64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0.0;
  }

 private:
  const std::string& data_;
  std::size_t pos_;
  bool binary_;
  std::istringstream ascii_;
};

inline TriangleMesh parse_ply(const std::string& data, Diagnostics* diag) {
  const auto header_end = data.find("end_header");
  if (data.rfind("ply", 0) != 0 || header_end == std::string::npos) throw Error("PLY: missing header");
  std::size_t body = data.find('\n', header_end);
  if (body == std::string::npos) throw Error("PLY: missing header terminator");
  ++body;

  std::istringstream header(data.substr(0, header_end));
  std::string line, format;
  std::vector<PlyElement> elements;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "format") {
      ls >> format;
    } else if (tag == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw Error("PLY: property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = ply_type(count_type);
        p.type = ply_type(item_type);
      } else {
        p.type = ply_type(type);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    }
  }
  bool binary = false;
  if (format == "binary_little_endian") binary = true;
  else if (format != "ascii") throw Error("PLY: unsupported format '" + format + "'");

  TriangleMesh mesh;
  PlyReader reader(data, body, binary);
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      Vec3 v = Vec3::Zero();
      int found = 0;
      std::vector<std::uint32_t> face;
      for (const auto& p : e.properties) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(reader.read(p.count_type));
          for (std::size_t k = 0; k < n; ++k) {
            const double idx = reader.read(p.type);
            if (e.name == "face" && (p.name == "vertex_indices" || p.name == "vertex_index")) {
              if (idx < 0) throw Error("PLY: negative face index");
              face.push_back(static_cast<std::uint32_t>(idx));
            }
          }
        } else {
          const double value = reader.read(p.type);
          if (e.name == "vertex") {
            if (p.name == "x") { v.x() = value; found |= 1; }
            if (p.name == "y") { v.y() = value; found |= 2; }
            if (p.name == "z") { v.z() = value; found |= 4; }
          }
        }
      }
      if (e.name == "vertex") {
        if (found != 7) throw Error("PLY: vertex element lacks x/y/z");
        mesh.vertices.push_back(v);
      } else if (e.name == "face") {
        if (face.size() < 3) throw Error("PLY: face with < 3 vertices");
        for (std::size_t k = 1; k + 1 < face.size(); ++k) add_triangle(mesh, face[0], face[k], face[k + 1], diag);
      }
    }
  }
  return mesh;
}

}  // namespace detail

/// Loads an ASCII OBJ or ASCII / binary little-endian PLY triangle mesh.
/// Polygons are fan-triangulated; triangles with repeated indices are dropped
/// and reported through `diag`.
inline TriangleMesh load_mesh(const std::filesystem::path& path, Diagnostics* diag = nullptr) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext != ".obj" && ext != ".ply") throw Error("unsupported mesh format: " + path.string());
  const std::string data = detail::read_file(path);
  TriangleMesh mesh = ext == ".obj" ? detail::parse_obj(data, diag) : detail::parse_ply(data, diag);
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw Error("empty mesh: " + path.string());
  for (const auto& v : mesh.vertices)
    if (!v.allFinite()) throw Error("non-finite vertex in " + path.string());
  return mesh;
}

inline void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

/// Area-weighted centroid of the surface; falls back to the vertex mean for
/// meshes without area.
inline Vec3 surface_centroid(const TriangleMesh& mesh) {
  Vec3 sum = Vec3::Zero();
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double a = mesh.triangle_area(t);
    sum += a * (mesh.corner(t, 0) + mesh.corner(t, 1) + mesh.corner(t, 2)) / 3.0;
    area += a;
  }
  if (area > 0.0) return sum / area;
  Vec3 mean = Vec3::Zero();
  for (const auto& v : mesh.vertices) mean += v;
  return mean / static_cast<double>(mesh.vertices.size());
}

/// Translates the surface centroid to the origin and scales the farthest
/// vertex to radius 0.5.
inline std::pair<TriangleMesh, NormalizationInfo> normalize_object(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw Error("normalize_object: empty mesh");
  NormalizationInfo info;
  info.centroid = surface_centroid(mesh);
  double radius = 0.0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, (v - info.centroid).norm());
  if (!(radius > 0.0)) throw Error("normalize_object: zero-extent mesh");
  info.scale = radius / 0.5;
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = info.to_normalized(v);
  return {std::move(out), info};
}

/// Area-uniform surface samples plus the barycentric record of each.
struct SurfaceSample {
  std::vector<Vec3> points;
  std::vector<BarycentricRecord> records;
};

inline SurfaceSample sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng) {
  if (n == 0) throw Error("sample_surface: n must be >= 1");
  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cdf[t] = total;
  }
  if (!(total > 0.0)) throw Error("sample_surface: mesh has zero area");

  SurfaceSample out;
  out.points.reserve(n);
  out.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // upper_bound never selects a zero-area triangle: its cdf equals its predecessor's
    const auto t = static_cast<std::uint32_t>(it - cdf.begin());
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 w(1.0 - r1, r1 * (1.0 - r2), r1 * r2);
    out.points.push_back(w[0] * mesh.corner(t, 0) + w[1] * mesh.corner(t, 1) + w[2] * mesh.corner(t, 2));
    out.records.push_back({t, w});
  }
  return out;
}

inline SurfaceSample sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kSurfaceSample);
  return sample_surface(mesh, n, rng);
}

/// Closest point on triangle abc to p (Voronoi-region walk).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) {
    // Degenerate (collinear) triangle: closest of its three edges.
    Vec3 best = a;
    double best_d = (p - a).squaredNorm();
    for (auto [s, e] : {std::pair{a, b}, std::pair{b, c}, std::pair{a, c}}) {
      const Vec3 d = e - s;
      const double len2 = d.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - s).dot(d) / len2, 0.0, 1.0) : 0.0;
      const Vec3 q = s + t * d;
      if ((p - q).squaredNorm() < best_d) {
        best_d = (p - q).squaredNorm();
        best = q;
      }
    }
    return best;
  }
  const double v = vb / denom, w = vc / denom;
  return a + ab * v + ac * w;
}

/// Exact minimum Euclidean distance from p to any triangle of the mesh.
inline double point_to_mesh_distance(const Vec3& p, const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) throw Error("point_to_mesh_distance: empty mesh");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 q = closest_point_on_triangle(p, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    best = std::min(best, (p - q).squaredNorm());
  }
  return std::sqrt(best);
}

/// Applies x -> R x + t to every vertex.
inline TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation = Vec3::Zero()) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = rotation * v + translation;
  return out;
}

}  // namespace symmetria
