#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "symmetria/mesh.hpp"
#include "symmetria/viewpoints.hpp"

namespace symmetria {

/// One observation of a mesh vertex in a rendered (possibly rotated) view.
struct VertexHit {
  std::uint32_t vertex = 0;
  std::uint32_t view = 0;
  std::uint32_t rotation_k = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const VertexHit&, const VertexHit&) = default;
};

/// Z-buffered render of one view. Background pixels hold +inf depth, a zero
/// normal and triangle id -1.
struct RenderBuffer {
  std::uint32_t view_id = 0;
  std::uint32_t rotation_k = 0;
  Camera camera;
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<Vec3> normal;  // camera space, oriented towards the viewer
  std::vector<std::int32_t> triangle;
  std::vector<VertexHit> hits;  // sorted by vertex id

  std::size_t pixel(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
  bool foreground(int row, int col) const { return std::isfinite(depth[pixel(row, col)]); }
};

struct RasterOptions {
  double depth_epsilon = 1e-3;
  std::uint32_t view_id = 0;
};

namespace detail {

inline double orient2d(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

}  // namespace detail

/// Perspective z-buffer rasterization with flat per-triangle normals. Pixel
/// coverage is sampled at pixel centers with an inclusive edge test, and the
/// first triangle wins exact depth ties. A vertex is recorded as visible when
/// its pixel's winning triangle is incident to it and its depth is within
/// `depth_epsilon` of the buffer.
inline RenderBuffer rasterize(const TriangleMesh& mesh, const Camera& cam, const RasterOptions& opt = {}) {
  RenderBuffer buf;
  buf.view_id = opt.view_id;
  buf.camera = cam;
  buf.width = cam.width;
  buf.height = cam.height;
  const std::size_t npix = static_cast<std::size_t>(cam.width) * cam.height;
  buf.depth.assign(npix, std::numeric_limits<double>::infinity());
  buf.normal.assign(npix, Vec3::Zero());
  buf.triangle.assign(npix, -1);

  std::vector<Vec3> screen(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) screen[i] = cam.project(mesh.vertices[i]);

  constexpr double kNear = 1e-6;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& s0 = screen[tri[0]];
    const Vec3& s1 = screen[tri[1]];
    const Vec3& s2 = screen[tri[2]];
    if (s0.z() <= kNear || s1.z() <= kNear || s2.z() <= kNear) continue;

    const double area = detail::orient2d(s0.x(), s0.y(), s1.x(), s1.y(), s2.x(), s2.y());
    if (!(std::abs(area) > 1e-12)) continue;  // edge-on or degenerate

    Vec3 n = (mesh.corner(t, 1) - mesh.corner(t, 0)).cross(mesh.corner(t, 2) - mesh.corner(t, 0));
    if (!(n.norm() > 0.0)) continue;
    n = cam.to_camera_dir(n.normalized());
    if (n.z() < 0.0) n = -n;

    const int c0 = std::max(0, static_cast<int>(std::floor(std::min({s0.x(), s1.x(), s2.x()}) - 0.5)));
    const int c1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({s0.x(), s1.x(), s2.x()}) - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min({s0.y(), s1.y(), s2.y()}) - 0.5)));
    const int r1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({s0.y(), s1.y(), s2.y()}) - 0.5)));
    const double sign = area > 0.0 ? 1.0 : -1.0;
    const double inv_area = 1.0 / area;

    for (int r = r0; r <= r1; ++r) {
      const double py = r + 0.5;
      for (int c = c0; c <= c1; ++c) {
        const double px = c + 0.5;
        const double w0 = detail::orient2d(s1.x(), s1.y(), s2.x(), s2.y(), px, py);
        const double w1 = detail::orient2d(s2.x(), s2.y(), s0.x(), s0.y(), px, py);
        const double w2 = detail::orient2d(s0.x(), s0.y(), s1.x(), s1.y(), px, py);
        if (sign * w0 < 0.0 || sign * w1 < 0.0 || sign * w2 < 0.0) continue;
        const double l0 = w0 * inv_area, l1 = w1 * inv_area, l2 = w2 * inv_area;
        const double z = 1.0 / (l0 / s0.z() + l1 / s1.z() + l2 / s2.z());
        const std::size_t p = buf.pixel(r, c);
        if (z < buf.depth[p]) {
          buf.depth[p] = z;
          buf.normal[p] = n;
          buf.triangle[p] = static_cast<std::int32_t>(t);
        }
      }
    }
  }

  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3& s = screen[v];
    if (s.z() <= kNear) continue;
    const double col = std::floor(s.x()), row = std::floor(s.y());
    if (col < 0 || row < 0 || col >= cam.width || row >= cam.height) continue;
    const auto r = static_cast<int>(row), c = static_cast<int>(col);
    const auto win = buf.triangle[buf.pixel(r, c)];
    if (win < 0) continue;
    const auto& tri = mesh.triangles[static_cast<std::size_t>(win)];
    if (tri[0] != v && tri[1] != v && tri[2] != v) continue;
    if (std::abs(s.z() - buf.depth[buf.pixel(r, c)]) > opt.depth_epsilon) continue;
    buf.hits.push_back({static_cast<std::uint32_t>(v), opt.view_id, 0, static_cast<std::uint32_t>(r),
                        static_cast<std::uint32_t>(c)});
  }
  return buf;
}

/// Rotates the image by k * 90 degrees counter-clockwise as an exact index
/// permutation. Camera-space normals and the camera's up vector are rotated
/// with it, so the result is the render of the camera rolled by -k * 90
/// degrees about its viewing axis.
inline RenderBuffer rotate_image_indices(const RenderBuffer& in, int k) {
  if (k < 0 || k > 3) throw Error("rotate_image_indices: k must be in 0..3");
  if (in.width != in.height) throw Error("rotate_image_indices: buffer is not square");
  RenderBuffer out = in;
  out.rotation_k = (in.rotation_k + static_cast<std::uint32_t>(k)) % 4;
  if (k == 0) return out;
  const int n = in.width;
  auto map = [&](int r, int c) {
    for (int i = 0; i < k; ++i) {
      const int nr = n - 1 - c;
      c = r;
      r = nr;
    }
    return std::pair{r, c};
  };
  auto turn = [&](Vec3 v) {
    for (int i = 0; i < k; ++i) v = Vec3(-v.y(), v.x(), v.z());
    return v;
  };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const auto [rr, cc] = map(r, c);
      const auto src = in.pixel(r, c), dst = out.pixel(rr, cc);
      out.depth[dst] = in.depth[src];
      out.normal[dst] = turn(in.normal[src]);
      out.triangle[dst] = in.triangle[src];
    }
  for (auto& h : out.hits) {
    const auto [rr, cc] = map(static_cast<int>(h.row), static_cast<int>(h.col));
    h.row = static_cast<std::uint32_t>(rr);
    h.col = static_cast<std::uint32_t>(cc);
    h.rotation_k = out.rotation_k;
  }
  for (int i = 0; i < k; ++i) out.camera.up = out.camera.right();
  return out;
}

}  // namespace symmetria
