#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "symmetria/common.hpp"

namespace symmetria {

struct Viewpoint {
  Vec3 position = Vec3::UnitZ();  // unit direction from the object center
  std::uint32_t index = 0;
};

enum class ViewSampling { kFibonacci, kEquiangular };

inline std::string to_string(ViewSampling s) { return s == ViewSampling::kFibonacci ? "fibonacci" : "uniform"; }

inline ViewSampling parse_view_sampling(const std::string& s) {
  if (s == "fibonacci") return ViewSampling::kFibonacci;
  if (s == "uniform" || s == "equiangular") return ViewSampling::kEquiangular;
  throw Error("unknown view sampling '" + s + "' (expected fibonacci|uniform)");
}

/// Golden-angle spiral: z_i = 1 - 2(i + 0.5)/n, azimuth_i = i * pi * (3 - sqrt 5).
inline std::vector<Viewpoint> fibonacci_sphere(std::size_t n) {
  if (n == 0) throw Error("fibonacci_sphere: n must be >= 1");
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<Viewpoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = static_cast<double>(i) * golden;
    out.push_back({Vec3(r * std::cos(phi), r * std::sin(phi), z).normalized(), static_cast<std::uint32_t>(i)});
  }
  return out;
}

/// `rows` rings of constant polar angle pi*(r+1)/(rows+1) (poles excluded),
/// each with `cols` points at constant azimuth step 2*pi/cols.
inline std::vector<Viewpoint> equiangular_sphere(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw Error("equiangular_sphere: rows and cols must be >= 1");
  std::vector<Viewpoint> out;
  out.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double theta = M_PI * static_cast<double>(r + 1) / static_cast<double>(rows + 1);
    for (std::size_t c = 0; c < cols; ++c) {
      const double phi = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(cols);
      out.push_back({Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)),
                     static_cast<std::uint32_t>(out.size())});
    }
  }
  return out;
}

/// Exact factorization rows * cols = n closest to cols = 2 * rows.
inline std::pair<std::size_t, std::size_t> equiangular_grid_for(std::size_t n) {
  if (n == 0) throw Error("equiangular_grid_for: n must be >= 1");
  std::pair<std::size_t, std::size_t> best{1, n};
  double best_gap = std::abs(static_cast<double>(n) - 2.0);
  for (std::size_t rows = 2; rows * rows <= 2 * n; ++rows) {
    if (n % rows != 0) continue;
    const double gap = std::abs(static_cast<double>(n / rows) - 2.0 * static_cast<double>(rows));
    if (gap < best_gap) {
      best_gap = gap;
      best = {rows, n / rows};
    }
  }
  return best;
}

inline std::vector<Viewpoint> make_viewpoints(ViewSampling sampling, std::size_t n) {
  if (sampling == ViewSampling::kFibonacci) return fibonacci_sphere(n);
  const auto [rows, cols] = equiangular_grid_for(n);
  return equiangular_sphere(rows, cols);
}

/// Minimum pairwise angle (radians) of a viewpoint set.
inline double min_pairwise_angle(const std::vector<Viewpoint>& views) {
  double best = M_PI;
  for (std::size_t i = 0; i < views.size(); ++i)
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      const Vec3& a = views[i].position;
      const Vec3& b = views[j].position;
      best = std::min(best, std::atan2(a.cross(b).norm(), a.dot(b)));
    }
  return best;
}

/// Pinhole camera looking at `target`. Camera space: x right, y up, z towards
/// the viewer; depth is the distance along the viewing axis.
struct Camera {
  Vec3 eye = Vec3(0, 0, 2.4);
  Vec3 target = Vec3::Zero();
  Vec3 up = Vec3::UnitY();
  double fov_y = 0.45;
  int width = 224;
  int height = 224;

  Vec3 forward() const { return (target - eye).normalized(); }
  Vec3 right() const { return forward().cross(up).normalized(); }
  Vec3 true_up() const { return right().cross(forward()); }

  /// World direction to camera space.
  Vec3 to_camera_dir(const Vec3& d) const { return Vec3(d.dot(right()), d.dot(true_up()), -d.dot(forward())); }

  /// Continuous pixel coordinates (col, row) plus depth; pixel (r, c) covers
  /// [c, c+1) x [r, r+1) with (0, 0) at the top-left.
  Vec3 project(const Vec3& p) const {
    const Vec3 f = forward(), r = right(), u = true_up();
    const Vec3 d = p - eye;
    const double depth = d.dot(f);
    const double t = std::tan(0.5 * fov_y);
    const double aspect = static_cast<double>(width) / static_cast<double>(height);
    const double xn = d.dot(r) / depth / (t * aspect);
    const double yn = d.dot(u) / depth / t;
    return Vec3((xn + 1.0) * 0.5 * width, (1.0 - yn) * 0.5 * height, depth);
  }
};

/// Camera on the ray through `v` at `distance`, looking at the origin with
/// +Y up (+Z when the view axis is within 1e-6 of the Y axis).
inline Camera make_camera(const Viewpoint& v, double distance, int resolution, double fov_y = 0.45) {
  if (!(distance > 0.5)) throw Error("make_camera: distance must exceed the normalized object radius 0.5");
  if (resolution <= 0) throw Error("make_camera: resolution must be positive");
  if (!(fov_y > 0.0 && fov_y < M_PI)) throw Error("make_camera: fov must lie in (0, pi)");
  Camera cam;
  cam.eye = distance * v.position;
  cam.target = Vec3::Zero();
  cam.up = v.position.cross(Vec3::UnitY()).norm() < 1e-6 ? Vec3::UnitZ() : Vec3::UnitY();
  cam.fov_y = fov_y;
  cam.width = cam.height = resolution;
  return cam;
}

}  // namespace symmetria
