#pragma once

#include <vector>

#include "symmetria/common.hpp"

namespace symmetria {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Points with one 3-channel feature per point.
struct FeaturedCloud {
  PointCloud cloud;
  std::vector<Vec3> features;

  std::size_t size() const { return cloud.size(); }

  /// Same points with all-zero features.
  static FeaturedCloud plain(PointCloud cloud) {
    FeaturedCloud out;
    out.features.assign(cloud.size(), Vec3::Zero());
    out.cloud = std::move(cloud);
    return out;
  }

  void validate() const {
    if (cloud.empty()) throw Error("featured cloud is empty");
    if (features.size() != cloud.size()) {
      throw Error("feature rows (" + std::to_string(features.size()) + ") do not match point count (" +
                  std::to_string(cloud.size()) + ")");
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!cloud.points[i].allFinite() || !features[i].allFinite())
        throw Error("featured cloud has a non-finite entry at row " + std::to_string(i));
    }
  }

  /// Rows `indices` of this cloud, in the given order.
  FeaturedCloud select(const std::vector<std::uint32_t>& indices) const {
    FeaturedCloud out;
    out.cloud.points.reserve(indices.size());
    out.features.reserve(indices.size());
    for (auto i : indices) {
      out.cloud.points.push_back(cloud.points[i]);
      out.features.push_back(features[i]);
    }
    return out;
  }
};

inline Vec3 reflect(const Vec3& p, const Vec3& n) { return p - 2.0 * p.dot(n) * n; }

/// Reflection across the plane through the origin with unit normal n.
inline PointCloud reflect_points(const PointCloud& cloud, const Vec3& n) {
  if (!is_unit(n)) throw Error("reflect_points: normal is not unit length");
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(reflect(p, n));
  return out;
}

}  // namespace symmetria
