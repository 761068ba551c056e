#pragma once

#include "symmetria/cloud.hpp"
#include "symmetria/kdtree.hpp"

namespace symmetria {

inline std::vector<KdTree<0>::Point> spatial_points(const PointCloud& c) {
  std::vector<KdTree<0>::Point> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = {c.points[i].x(), c.points[i].y(), c.points[i].z()};
  return out;
}

inline std::vector<KdTree<3>::Point> featured_points(const PointCloud& c, const std::vector<Vec3>& f) {
  std::vector<KdTree<3>::Point> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& p = c.points[i];
    out[i] = {p.x(), p.y(), p.z(), f[i].x(), f[i].y(), f[i].z()};
  }
  return out;
}

/// Mean over `queries` of the minimum cost into `tree`, summed in query order.
template <std::size_t F>
double mean_nearest_cost(const KdTree<F>& tree, const std::vector<typename KdTree<F>::Point>& queries) {
  double sum = 0.0;
  for (const auto& q : queries) sum += tree.nearest(q).cost;
  return sum / static_cast<double>(queries.size());
}

/// Symmetric Chamfer distance: mean squared nearest-neighbor distance from a
/// to b plus the same from b to a.
inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error("chamfer_distance: empty cloud");
  const auto pa = spatial_points(a);
  const auto pb = spatial_points(b);
  const KdTree<0> ta(pa), tb(pb);
  return mean_nearest_cost(tb, pa) + mean_nearest_cost(ta, pb);
}

/// Chamfer distance whose matching cost adds the weighted squared feature
/// distance; the nearest neighbor is the minimizer of the combined cost.
inline double extended_chamfer(const FeaturedCloud& a, const FeaturedCloud& b, double feature_weight = 1.0) {
  if (a.size() == 0 || b.size() == 0) throw Error("extended_chamfer: empty cloud");
  if (a.features.size() != a.size() || b.features.size() != b.size())
    throw Error("extended_chamfer: feature rows do not match point count");
  const auto pa = featured_points(a.cloud, a.features);
  const auto pb = featured_points(b.cloud, b.features);
  const KdTree<3> ta(pa, feature_weight), tb(pb, feature_weight);
  return mean_nearest_cost(tb, pa) + mean_nearest_cost(ta, pb);
}

}  // namespace symmetria
