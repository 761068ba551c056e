#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <vector>

#include "symmetria/common.hpp"

namespace symmetria {

/// Exact nearest-neighbor index over points with 3 spatial coordinates and
/// FeatureDim feature channels. The matching cost is
///
///   cost(p, q) = |p.xyz - q.xyz|^2 + feature_weight * |p.f - q.f|^2
///
/// with each squared norm accumulated left to right. Queries return the
/// minimum cost exactly as a brute-force scan evaluating the same expression
/// would; ties resolve to the lowest point index.
template <std::size_t FeatureDim>
class KdTree {
 public:
  static constexpr std::size_t kDim = 3 + FeatureDim;
  using Point = std::array<double, kDim>;

  struct Match {
    std::uint32_t index = 0;
    double cost = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  explicit KdTree(std::vector<Point> points, double feature_weight = 1.0)
      : weight_(feature_weight), points_(std::move(points)) {
    if (points_.empty()) throw Error("KdTree: no points");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
    packed_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) packed_[i] = points_[order_[i]];
  }

  std::size_t size() const { return points_.size(); }
  double feature_weight() const { return weight_; }

  double cost(const Point& a, const Point& b) const {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    const double spatial = dx * dx + dy * dy + dz * dz;
    if constexpr (FeatureDim == 0) {
      return spatial;
    } else {
      double feature = 0.0;
      for (std::size_t k = 3; k < kDim; ++k) {
        const double d = a[k] - b[k];
        feature = k == 3 ? d * d : feature + d * d;
      }
      return spatial + weight_ * feature;
    }
  }

  Match nearest(const Point& query) const {
    Match best;
    std::array<double, kDim> offset{};
    search(0, query, best, offset, 0.0);
    return best;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 16;

  struct Node {
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
    std::uint8_t dim = 0;
  };

  double dim_weight(std::size_t d) const { return d < 3 ? 1.0 : weight_; }

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{0.0, begin, end, -1, -1, 0});
    if (end - begin <= kLeafSize) return id;

    std::array<double, kDim> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (auto i = begin; i < end; ++i) {
      const auto& p = points_[order_[i]];
      for (std::size_t d = 0; d < kDim; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
    std::size_t dim = 0;
    double spread = -1.0;
    for (std::size_t d = 0; d < kDim; ++d) {
      const double s = (hi[d] - lo[d]) * (hi[d] - lo[d]) * dim_weight(d);
      if (s > spread) {
        spread = s;
        dim = d;
      }
    }
    if (!(spread > 0.0)) return id;  // all points identical: keep as one leaf

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][dim] < points_[b][dim]; });
    nodes_[id].dim = static_cast<std::uint8_t>(dim);
    nodes_[id].split = points_[order_[mid]][dim];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  // `offset` holds the per-axis distance from the query to the current cell
  // and `bound` their weighted squared sum, a lower bound on the cost of any
  // point in the cell. The relative slack keeps pruning conservative under
  // rounding.
  void search(std::int32_t id, const Point& q, Match& best, std::array<double, kDim>& offset, double bound) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const double c = cost(packed_[i], q);
        const std::uint32_t idx = order_[i];
        if (c < best.cost || (c == best.cost && idx < best.index)) best = {idx, c};
      }
      return;
    }
    const std::size_t d = node.dim;
    const double diff = q[d] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best, offset, bound);
    const double old = offset[d];
    const double far_bound = bound + dim_weight(d) * (diff * diff - old * old);
    if (far_bound <= best.cost * (1.0 + 1e-12)) {
      offset[d] = diff;
      search(far, q, best, offset, far_bound);
      offset[d] = old;
    }
  }

  double weight_ = 1.0;
  std::vector<Point> points_;
  std::vector<Point> packed_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace symmetria
