#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "symmetria/mesh.hpp"

namespace symmetria {

/// Plane n.x + d = 0 with unit n, in the normalized frame.
struct PlaneCoefficients {
  Vec3 normal = Vec3::UnitX();
  double d = 0.0;

  Eigen::Vector4d vector() const { return {normal.x(), normal.y(), normal.z(), d}; }

  static PlaneCoefficients through(const Vec3& point, const Vec3& normal) {
    const Vec3 n = normal.normalized();
    return {n, -n.dot(point)};
  }

  /// Re-expresses a plane given in original coordinates in the normalized frame.
  static PlaneCoefficients from_original(const Vec3& point, const Vec3& normal, const NormalizationInfo& norm) {
    return through(norm.to_normalized(point), normal);
  }

  Vec3 reflect(const Vec3& p) const { return p - 2.0 * (normal.dot(p) + d) * normal; }
};

/// min(|u - v|, |u + v|) over the 4-vector coefficients.
inline double plane_distance(const PlaneCoefficients& u, const PlaneCoefficients& v) {
  const Eigen::Vector4d a = u.vector(), b = v.vector();
  return std::min((a - b).norm(), (a + b).norm());
}

/// Symmetry distance error: mean distance from reflected surface samples to
/// the surface.
inline double sde(const TriangleMesh& mesh, const PlaneCoefficients& plane, std::size_t n = 1000, std::uint64_t seed = 0) {
  if (!is_unit(plane.normal)) throw Error("sde: plane normal is not unit length");
  Rng rng = make_rng(seed, Stream::kMetrics);
  const SurfaceSample s = sample_surface(mesh, n, rng);
  double sum = 0.0;
  for (const auto& p : s.points) sum += point_to_mesh_distance(plane.reflect(p), mesh);
  return sum / static_cast<double>(n);
}

enum class Matching { kExistence, kOneToOne };

struct ThresholdScore {
  double threshold = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f = 0.0;
};

struct FScoreReport {
  std::vector<ThresholdScore> per_threshold;
  double mean_f = 0.0;
};

inline const std::vector<double> kDefaultThresholds{0.05, 0.1, 0.15, 0.2};

namespace detail {

inline bool augment(std::size_t p, const std::vector<std::vector<std::size_t>>& adj, std::vector<char>& seen,
                    std::vector<std::ptrdiff_t>& gt_owner) {
  for (auto g : adj[p]) {
    if (seen[g]) continue;
    seen[g] = 1;
    if (gt_owner[g] < 0 || augment(static_cast<std::size_t>(gt_owner[g]), adj, seen, gt_owner)) {
      gt_owner[g] = static_cast<std::ptrdiff_t>(p);
      return true;
    }
  }
  return false;
}

inline double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

/// A prediction is a true positive when a ground-truth plane lies within
/// δ < threshold. Existence matching lets several predictions share one
/// ground truth; one-to-one uses a maximum bipartite matching.
/// Conventions: nothing predicted and nothing expected gives F = 1; any 0/0
/// precision or recall counts as 0.
inline FScoreReport f_score(const std::vector<PlaneCoefficients>& predicted,
                            const std::vector<PlaneCoefficients>& truth,
                            const std::vector<double>& thresholds = kDefaultThresholds,
                            Matching matching = Matching::kExistence) {
  if (thresholds.empty()) throw Error("f_score: no thresholds");
  FScoreReport rep;
  for (double t : thresholds) {
    ThresholdScore s;
    s.threshold = t;
    if (predicted.empty() && truth.empty()) {
      s.precision = s.recall = s.f = 1.0;
      rep.per_threshold.push_back(s);
      continue;
    }
    std::vector<std::vector<std::size_t>> adj(predicted.size());
    for (std::size_t p = 0; p < predicted.size(); ++p)
      for (std::size_t g = 0; g < truth.size(); ++g)
        if (plane_distance(predicted[p], truth[g]) < t) adj[p].push_back(g);

    if (matching == Matching::kExistence) {
      std::vector<char> hit(truth.size(), 0);
      for (std::size_t p = 0; p < predicted.size(); ++p) {
        if (!adj[p].empty()) ++s.tp;
        for (auto g : adj[p]) hit[g] = 1;
      }
      s.fp = predicted.size() - s.tp;
      s.fn = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 0));
    } else {
      std::vector<std::ptrdiff_t> owner(truth.size(), -1);
      for (std::size_t p = 0; p < predicted.size(); ++p) {
        std::vector<char> seen(truth.size(), 0);
        if (detail::augment(p, adj, seen, owner)) ++s.tp;
      }
      s.fp = predicted.size() - s.tp;
      s.fn = truth.size() - s.tp;
    }
    s.precision = detail::ratio(s.tp, s.tp + s.fp);
    s.recall = detail::ratio(s.tp, s.tp + s.fn);
    s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    rep.per_threshold.push_back(s);
  }
  double sum = 0.0;
  for (const auto& s : rep.per_threshold) sum += s.f;
  rep.mean_f = sum / static_cast<double>(rep.per_threshold.size());
  return rep;
}

/// Smallest sign-folded angle (degrees) between the ground-truth normal and
/// any prediction; infinity when nothing was predicted.
inline double angular_error(const std::vector<Vec3>& predicted, const Vec3& truth) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : predicted) best = std::min(best, line_angle_deg(n, truth));
  return best;
}

/// Fraction of errors at or below each threshold.
inline std::vector<double> angular_error_curve(const std::vector<double>& errors, const std::vector<double>& thresholds) {
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto hit = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    out.push_back(errors.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(errors.size()));
  }
  return out;
}

/// Evenly spaced thresholds lo, lo+step, ..., hi.
inline std::vector<double> threshold_sweep(double lo, double hi, std::size_t count) {
  if (count < 2) return {hi};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

}  // namespace symmetria
