#pragma once

#include <limits>
#include <string>
#include <vector>

#include "symmetria/metrics.hpp"
#include "symmetria/report.hpp"

namespace symmetria {

struct EvalOptions {
  std::vector<double> thresholds = kDefaultThresholds;
  Matching matching = Matching::kExistence;
  std::size_t sde_samples = 1000;
  std::uint64_t seed = 0;
};

struct ObjectEval {
  std::string name;
  std::vector<double> sde;             // one per predicted plane
  FScoreReport f;
  std::vector<double> angular_errors;  // one per ground-truth plane, degrees
  std::size_t predicted = 0;
  std::size_t truth = 0;

  double mean_sde() const {
    if (sde.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : sde) s += v;
    return s / static_cast<double>(sde.size());
  }
};

/// Scores predicted normals (normalized frame, planes through the origin)
/// against ground-truth planes given in original coordinates.
inline ObjectEval evaluate_object(const std::string& name, const TriangleMesh& normalized,
                                  const NormalizationInfo& norm, const std::vector<Vec3>& predicted,
                                  const std::vector<GroundTruthPlane>& truth, const EvalOptions& opt = {}) {
  ObjectEval e;
  e.name = name;
  e.predicted = predicted.size();
  e.truth = truth.size();
  std::vector<PlaneCoefficients> pred, gt;
  for (const auto& n : predicted) pred.push_back(PlaneCoefficients{n.normalized(), 0.0});
  for (const auto& g : truth) gt.push_back(PlaneCoefficients::from_original(g.point, g.normal, norm));
  for (const auto& p : pred) e.sde.push_back(sde(normalized, p, opt.sde_samples, opt.seed));
  e.f = f_score(pred, gt, opt.thresholds, opt.matching);
  for (const auto& g : gt) e.angular_errors.push_back(angular_error(predicted, g.normal));
  return e;
}

}  // namespace symmetria
