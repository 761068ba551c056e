#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "symmetria/symmetria.hpp"

namespace gradcheck {

using namespace symmetria;

struct Result {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Nearest (point, feature) match of every reflected point under each
/// normal, by exhaustive search.
inline std::vector<std::vector<std::size_t>> assignments(const std::vector<Vec3>& normals, const FeaturedCloud& fc,
                                                         double weight) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& n : normals) {
    std::vector<std::size_t> match;
    for (std::size_t i = 0; i < fc.size(); ++i) {
      const Vec3 hx = reflect(fc.cloud.points[i], n);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j < fc.size(); ++j) {
        const double c = (hx - fc.cloud.points[j]).squaredNorm() + weight * (fc.features[i] - fc.features[j]).squaredNorm();
        if (c < best) {
          best = c;
          arg = j;
        }
      }
      match.push_back(arg);
    }
    out.push_back(std::move(match));
  }
  return out;
}

/// Activation pattern of the encoder at fixed parameters: ReLU masks per
/// point and layer, and the winning point of every pooled channel.
struct Pattern {
  std::vector<std::vector<Eigen::ArrayXd>> masks;  // [point][layer]
  std::vector<std::size_t> winner;                 // per embedding channel
  std::vector<std::vector<std::size_t>> match;     // [head][point]
};

inline std::vector<Eigen::VectorXd> plain_forward(const ModelParams& params, const Vec3& x,
                                                  const std::vector<Eigen::ArrayXd>* masks) {
  std::vector<Eigen::VectorXd> act{Eigen::VectorXd(x)};
  for (std::size_t k = 0; k < params.encoder.size(); ++k) {
    const Eigen::VectorXd z = params.encoder[k].weight * act.back() + params.encoder[k].bias;
    if (masks)
      act.push_back((z.array() * (*masks)[k]).matrix());
    else
      act.push_back(z.cwiseMax(0.0));
  }
  return act;
}

inline std::vector<Vec3> head_normals(const ModelParams& params, const Eigen::VectorXd& embedding) {
  std::vector<Vec3> out;
  for (const auto& h : params.heads) {
    const Vec3 r = h.weight * embedding + h.bias;
    out.push_back(r / r.norm());
  }
  return out;
}

/// Loss evaluated with a frozen pattern, so it is smooth in the parameters.
/// Each head's term counts both Chamfer directions, which coincide for a
/// reflection.
inline double frozen_loss(const ModelParams& params, const FeaturedCloud& fc, double weight, const Pattern& pat) {
  const std::size_t n = fc.size();
  const auto dim = params.encoder.back().outputs();
  std::vector<Eigen::VectorXd> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = plain_forward(params, fc.cloud.points[i], &pat.masks[i]).back();
  Eigen::VectorXd embedding(dim);
  for (Eigen::Index c = 0; c < dim; ++c) embedding[c] = out[pat.winner[static_cast<std::size_t>(c)]][c];
  const auto normals = head_normals(params, embedding);
  double total = 0.0;
  for (std::size_t h = 0; h < normals.size(); ++h) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = pat.match[h][i];
      sum += (reflect(fc.cloud.points[i], normals[h]) - fc.cloud.points[j]).squaredNorm() +
             weight * (fc.features[i] - fc.features[j]).squaredNorm();
    }
    total += 2.0 * sum / static_cast<double>(n);
  }
  double reg = 0.0;
  for (std::size_t a = 0; a < normals.size(); ++a)
    for (std::size_t b = 0; b < normals.size(); ++b) {
      const double e = std::abs(normals[a].dot(normals[b])) - (a == b ? 1.0 : 0.0);
      reg += e * e;
    }
  return total + std::sqrt(reg);
}

inline Pattern pattern_at(const ModelParams& params, const FeaturedCloud& fc, double weight) {
  Pattern pat;
  const auto dim = params.encoder.back().outputs();
  std::vector<Eigen::VectorXd> out;
  for (const auto& x : fc.cloud.points) {
    const auto act = plain_forward(params, x, nullptr);
    std::vector<Eigen::ArrayXd> masks;
    for (std::size_t k = 0; k < params.encoder.size(); ++k) {
      const Eigen::VectorXd z = params.encoder[k].weight * act[k] + params.encoder[k].bias;
      masks.push_back((z.array() > 0.0).cast<double>());
    }
    pat.masks.push_back(std::move(masks));
    out.push_back(act.back());
  }
  Eigen::VectorXd embedding(dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i][c] > out[best][c]) best = i;
    pat.winner.push_back(best);
    embedding[c] = out[best][c];
  }
  pat.match = assignments(head_normals(params, embedding), fc, weight);
  return pat;
}

/// Central differences of the frozen-pattern loss against every parameter,
/// compared with the analytic gradient. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline Result check(const ModelParams& params, const FeaturedCloud& fc, const LossOptions& opt = {}, double step = 1e-4,
                    double floor = 1e-6) {
  const Eigen::VectorXd analytic = backward(params, fc, opt).gradients.flatten();
  const Pattern pat = pattern_at(params, fc, opt.feature_weight);
  const Eigen::VectorXd base = params.flatten();
  ModelParams probe = params;
  Result r;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Eigen::VectorXd p = base;
    p[i] = base[i] + step;
    probe.unflatten(p);
    const double up = frozen_loss(probe, fc, opt.feature_weight, pat);
    p[i] = base[i] - step;
    probe.unflatten(p);
    const double down = frozen_loss(probe, fc, opt.feature_weight, pat);
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    if (err > r.max_relative_error) r = {err, static_cast<std::size_t>(i), analytic[i], numeric};
  }
  return r;
}

/// Random 32-point cloud with random features and a small model, from one seed.
struct Config {
  ModelParams params;
  FeaturedCloud cloud;
};

inline Config random_config(std::uint64_t seed, std::size_t points = 32) {
  Rng rng(seed, 91);
  Config c;
  c.params = init_model(ModelConfig{{3, 16, 32}, 3}, seed);
  for (std::size_t i = 0; i < points; ++i) {
    c.cloud.cloud.points.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    c.cloud.features.emplace_back(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
  }
  return c;
}

}  // namespace gradcheck
