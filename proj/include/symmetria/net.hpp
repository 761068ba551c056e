#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "symmetria/chamfer.hpp"
#include "symmetria/cloud.hpp"

namespace symmetria {

/// Fully connected layer y = W x + b; W is out x in.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  Eigen::Index inputs() const { return weight.cols(); }
  Eigen::Index outputs() const { return weight.rows(); }
};

struct ModelConfig {
  std::vector<int> widths{3, 64, 128, 256};  // per-point MLP, first entry must be 3
  int heads = 3;

  int embedding_dim() const { return widths.back(); }
};

/// Shared per-point MLP with ReLU activations followed by a coordinate-wise
/// max over points, plus one linear 3-output head per plane.
struct ModelParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> heads;

  ModelConfig config() const {
    ModelConfig c;
    c.widths.clear();
    if (!encoder.empty()) c.widths.push_back(static_cast<int>(encoder.front().inputs()));
    for (const auto& l : encoder) c.widths.push_back(static_cast<int>(l.outputs()));
    c.heads = static_cast<int>(heads.size());
    return c;
  }

  template <typename F>
  void for_each_layer(F&& f) {
    for (auto& l : encoder) f(l);
    for (auto& l : heads) f(l);
  }
  template <typename F>
  void for_each_layer(F&& f) const {
    for (const auto& l : encoder) f(l);
    for (const auto& l : heads) f(l);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_layer([&](const DenseLayer& l) { n += static_cast<std::size_t>(l.weight.size() + l.bias.size()); });
    return n;
  }

  /// Parameters in declared order: encoder layers then heads, each as its
  /// weight in row-major order followed by its bias.
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for_each_layer([&](const DenseLayer& l) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out[k++] = l.weight(r, c);
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) out[k++] = l.bias[r];
    });
    return out;
  }

  void unflatten(const Eigen::VectorXd& values) {
    if (static_cast<std::size_t>(values.size()) != parameter_count()) throw Error("unflatten: parameter count mismatch");
    Eigen::Index k = 0;
    for_each_layer([&](DenseLayer& l) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = values[k++];
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = values[k++];
    });
  }

  /// Same shapes, all zero.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.for_each_layer([](DenseLayer& l) {
      l.weight.setZero();
      l.bias.setZero();
    });
    return z;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_layer([&](const DenseLayer& l) { ok = ok && l.weight.allFinite() && l.bias.allFinite(); });
    return ok;
  }
};

using ModelGradients = ModelParams;

/// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.widths.size() < 2 || config.widths.front() != 3) throw Error("init_model: widths must start at 3");
  if (config.heads < 1) throw Error("init_model: at least one head required");
  Rng rng = make_rng(seed, Stream::kInit);
  auto make = [&](int in, int out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.weight(r, c) = rng.uniform(-bound, bound);
    for (int r = 0; r < out; ++r) l.bias[r] = rng.uniform(-bound, bound);
    return l;
  };
  ModelParams p;
  for (std::size_t i = 1; i < config.widths.size(); ++i) p.encoder.push_back(make(config.widths[i - 1], config.widths[i]));
  for (int h = 0; h < config.heads; ++h) p.heads.push_back(make(config.embedding_dim(), 3));
  return p;
}

namespace detail {

/// z = W a + b followed by ReLU, accumulated input by input so that each
/// point's output is independent of every other point.
inline void dense_relu(const DenseLayer& layer, const double* a, double* z, double* out) {
  const Eigen::Index n_out = layer.outputs();
  const Eigen::Index n_in = layer.inputs();
  const double* b = layer.bias.data();
  for (Eigen::Index j = 0; j < n_out; ++j) z[j] = b[j];
  for (Eigen::Index k = 0; k < n_in; ++k) {
    const double ak = a[k];
    if (ak == 0.0) continue;
    const double* w = layer.weight.data() + k * n_out;  // column k
    for (Eigen::Index j = 0; j < n_out; ++j) z[j] += w[j] * ak;
  }
  for (Eigen::Index j = 0; j < n_out; ++j) out[j] = z[j] > 0.0 ? z[j] : 0.0;
}

/// Pre- and post-activation values of every encoder layer for one point.
struct PointTrace {
  std::vector<Eigen::VectorXd> z, a;  // a[0] is the input point
};

inline PointTrace trace_point(const std::vector<DenseLayer>& encoder, const Vec3& p) {
  PointTrace t;
  t.a.emplace_back(p);
  for (const auto& layer : encoder) {
    Eigen::VectorXd z(layer.outputs()), a(layer.outputs());
    dense_relu(layer, t.a.back().data(), z.data(), a.data());
    t.z.push_back(std::move(z));
    t.a.push_back(std::move(a));
  }
  return t;
}

}  // namespace detail

/// Global embedding and, per channel, the first point attaining the max.
struct Embedding {
  Eigen::VectorXd values;
  std::vector<std::uint32_t> argmax;
};

namespace detail {

inline constexpr int kBlock = 8;  // points per block
inline constexpr int kLanes = 8;  // doubles per vector
inline constexpr int kTile = 2;   // vectors of outputs per register tile

using Lane = double __attribute__((vector_size(kLanes * sizeof(double))));

/// dense_relu for kBlock points at once (rows of `a` and `out` have stride
/// `stride`). Every point sees exactly the operations of dense_relu in the
/// same order, so results match it bitwise; only the skipped zero inputs
/// differ, and those change nothing after the rectifier.
inline void dense_relu_block(const DenseLayer& layer, const double* a, double* out, std::size_t stride) {
  const Eigen::Index n_out = layer.outputs();
  const Eigen::Index n_in = layer.inputs();
  const double* W = layer.weight.data();
  const double* b = layer.bias.data();
  constexpr Eigen::Index span = kTile * kLanes;
  Eigen::Index j0 = 0;
  for (; j0 + span <= n_out; j0 += span) {
    Lane acc[kBlock][kTile];
    for (int t = 0; t < kTile; ++t) {
      Lane bias;
      std::memcpy(&bias, b + j0 + t * kLanes, sizeof(Lane));
      for (int p = 0; p < kBlock; ++p) acc[p][t] = bias;
    }
    for (Eigen::Index k = 0; k < n_in; ++k) {
      Lane w[kTile];
      std::memcpy(&w, W + k * n_out + j0, sizeof(w));
      for (int p = 0; p < kBlock; ++p) {
        const double ak = a[p * stride + static_cast<std::size_t>(k)];
        for (int t = 0; t < kTile; ++t) acc[p][t] += w[t] * ak;
      }
    }
    for (int p = 0; p < kBlock; ++p)
      for (int t = 0; t < kTile; ++t)
        for (int j = 0; j < kLanes; ++j) {
          const double z = acc[p][t][j];
          out[p * stride + static_cast<std::size_t>(j0 + t * kLanes + j)] = z > 0.0 ? z : 0.0;
        }
  }
  for (; j0 < n_out; ++j0)
    for (int p = 0; p < kBlock; ++p) {
      double z = b[j0];
      for (Eigen::Index k = 0; k < n_in; ++k) z += W[k * n_out + j0] * a[p * stride + static_cast<std::size_t>(k)];
      out[p * stride + static_cast<std::size_t>(j0)] = z > 0.0 ? z : 0.0;
    }
}

}  // namespace detail

inline Embedding encode(const std::vector<DenseLayer>& encoder, const PointCloud& cloud) {
  if (cloud.empty()) throw Error("encode: empty cloud");
  if (encoder.empty()) throw Error("encode: encoder has no layers");
  Eigen::Index widest = 3;
  for (const auto& l : encoder) widest = std::max(widest, l.outputs());
  const auto stride = static_cast<std::size_t>(widest);
  std::vector<double> buf_a(stride * detail::kBlock), buf_b(stride * detail::kBlock);

  const Eigen::Index dim = encoder.back().outputs();
  Embedding e;
  e.values = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  e.argmax.assign(static_cast<std::size_t>(dim), 0);
  for (std::size_t i0 = 0; i0 < cloud.size(); i0 += detail::kBlock) {
    const std::size_t count = std::min<std::size_t>(detail::kBlock, cloud.size() - i0);
    for (int p = 0; p < detail::kBlock; ++p) {
      // A short final block repeats its last point; the copies are ignored.
      const Vec3& x = cloud.points[i0 + std::min<std::size_t>(static_cast<std::size_t>(p), count - 1)];
      for (int c = 0; c < 3; ++c) buf_a[p * stride + static_cast<std::size_t>(c)] = x[c];
    }
    double* in = buf_a.data();
    double* out = buf_b.data();
    for (const auto& layer : encoder) {
      detail::dense_relu_block(layer, in, out, stride);
      std::swap(in, out);
    }
    for (std::size_t p = 0; p < count; ++p) {
      const double* v = in + p * stride;
      for (Eigen::Index c = 0; c < dim; ++c)
        if (v[c] > e.values[c]) {
          e.values[c] = v[c];
          e.argmax[static_cast<std::size_t>(c)] = static_cast<std::uint32_t>(i0 + p);
        }
    }
  }
  return e;
}

inline Embedding encode(const ModelParams& params, const PointCloud& cloud) { return encode(params.encoder, cloud); }

struct Prediction {
  Embedding embedding;
  std::vector<Vec3> raw;
  std::vector<Vec3> normals;
  std::vector<bool> degenerate;
};

inline constexpr double kDegenerateNorm = 1e-8;

/// Head outputs divided by their norm; a head whose raw norm is below 1e-8
/// reports +X and sets its degeneracy flag.
inline Prediction predict_normals(const ModelParams& params, const PointCloud& cloud) {
  Prediction pred;
  pred.embedding = encode(params, cloud);
  for (const auto& head : params.heads) {
    const Vec3 r = head.weight * pred.embedding.values + head.bias;
    pred.raw.push_back(r);
    const double n = r.norm();
    const bool bad = !(n >= kDegenerateNorm) || !r.allFinite();
    pred.degenerate.push_back(bad);
    pred.normals.push_back(bad ? Vec3::UnitX() : Vec3(r / n));
  }
  return pred;
}

/// Reflection matrix I - 2 n n^T for a unit normal.
inline Mat3 householder(const Vec3& n) {
  if (!is_unit(n)) throw Error("householder: normal is not unit length");
  return Mat3::Identity() - 2.0 * n * n.transpose();
}

/// Frobenius norm of |M^T M| - I for the unit normals stacked as columns of M.
inline double orthogonality_penalty(const std::vector<Vec3>& normals) {
  double s = 0.0;
  for (std::size_t a = 0; a < normals.size(); ++a)
    for (std::size_t b = 0; b < normals.size(); ++b) {
      const double e = std::abs(normals[a].dot(normals[b])) - (a == b ? 1.0 : 0.0);
      s += e * e;
    }
  return std::sqrt(s);
}

struct LossOptions {
  double feature_weight = 1.0;  // lambda on the feature term of the matching cost
  bool regularize = true;
};

struct LossReport {
  double total = 0.0;
  double congruence = 0.0;
  double regularizer = 0.0;
  std::vector<double> head_residuals;  // extended Chamfer of each head
  Prediction prediction;
};

namespace detail {

/// Loss and (optionally) exact gradients with nearest-neighbor assignments
/// held at their forward values.
///
/// Reflections are isometric involutions, so |x - H x'| = |H x - x'|. Both
/// directions of the extended Chamfer between (O, F) and its reflection
/// (which keeps F) therefore equal the same sum: for each x, the best match
/// of (H x, F_x) among (O, F). One index over (O, F) serves every head.
inline LossReport evaluate(const ModelParams& params, const FeaturedCloud& fc, const LossOptions& opt,
                           ModelGradients* grad) {
  fc.validate();
  LossReport rep;
  rep.prediction = predict_normals(params, fc.cloud);
  const auto& pred = rep.prediction;
  const std::size_t l = params.heads.size();
  const std::size_t n = fc.size();

  const KdTree<3> tree(featured_points(fc.cloud, fc.features), opt.feature_weight);
  std::vector<Vec3> d_normals(l, Vec3::Zero());
  const double scale = 2.0 / static_cast<double>(n);

  for (std::size_t h = 0; h < l; ++h) {
    const Vec3& N = pred.normals[h];
    double sum = 0.0;
    Vec3 dn = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& x = fc.cloud.points[i];
      const double xn = x.dot(N);
      const Vec3 hx = x - 2.0 * xn * N;
      const Vec3& f = fc.features[i];
      const auto m = tree.nearest({hx.x(), hx.y(), hx.z(), f.x(), f.y(), f.z()});
      sum += m.cost;
      if (grad) {
        const Vec3 g = 2.0 * (hx - fc.cloud.points[m.index]);
        // d(Hx)/dN = -2 [ (x.N) I + N x^T ]
        dn += -2.0 * (xn * g + x * N.dot(g));
      }
    }
    rep.head_residuals.push_back(scale * sum);
    rep.congruence += scale * sum;
    if (grad) d_normals[h] = scale * dn;
  }

  if (opt.regularize) {
    rep.regularizer = orthogonality_penalty(pred.normals);
    if (grad && rep.regularizer > 0.0) {
      for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = 0; b < l; ++b) {
          const double g = pred.normals[a].dot(pred.normals[b]);
          const double e = std::abs(g) - (a == b ? 1.0 : 0.0);
          const double sgn = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
          const double dg = e * sgn / rep.regularizer;
          d_normals[a] += dg * pred.normals[b];
          d_normals[b] += dg * pred.normals[a];
        }
    }
  }
  rep.total = rep.congruence + rep.regularizer;
  if (!grad) return rep;

  *grad = params.zeros_like();
  const Eigen::Index dim = pred.embedding.values.size();
  Eigen::VectorXd d_embed = Eigen::VectorXd::Zero(dim);
  for (std::size_t h = 0; h < l; ++h) {
    if (pred.degenerate[h]) continue;
    const Vec3& N = pred.normals[h];
    const Vec3 dr = (d_normals[h] - N * N.dot(d_normals[h])) / pred.raw[h].norm();
    grad->heads[h].weight += dr * pred.embedding.values.transpose();
    grad->heads[h].bias += dr;
    d_embed += params.heads[h].weight.transpose() * dr;
  }

  // Max pooling routes each channel's gradient to its argmax point.
  std::map<std::uint32_t, std::vector<Eigen::Index>> by_point;
  for (Eigen::Index c = 0; c < dim; ++c)
    if (d_embed[c] != 0.0) by_point[pred.embedding.argmax[static_cast<std::size_t>(c)]].push_back(c);
  if (by_point.empty()) return rep;

  // Backpropagate all routed points together, one column per point.
  const std::size_t depth = params.encoder.size();
  const auto cols = static_cast<Eigen::Index>(by_point.size());
  std::vector<Eigen::MatrixXd> A(depth + 1), Z(depth);
  A[0].resize(3, cols);
  for (std::size_t k = 0; k < depth; ++k) {
    A[k + 1].resize(params.encoder[k].outputs(), cols);
    Z[k].resize(params.encoder[k].outputs(), cols);
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim, cols);
  Eigen::Index col = 0;
  for (const auto& [point, channels] : by_point) {
    const PointTrace t = trace_point(params.encoder, fc.cloud.points[point]);
    for (std::size_t k = 0; k <= depth; ++k) A[k].col(col) = t.a[k];
    for (std::size_t k = 0; k < depth; ++k) Z[k].col(col) = t.z[k];
    for (auto c : channels) D(c, col) = d_embed[c];
    ++col;
  }
  for (std::size_t k = depth; k-- > 0;) {
    const Eigen::MatrixXd dz = (Z[k].array() > 0.0).select(D, 0.0);
    grad->encoder[k].weight.noalias() += dz * A[k].transpose();
    grad->encoder[k].bias += dz.rowwise().sum();
    if (k > 0) D.noalias() = params.encoder[k].weight.transpose() * dz;
  }
  return rep;
}

}  // namespace detail

/// Total loss: sum over heads of the extended Chamfer between the cloud and
/// its reflection (reflected points keep their features), plus the
/// orthogonality penalty on the predicted normals.
inline LossReport forward_loss(const ModelParams& params, const FeaturedCloud& fc, const LossOptions& opt = {}) {
  return detail::evaluate(params, fc, opt, nullptr);
}

struct LossAndGradients {
  LossReport loss;
  ModelGradients gradients;
};

inline LossAndGradients backward(const ModelParams& params, const FeaturedCloud& fc, const LossOptions& opt = {}) {
  LossAndGradients out;
  out.loss = detail::evaluate(params, fc, opt, &out.gradients);
  return out;
}

}  // namespace symmetria
