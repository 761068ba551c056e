#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "symmetria/chamfer.hpp"
#include "symmetria/mesh.hpp"
#include "symmetria/raster.hpp"

namespace symmetria {

/// Patch-level features of one (view, rotation) image. Patch (i, j) covers
/// pixels [i*P, (i+1)*P) x [j*P, (j+1)*P); its center sits at pixel
/// coordinate i*P + (P-1)/2 when pixel centers are at integer coordinates.
struct PatchFeatureGrid {
  std::uint32_t view_id = 0;
  std::uint32_t rotation_k = 0;
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::uint32_t dim = 0;
  std::uint32_t patch_size = 1;
  std::vector<float> data;  // row-major h x w x dim

  float& at(std::size_t i, std::size_t j, std::size_t d) { return data[(i * w + j) * dim + d]; }
  float at(std::size_t i, std::size_t j, std::size_t d) const { return data[(i * w + j) * dim + d]; }

  friend bool operator==(const PatchFeatureGrid&, const PatchFeatureGrid&) = default;
};

/// Bilinear blend of the four patch centers around pixel (row, col); pixel
/// coordinates are continuous with pixel centers at integers, and positions
/// outside the outermost centers clamp to the border patches.
inline Eigen::VectorXd bilinear_upsample(const PatchFeatureGrid& grid, double row, double col) {
  const double height = static_cast<double>(grid.h) * grid.patch_size;
  const double width = static_cast<double>(grid.w) * grid.patch_size;
  if (!(row >= 0.0 && col >= 0.0 && row <= height - 1.0 && col <= width - 1.0))
    throw Error("bilinear_upsample: pixel outside the image");
  const double half = 0.5 * (static_cast<double>(grid.patch_size) - 1.0);
  auto axis = [&](double p, std::uint32_t n) {
    const double g = std::clamp((p - half) / grid.patch_size, 0.0, static_cast<double>(n - 1));
    const auto i0 = static_cast<std::uint32_t>(std::floor(g));
    const auto i1 = std::min(i0 + 1, n - 1);
    return std::tuple{i0, i1, g - i0};
  };
  const auto [y0, y1, ty] = axis(row, grid.h);
  const auto [x0, x1, tx] = axis(col, grid.w);
  Eigen::VectorXd out(grid.dim);
  for (std::uint32_t d = 0; d < grid.dim; ++d) {
    const double top = (1.0 - tx) * grid.at(y0, x0, d) + tx * grid.at(y0, x1, d);
    const double bottom = (1.0 - tx) * grid.at(y1, x0, d) + tx * grid.at(y1, x1, d);
    out[d] = (1.0 - ty) * top + ty * bottom;
  }
  return out;
}

/// Per-vertex mean of back-projected features. Rows of unobserved vertices
/// (count 0) are zero.
struct VertexFeatureField {
  Eigen::MatrixXd features;  // vertex_count x D
  std::vector<std::uint32_t> counts;

  bool observed(std::size_t v) const { return counts[v] > 0; }
  std::size_t observed_count() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }
};

/// Accumulates back-projected features view by view.
class FeatureAccumulator {
 public:
  explicit FeatureAccumulator(std::size_t vertex_count) : vertex_count_(vertex_count), counts_(vertex_count, 0) {}

  void add(const RenderBuffer& buffer, const PatchFeatureGrid& grid) {
    if (buffer.view_id != grid.view_id || buffer.rotation_k != grid.rotation_k)
      throw Error("backproject: buffer (view " + std::to_string(buffer.view_id) + ", k " +
                  std::to_string(buffer.rotation_k) + ") paired with grid (view " + std::to_string(grid.view_id) +
                  ", k " + std::to_string(grid.rotation_k) + ")");
    if (static_cast<long>(grid.h) * grid.patch_size != buffer.height ||
        static_cast<long>(grid.w) * grid.patch_size != buffer.width)
      throw Error("backproject: grid shape does not cover the rendered resolution");
    if (sums_.size() == 0) sums_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vertex_count_), grid.dim);
    if (static_cast<std::uint32_t>(sums_.cols()) != grid.dim) throw Error("backproject: feature width changed between views");
    for (const auto& hit : buffer.hits) {
      if (hit.vertex >= vertex_count_) throw Error("backproject: hit references an unknown vertex");
      sums_.row(hit.vertex) += bilinear_upsample(grid, hit.row, hit.col).transpose();
      ++counts_[hit.vertex];
    }
  }

  VertexFeatureField finish() const {
    VertexFeatureField field;
    field.features = sums_.size() ? sums_ : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vertex_count_), 0);
    field.counts = counts_;
    for (std::size_t v = 0; v < vertex_count_; ++v)
      if (counts_[v] > 0) field.features.row(static_cast<Eigen::Index>(v)) /= static_cast<double>(counts_[v]);
    return field;
  }

 private:
  std::size_t vertex_count_;
  Eigen::MatrixXd sums_;
  std::vector<std::uint32_t> counts_;
};

struct ViewFeatures {
  const RenderBuffer* buffer = nullptr;
  const PatchFeatureGrid* grid = nullptr;
};

/// Averages, per vertex, the upsampled feature at every pixel where the vertex
/// was seen. Views are reduced in (view id, rotation) order, so the result
/// does not depend on the order of `views`.
inline VertexFeatureField backproject(std::vector<ViewFeatures> views, std::size_t vertex_count) {
  std::sort(views.begin(), views.end(), [](const ViewFeatures& a, const ViewFeatures& b) {
    return std::tie(a.buffer->view_id, a.buffer->rotation_k) < std::tie(b.buffer->view_id, b.buffer->rotation_k);
  });
  for (std::size_t i = 1; i < views.size(); ++i)
    if (views[i].buffer->view_id == views[i - 1].buffer->view_id &&
        views[i].buffer->rotation_k == views[i - 1].buffer->rotation_k)
      throw Error("backproject: duplicate (view, rotation) pair");
  FeatureAccumulator acc(vertex_count);
  for (const auto& v : views) acc.add(*v.buffer, *v.grid);
  return acc.finish();
}

inline constexpr std::uint32_t kProxyDim = 6;

/// Built-in 6-channel patch descriptor over foreground pixels: mean
/// camera-space normal (3), mean normalized inverse depth, foreground
/// coverage, depth variance. Empty patches are zero.
inline PatchFeatureGrid proxy_descriptor(const RenderBuffer& buffer, std::uint32_t patch_size = 14) {
  if (patch_size == 0 || buffer.height % patch_size != 0 || buffer.width % patch_size != 0)
    throw Error("proxy_descriptor: patch size must divide the resolution");
  PatchFeatureGrid grid;
  grid.view_id = buffer.view_id;
  grid.rotation_k = buffer.rotation_k;
  grid.h = static_cast<std::uint32_t>(buffer.height) / patch_size;
  grid.w = static_cast<std::uint32_t>(buffer.width) / patch_size;
  grid.dim = kProxyDim;
  grid.patch_size = patch_size;
  grid.data.assign(static_cast<std::size_t>(grid.h) * grid.w * grid.dim, 0.0f);

  // Inverse depth mapped to [0, 1] over the normalized object's depth range.
  const double dist = (buffer.camera.eye - buffer.camera.target).norm();
  const double inv_far = 1.0 / (dist + 0.5);
  const double inv_near = 1.0 / std::max(dist - 0.5, 1e-6);

  for (std::uint32_t i = 0; i < grid.h; ++i)
    for (std::uint32_t j = 0; j < grid.w; ++j) {
      Vec3 normal = Vec3::Zero();
      double inv = 0.0, sum = 0.0, sum_sq = 0.0;
      std::size_t fg = 0;
      for (std::uint32_t r = i * patch_size; r < (i + 1) * patch_size; ++r)
        for (std::uint32_t c = j * patch_size; c < (j + 1) * patch_size; ++c) {
          const auto p = buffer.pixel(static_cast<int>(r), static_cast<int>(c));
          const double z = buffer.depth[p];
          if (!std::isfinite(z)) continue;
          ++fg;
          normal += buffer.normal[p];
          inv += (1.0 / z - inv_far) / (inv_near - inv_far);
          sum += z;
          sum_sq += z * z;
        }
      if (fg == 0) continue;
      const double n = static_cast<double>(fg);
      const double mean = sum / n;
      const double values[kProxyDim] = {normal.x() / n,
                                        normal.y() / n,
                                        normal.z() / n,
                                        inv / n,
                                        n / (static_cast<double>(patch_size) * patch_size),
                                        std::max(0.0, sum_sq / n - mean * mean)};
      for (std::uint32_t d = 0; d < kProxyDim; ++d) grid.at(i, j, d) = static_cast<float>(values[d]);
    }
  return grid;
}

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // D x 3, orthonormal columns (zero columns when padded)
  Vec3 component_scales = Vec3::Zero();  // standard deviation of each component
  int rank = 0;
  double output_scale = 1.0;
};

struct PcaResult {
  std::vector<Vec3> features;  // one per vertex
  PcaModel model;
};

/// Projects observed vertex features onto their top-3 principal components,
/// whitens each component and scales it by `output_scale` (the object's RMS
/// point radius). Unobserved vertices copy the nearest observed vertex.
/// Components beyond the numerical rank are zero and reported via `diag`.
inline PcaResult pca_reduce(const VertexFeatureField& field, const std::vector<Vec3>& vertices, double output_scale,
                            Diagnostics* diag = nullptr) {
  const auto nv = static_cast<std::size_t>(field.features.rows());
  if (nv != vertices.size() || field.counts.size() != nv) throw Error("pca_reduce: field does not match vertex count");
  const auto D = field.features.cols();

  std::vector<std::size_t> observed;
  for (std::size_t v = 0; v < nv; ++v)
    if (field.observed(v)) observed.push_back(v);

  PcaResult out;
  out.model.output_scale = output_scale;
  out.model.mean = Eigen::VectorXd::Zero(D);
  out.model.basis = Eigen::MatrixXd::Zero(D, 3);
  out.features.assign(nv, Vec3::Zero());
  if (observed.empty() || D == 0) {
    warn(diag, "pca_reduce: no observed vertices; features set to zero");
    return out;
  }

  const auto m = static_cast<double>(observed.size());
  for (auto v : observed) out.model.mean += field.features.row(static_cast<Eigen::Index>(v)).transpose();
  out.model.mean /= m;
  Eigen::MatrixXd centered(static_cast<Eigen::Index>(observed.size()), D);
  for (std::size_t i = 0; i < observed.size(); ++i)
    centered.row(static_cast<Eigen::Index>(i)) =
        field.features.row(static_cast<Eigen::Index>(observed[i])) - out.model.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / m;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("pca_reduce: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double top = values[D - 1];
  int rank = 0;
  for (int c = 0; c < 3 && c < D; ++c) {
    const double lambda = values[D - 1 - c];
    if (!(top > 0.0) || !(lambda > 1e-10 * top)) break;
    Eigen::VectorXd b = eig.eigenvectors().col(D - 1 - c);
    Eigen::Index arg;
    b.cwiseAbs().maxCoeff(&arg);
    if (b[arg] < 0.0) b = -b;
    out.model.basis.col(c) = b;
    out.model.component_scales[c] = std::sqrt(lambda);
    ++rank;
  }
  out.model.rank = rank;
  if (rank < 3) warn(diag, "pca_reduce: feature rank " + std::to_string(rank) + " < 3; missing components are zero");

  for (auto v : observed) {
    const Eigen::VectorXd x = field.features.row(static_cast<Eigen::Index>(v)).transpose() - out.model.mean;
    for (int c = 0; c < rank; ++c)
      out.features[v][c] = x.dot(out.model.basis.col(c)) / out.model.component_scales[c] * output_scale;
  }

  if (observed.size() < nv) {
    PointCloud seen;
    for (auto v : observed) seen.points.push_back(vertices[v]);
    const KdTree<0> tree(spatial_points(seen));
    for (std::size_t v = 0; v < nv; ++v) {
      if (field.observed(v)) continue;
      const auto match = tree.nearest({vertices[v].x(), vertices[v].y(), vertices[v].z()});
      out.features[v] = out.features[observed[match.index]];
    }
  }
  return out;
}

/// Barycentric blend of the three corner features of each sample's triangle.
inline std::vector<Vec3> transfer_to_samples(const std::vector<Vec3>& vertex_features, const TriangleMesh& mesh,
                                             const std::vector<BarycentricRecord>& records) {
  if (vertex_features.size() != mesh.vertices.size())
    throw Error("transfer_to_samples: one feature per vertex required");
  std::vector<Vec3> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.triangle >= mesh.triangles.size()) throw Error("transfer_to_samples: invalid triangle reference");
    const auto& t = mesh.triangles[r.triangle];
    out.push_back(r.weights[0] * vertex_features[t[0]] + r.weights[1] * vertex_features[t[1]] +
                  r.weights[2] * vertex_features[t[2]]);
  }
  return out;
}

/// Root-mean-square distance of the points from the origin.
inline double rms_radius(const std::vector<Vec3>& points) {
  if (points.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : points) s += p.squaredNorm();
  return std::sqrt(s / static_cast<double>(points.size()));
}

}  // namespace symmetria
