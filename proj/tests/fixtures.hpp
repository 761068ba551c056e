#pragma once

#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "symmetria/symmetria.hpp"

namespace fixtures {

using symmetria::Mat3;
using symmetria::TriangleMesh;
using symmetria::Vec3;

struct Plane {
  Vec3 point;
  Vec3 normal;
};

struct Fixture {
  std::string name;
  std::string family;
  TriangleMesh mesh;
  std::vector<Plane> planes;  // ground truth, same frame as mesh
};

inline std::vector<Plane> axis_planes(const Vec3& c = Vec3::Zero()) {
  return {{c, Vec3::UnitX()}, {c, Vec3::UnitY()}, {c, Vec3::UnitZ()}};
}

inline Fixture l_fixture(const std::string& name, int arm, int thick, double depth) {
  Fixture f{name, "extruded_l", symmetria::shapes::extruded_l(arm, thick, depth), {}};
  const Vec3 c = symmetria::surface_centroid(f.mesh);
  f.planes = {{c, Vec3(1, -1, 0).normalized()}, {c, Vec3::UnitZ()}};
  return f;
}

/// Ten canonical meshes: two variants of each family. The asymmetric
/// control has no plane.
inline std::vector<Fixture> base_fixtures() {
  using namespace symmetria::shapes;
  std::vector<Fixture> out;
  out.push_back({"cube_a", "cube", cube(0.5, 8), axis_planes()});
  out.push_back({"cube_b", "cube", cube(1.5, 5), axis_planes()});
  out.push_back({"box_a", "box", box({0.5, 0.3, 0.18}), axis_planes()});
  out.push_back({"box_b", "box", box({0.45, 0.25, 0.35}, 6), axis_planes()});
  out.push_back({"ellipsoid_a", "ellipsoid", ellipsoid({0.5, 0.35, 0.22}), axis_planes()});
  out.push_back({"ellipsoid_b", "ellipsoid", ellipsoid({0.3, 0.5, 0.4}, 20, 40), axis_planes()});
  out.push_back(l_fixture("l_a", 8, 2, 0.25));
  out.push_back(l_fixture("l_b", 6, 2, 0.4));
  out.push_back({"helix_a", "asymmetric", helix_tube(0.4, 1.1, 1.6), {}});
  out.push_back({"helix_b", "asymmetric", helix_tube(0.4, 1.1, 1.3), {}});
  return out;
}

inline Mat3 random_rotation(symmetria::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

/// Every base fixture under `count` seeded rigid motions (rotation plus a
/// translation in [-2, 2]^3); ground truth moves with the mesh.
inline std::vector<Fixture> rotated_suite(int count = 3, std::uint64_t seed = 2024) {
  symmetria::Rng rng(seed, 77);
  std::vector<Fixture> out;
  for (const auto& f : base_fixtures()) {
    for (int r = 0; r < count; ++r) {
      const Mat3 R = random_rotation(rng);
      const Vec3 t(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
      Fixture g{f.name + "_r" + std::to_string(r), f.family, symmetria::transformed(f.mesh, R, t), {}};
      for (const auto& p : f.planes) g.planes.push_back({R * p.point + t, R * p.normal});
      out.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace fixtures
