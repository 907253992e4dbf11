// Copyright 2026 The simready Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes the procedural articulated-object corpus under data/corpus.
//
// Each asset directory holds part_<k>.obj (metres, shared frame) and
// asset.template.json, a spec without geometry whose joints are already in
// the voxel frame of the union bounding box at the template resolution.
// Surfaces are tessellated with a uniform target edge length of
// kEdgeFraction times the asset's longest extent.
//
//   make_corpus <output dir>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <fmt/format.h>
#include <json.hpp>

#include "simready/mesh.hpp"

namespace {

using simready::TriMesh;
using simready::Vec3;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = std::numbers::pi;
constexpr double kEdgeFraction = 1.0 / 64.0;
constexpr int kTemplateResolution = 32;

int Steps(double length, double h, int minimum = 1) {
  return std::max(minimum, static_cast<int>(std::ceil(length / h - 1e-9)));
}

Mat3 Basis(const Vec3& axis) {
  const Vec3 a = axis.normalized();
  const Vec3 helper = std::abs(a.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 e1 = helper.cross(a).normalized();
  Mat3 m;
  m.col(0) = e1;
  m.col(1) = a.cross(e1);
  m.col(2) = a;
  return m;
}

class Builder {
 public:
  explicit Builder(double h) : h_(h) {}

  // Grid of (nu x nv) quads spanning origin + [0,1]u + [0,1]v; normal u x v.
  void Grid(const Vec3& origin, const Vec3& u, const Vec3& v) {
    const int nu = Steps(u.norm(), h_);
    const int nv = Steps(v.norm(), h_);
    const int base = static_cast<int>(mesh_.vertices.size());
    for (int j = 0; j <= nv; ++j) {
      for (int i = 0; i <= nu; ++i) {
        mesh_.vertices.push_back(origin + u * (double(i) / nu) +
                                 v * (double(j) / nv));
      }
    }
    const auto at = [&](int i, int j) { return base + j * (nu + 1) + i; };
    for (int j = 0; j < nv; ++j) {
      for (int i = 0; i < nu; ++i) {
        mesh_.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
        mesh_.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
      }
    }
  }

  void Box(const Vec3& lo, const Vec3& hi) {
    OrientedBox(0.5 * (lo + hi), Mat3::Identity(), 0.5 * (hi - lo));
  }

  void OrientedBox(const Vec3& center, const Mat3& rot, const Vec3& half) {
    const Vec3 x = rot.col(0) * (2 * half.x());
    const Vec3 y = rot.col(1) * (2 * half.y());
    const Vec3 z = rot.col(2) * (2 * half.z());
    const Vec3 lo = center - 0.5 * (x + y + z);
    Grid(lo, z, y);
    Grid(lo + x, y, z);
    Grid(lo, x, z);
    Grid(lo + y, z, x);
    Grid(lo, y, x);
    Grid(lo + z, x, y);
  }

  // Surface of revolution r(s) for s in [0,1] along axis from base.
  void Revolve(const Vec3& base, const Vec3& axis, double length,
               const std::function<double(double)>& radius, double r_max,
               double angle0 = 0.0, double angle1 = 2 * kPi) {
    const Mat3 b = Basis(axis);
    const bool closed = angle1 - angle0 >= 2 * kPi - 1e-12;
    const int n = Steps(r_max * (angle1 - angle0), h_, 16);
    const int m = Steps(length, h_);
    const int ring = closed ? n : n + 1;
    const int first = static_cast<int>(mesh_.vertices.size());
    for (int j = 0; j <= m; ++j) {
      const double s = double(j) / m;
      const double r = radius(s);
      for (int i = 0; i < ring; ++i) {
        const double a = angle0 + (angle1 - angle0) * i / n;
        mesh_.vertices.push_back(base + b.col(2) * (s * length) +
                                 r * (std::cos(a) * b.col(0) +
                                      std::sin(a) * b.col(1)));
      }
    }
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        const int i1 = closed ? (i + 1) % n : i + 1;
        const int a = first + j * ring + i, c = first + (j + 1) * ring + i1;
        const int b2 = first + j * ring + i1, d = first + (j + 1) * ring + i;
        mesh_.faces.push_back({a, b2, c});
        mesh_.faces.push_back({a, c, d});
      }
    }
  }

  void Disc(const Vec3& center, const Vec3& normal, double r) {
    const Mat3 b = Basis(normal);
    const int n = Steps(2 * kPi * r, h_, 16);
    const int rings = Steps(r, h_);
    const int c = static_cast<int>(mesh_.vertices.size());
    mesh_.vertices.push_back(center);
    for (int k = 1; k <= rings; ++k) {
      const double rr = r * k / rings;
      for (int i = 0; i < n; ++i) {
        const double a = 2 * kPi * i / n;
        mesh_.vertices.push_back(center + rr * (std::cos(a) * b.col(0) +
                                                std::sin(a) * b.col(1)));
      }
    }
    const auto at = [&](int k, int i) { return c + 1 + (k - 1) * n + (i % n); };
    for (int i = 0; i < n; ++i) mesh_.faces.push_back({c, at(1, i), at(1, i + 1)});
    for (int k = 1; k < rings; ++k) {
      for (int i = 0; i < n; ++i) {
        mesh_.faces.push_back({at(k, i), at(k + 1, i), at(k + 1, i + 1)});
        mesh_.faces.push_back({at(k, i), at(k + 1, i + 1), at(k, i + 1)});
      }
    }
  }

  void Cylinder(const Vec3& base, const Vec3& axis, double r, double length,
                bool caps = true) {
    const Vec3 a = axis.normalized();
    Revolve(base, a, length, [r](double) { return r; }, r);
    if (caps) {
      Disc(base, -a, r);
      Disc(base + a * length, a, r);
    }
  }

  void Frustum(const Vec3& base, const Vec3& axis, double r0, double r1,
               double length) {
    Revolve(base, axis.normalized(), length,
            [=](double s) { return r0 + (r1 - r0) * s; }, std::max(r0, r1));
  }

  void Sphere(const Vec3& center, double r) {
    Revolve(center - Vec3::UnitZ() * r, Vec3::UnitZ(), 2 * r,
            [r](double s) {
              const double z = 2 * s - 1;
              return r * std::sqrt(std::max(0.0, 1 - z * z));
            },
            r);
  }

  // Tube of radius `tube` around a circle of radius `major` in the plane
  // normal to `axis`, over the angular span [angle0, angle1].
  void Torus(const Vec3& center, const Vec3& axis, double major, double tube,
             double angle0 = 0.0, double angle1 = 2 * kPi) {
    const Mat3 b = Basis(axis);
    const bool closed = angle1 - angle0 >= 2 * kPi - 1e-12;
    const int n = Steps((major + tube) * (angle1 - angle0), h_, 16);
    const int m = Steps(2 * kPi * tube, h_, 8);
    const int ring = closed ? n : n + 1;
    const int first = static_cast<int>(mesh_.vertices.size());
    for (int i = 0; i < ring; ++i) {
      const double a = angle0 + (angle1 - angle0) * i / n;
      const Vec3 radial = std::cos(a) * b.col(0) + std::sin(a) * b.col(1);
      for (int j = 0; j < m; ++j) {
        const double t = 2 * kPi * j / m;
        mesh_.vertices.push_back(center + radial * major +
                                 tube * (std::cos(t) * radial +
                                         std::sin(t) * b.col(2)));
      }
    }
    for (int i = 0; i < n; ++i) {
      const int i1 = closed ? (i + 1) % n : i + 1;
      for (int j = 0; j < m; ++j) {
        const int j1 = (j + 1) % m;
        const int a = first + i * m + j, c = first + i1 * m + j1;
        mesh_.faces.push_back({a, first + i1 * m + j, c});
        mesh_.faces.push_back({a, c, first + i * m + j1});
      }
    }
  }

  TriMesh Take() { return std::move(mesh_); }

 private:
  double h_;
  TriMesh mesh_;
};

struct JointDef {
  std::string type;  // revolute, prismatic, fixed
  int parent = 0;
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();  // metres
  double lo = 0.0;             // radians or metres
  double hi = 0.0;
};

struct PartDef {
  std::string description;
  std::string material;
  double density;
  std::vector<std::string> affordance;
  std::function<void(Builder&)> build;
  std::optional<JointDef> joint;
};

struct AssetDef {
  std::string name;
  std::string description;
  std::vector<PartDef> parts;
};

constexpr double kWood = 600.0;
constexpr double kSteel = 7850.0;
constexpr double kAluminum = 2700.0;
constexpr double kPlastic = 1200.0;
constexpr double kGlass = 2500.0;

JointDef Revolute(int parent, Vec3 axis, Vec3 origin, double lo, double hi) {
  return {"revolute", parent, axis, origin, lo, hi};
}
JointDef Prismatic(int parent, Vec3 axis, Vec3 origin, double lo, double hi) {
  return {"prismatic", parent, axis, origin, lo, hi};
}
JointDef Fixed(int parent, Vec3 origin) {
  return {"fixed", parent, Vec3::UnitZ(), origin, 0.0, 0.0};
}

std::vector<AssetDef> Assets() {
  std::vector<AssetDef> out;

  out.push_back({"cabinet_drawer", "Small wooden cabinet with one drawer.",
      {{"cabinet body", "wood", kWood, {"support", "store"},
        [](Builder& b) { b.Box({0, 0, 0}, {0.6, 0.5, 0.8}); }, {}},
       {"drawer with front handle", "wood", kWood, {"pull", "store"},
        [](Builder& b) {
          b.Box({0.05, -0.02, 0.55}, {0.55, 0.0, 0.75});
          b.Box({0.25, -0.045, 0.64}, {0.35, -0.02, 0.66});
        },
        Prismatic(0, {0, -1, 0}, {0.3, 0.0, 0.65}, 0.0, 0.35)}}});

  out.push_back({"door_cabinet", "Tall cabinet with a hinged door and knob.",
      {{"cabinet body", "wood", kWood, {"support", "store"},
        [](Builder& b) { b.Box({0, 0, 0}, {0.5, 0.4, 1.0}); }, {}},
       {"door with knob", "wood", kWood, {"open", "close"},
        [](Builder& b) {
          b.Box({0.0, -0.02, 0.0}, {0.5, 0.0, 1.0});
          b.Cylinder({0.44, -0.02, 0.5}, {0, -1, 0}, 0.015, 0.03);
        },
        Revolute(0, {0, 0, -1}, {0.0, -0.01, 0.5}, 0.0, kPi / 2)}}});

  out.push_back({"laptop", "Laptop with a hinged screen.",
      {{"base with keyboard", "aluminum", kAluminum, {"type", "support"},
        [](Builder& b) {
          b.Box({0, 0, 0}, {0.32, 0.22, 0.018});
          for (int r = 0; r < 5; ++r) {
            for (int c = 0; c < 13; ++c) {
              const Vec3 lo(0.03 + c * 0.02, 0.05 + r * 0.022, 0.018);
              b.Box(lo, lo + Vec3(0.016, 0.017, 0.003));
            }
          }
        },
        {}},
       {"screen lid", "plastic", kPlastic, {"open", "close", "view"},
        [](Builder& b) { b.Box({0.0, 0.21, 0.018}, {0.32, 0.22, 0.23}); },
        Revolute(0, {1, 0, 0}, {0.0, 0.215, 0.018}, -0.6, kPi / 2)}}});

  out.push_back({"eyeglasses", "Eyeglasses with folding temples.",
      {{"front frame with lenses", "plastic", kPlastic, {"wear"},
        [](Builder& b) {
          for (double cx : {0.035, 0.105}) {
            b.Torus({cx, 0.0, 0.025}, {0, 1, 0}, 0.028, 0.003);
            b.Cylinder({cx, -0.001, 0.025}, {0, 1, 0}, 0.026, 0.002);
          }
          b.Box({0.063, -0.003, 0.035}, {0.077, 0.003, 0.041});
          b.Box({0.0, -0.003, 0.033}, {0.008, 0.004, 0.043});
          b.Box({0.132, -0.003, 0.033}, {0.14, 0.004, 0.043});
        },
        {}},
       {"left temple", "plastic", kPlastic, {"fold"},
        [](Builder& b) { b.Box({0.0, 0.004, 0.035}, {0.004, 0.14, 0.041}); },
        Revolute(0, {0, 0, -1}, {0.002, 0.004, 0.038}, 0.0, kPi / 2)},
       {"right temple", "plastic", kPlastic, {"fold"},
        [](Builder& b) { b.Box({0.136, 0.004, 0.035}, {0.14, 0.14, 0.041}); },
        Revolute(0, {0, 0, 1}, {0.138, 0.004, 0.038}, 0.0, kPi / 2)}}});

  out.push_back({"faucet", "Single-lever kitchen faucet.",
      {{"base, riser and spout", "steel", kSteel, {"pour"},
        [](Builder& b) {
          b.Cylinder({0.0, 0.0, 0.0}, {0, 0, 1}, 0.03, 0.02);
          b.Cylinder({0.0, 0.0, 0.02}, {0, 0, 1}, 0.013, 0.17);
          b.Cylinder({0.0, 0.0, 0.17}, {0, -1, 0}, 0.01, 0.16);
          b.Cylinder({0.0, -0.16, 0.18}, {0, 0, -1}, 0.011, 0.04);
        },
        {}},
       {"lever handle", "steel", kSteel, {"turn"},
        [](Builder& b) {
          b.Cylinder({0.0, 0.0, 0.19}, {0, 0, 1}, 0.014, 0.018);
          b.Box({-0.005, 0.0, 0.2}, {0.005, 0.1, 0.208});
        },
        Revolute(0, {0, 0, 1}, {0.0, 0.0, 0.19}, -kPi / 4, kPi / 4)}}});

  out.push_back({"desk_lamp", "Desk lamp with two hinged arm segments.",
      {{"weighted base", "steel", kSteel, {"support"},
        [](Builder& b) {
          b.Cylinder({0, 0, 0}, {0, 0, 1}, 0.08, 0.02);
          b.Box({0.03, -0.01, 0.02}, {0.05, 0.01, 0.03});
        },
        {}},
       {"upright arm", "aluminum", kAluminum, {"adjust"},
        [](Builder& b) {
          b.Cylinder({0, 0, 0.02}, {0, 0, 1}, 0.008, 0.3);
        },
        Revolute(0, {1, 0, 0}, {0.0, 0.0, 0.03}, -0.8, 0.8)},
       {"head arm and shade", "aluminum", kAluminum, {"adjust", "illuminate"},
        [](Builder& b) {
          b.Cylinder({0, 0, 0.32}, {0, -1, 0}, 0.007, 0.2);
          b.Frustum({0, -0.2, 0.33}, {0, 0, -1}, 0.02, 0.06, 0.08);
          b.Sphere({0, -0.2, 0.29}, 0.018);
        },
        Revolute(1, {1, 0, 0}, {0.0, 0.0, 0.32}, -1.0, 0.6)}}});

  out.push_back({"storage_box", "Storage box with a hinged lid.",
      {{"box body", "plastic", kPlastic, {"store"},
        [](Builder& b) { b.Box({0, 0, 0}, {0.4, 0.3, 0.25}); }, {}},
       {"lid with grip", "plastic", kPlastic, {"open", "close"},
        [](Builder& b) {
          b.Box({0, 0, 0.25}, {0.4, 0.3, 0.27});
          b.Box({0.15, 0.0, 0.27}, {0.25, 0.03, 0.285});
        },
        Revolute(0, {-1, 0, 0}, {0.0, 0.3, 0.26}, 0.0, 1.9)}}});

  {
    AssetDef chest{"drawer_chest", "Chest with three drawers.", {}};
    chest.parts.push_back({"chest body", "wood", kWood, {"support", "store"},
                           [](Builder& b) { b.Box({0, 0, 0}, {0.8, 0.45, 0.9}); },
                           {}});
    const char* names[] = {"bottom drawer", "middle drawer", "top drawer"};
    for (int k = 0; k < 3; ++k) {
      const double z0 = 0.05 + 0.28 * k;
      const double z1 = z0 + 0.25;
      chest.parts.push_back(
          {names[k], "wood", kWood, {"pull", "store"},
           [z0, z1](Builder& b) {
             b.Box({0.04, -0.02, z0}, {0.76, 0.0, z1});
             b.Cylinder({0.3, -0.02, 0.5 * (z0 + z1)}, {0, -1, 0}, 0.01, 0.025);
             b.Cylinder({0.5, -0.02, 0.5 * (z0 + z1)}, {0, -1, 0}, 0.01, 0.025);
           },
           Prismatic(0, {0, -1, 0}, {0.4, 0.0, 0.5 * (z0 + z1)}, 0.0, 0.35)});
    }
    out.push_back(std::move(chest));
  }

  out.push_back({"stapler", "Desk stapler with a hinged top arm.",
      {{"base and rear block", "steel", kSteel, {"support"},
        [](Builder& b) {
          b.Box({0, 0, 0}, {0.04, 0.16, 0.012});
          b.Box({0.005, 0.135, 0.012}, {0.035, 0.16, 0.02});
        },
        {}},
       {"top arm", "plastic", kPlastic, {"press"},
        [](Builder& b) {
          b.Box({0.002, 0.0, 0.02}, {0.038, 0.155, 0.045});
          b.Cylinder({0.0, 0.15, 0.02}, {1, 0, 0}, 0.006, 0.04);
        },
        Revolute(0, {-1, 0, 0}, {0.0, 0.15, 0.02}, 0.0, 0.6)}}});

  out.push_back({"bucket", "Bucket with a swinging handle.",
      {{"bucket shell", "plastic", kPlastic, {"carry", "store"},
        [](Builder& b) {
          b.Frustum({0, 0, 0}, {0, 0, 1}, 0.11, 0.13, 0.28);
          b.Disc({0, 0, 0}, {0, 0, -1}, 0.11);
          b.Torus({0, 0, 0.28}, {0, 0, 1}, 0.13, 0.006);
          b.Box({0.125, -0.01, 0.25}, {0.14, 0.01, 0.28});
          b.Box({-0.14, -0.01, 0.25}, {-0.125, 0.01, 0.28});
        },
        {}},
       {"wire handle", "steel", kSteel, {"carry"},
        [](Builder& b) {
          b.Torus({0, 0, 0.27}, {0, -1, 0}, 0.135, 0.004, 0.0, kPi);
        },
        Revolute(0, {1, 0, 0}, {0.0, 0.0, 0.27}, -kPi / 2, kPi / 2)}}});

  out.push_back({"desk_fan", "Desk fan with tilting head and spinning blades.",
      {{"round base", "plastic", kPlastic, {"support"},
        [](Builder& b) { b.Cylinder({0, 0, 0}, {0, 0, 1}, 0.1, 0.03); }, {}},
       {"pole", "steel", kSteel, {"support"},
        [](Builder& b) { b.Cylinder({0, 0, 0.03}, {0, 0, 1}, 0.012, 0.27); },
        Fixed(0, {0.0, 0.0, 0.03})},
       {"motor head and guard", "plastic", kPlastic, {"tilt"},
        [](Builder& b) {
          b.Cylinder({0, 0.04, 0.33}, {0, -1, 0}, 0.05, 0.09);
          b.Torus({0, -0.1, 0.33}, {0, 1, 0}, 0.15, 0.004);
          b.Box({-0.015, -0.01, 0.29}, {0.015, 0.01, 0.31});
        },
        Revolute(1, {1, 0, 0}, {0.0, 0.0, 0.3}, -0.5, 0.5)},
       {"blades", "plastic", kPlastic, {"spin"},
        [](Builder& b) {
          const Vec3 hub(0, -0.1, 0.33);
          b.Cylinder(hub + Vec3(0, 0.02, 0), {0, -1, 0}, 0.025, 0.03);
          for (int k = 0; k < 3; ++k) {
            const double a = 2 * kPi * k / 3;
            const Vec3 dir(std::cos(a), 0, std::sin(a));
            Mat3 rot;
            rot.col(0) = dir;
            rot.col(1) = Vec3::UnitY();
            rot.col(2) = dir.cross(Vec3::UnitY());
            b.OrientedBox(hub + dir * 0.08, rot, {0.055, 0.003, 0.03});
          }
        },
        Revolute(2, {0, 1, 0}, {0.0, -0.1, 0.33}, -2 * kPi, 2 * kPi)}}});

  return out;
}

std::vector<TriMesh> BuildParts(const AssetDef& asset, double h) {
  std::vector<TriMesh> parts;
  for (const auto& p : asset.parts) {
    Builder b(h);
    p.build(b);
    parts.push_back(b.Take());
  }
  return parts;
}

simready::BoundingBox UnionBounds(const std::vector<TriMesh>& parts) {
  std::vector<Vec3> all;
  for (const auto& m : parts) all.insert(all.end(), m.vertices.begin(), m.vertices.end());
  return simready::ComputeBounds(all);
}

double Round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

nlohmann::ordered_json Vec3Json(const Vec3& v) {
  return nlohmann::ordered_json::array({Round6(v.x()), Round6(v.y()), Round6(v.z())});
}

void WriteAsset(const AssetDef& asset, const std::filesystem::path& root) {
  const double first_extent = UnionBounds(BuildParts(asset, 1.0)).LongestEdge();
  const auto parts = BuildParts(asset, first_extent * kEdgeFraction);
  const simready::BoundingBox box = UnionBounds(parts);
  const double extent = box.LongestEdge();
  const double to_voxel = kTemplateResolution / extent;

  const auto dir = root / asset.name;
  std::filesystem::create_directories(dir);
  std::size_t faces = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    simready::SaveMesh(parts[k], dir / fmt::format("part_{}.obj", k));
    faces += parts[k].faces.size();
  }

  nlohmann::ordered_json j;
  j["name"] = asset.name;
  j["description"] = asset.description;
  j["absolute_scale"] = Vec3Json(Vec3::Constant(extent));
  j["resolution"] = kTemplateResolution;
  j["root_part"] = 0;
  j["parts"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < asset.parts.size(); ++k) {
    const PartDef& p = asset.parts[k];
    nlohmann::ordered_json part;
    part["id"] = k;
    part["description"] = p.description;
    part["material"] = p.material;
    part["density"] = p.density;
    part["affordance"] = p.affordance;
    if (p.joint) {
      const JointDef& jd = *p.joint;
      nlohmann::ordered_json joint;
      joint["type"] = jd.type;
      joint["parent"] = jd.parent;
      joint["axis_direction"] = Vec3Json(jd.axis.normalized());
      joint["axis_origin"] = Vec3Json((jd.origin - box.origin) * to_voxel);
      if (jd.type == "revolute") {
        joint["range"] = {jd.lo, jd.hi};
      } else if (jd.type == "prismatic") {
        joint["range"] = {Round6(jd.lo * to_voxel), Round6(jd.hi * to_voxel)};
      }
      part["joint"] = joint;
    } else {
      part["joint"] = nullptr;
    }
    j["parts"].push_back(part);
  }
  std::ofstream(dir / "asset.template.json") << j.dump(2) << "\n";
  std::cout << fmt::format("{:16} parts={} faces={}\n", asset.name,
                           parts.size(), faces);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_corpus <output dir>\n";
    return 2;
  }
  try {
    for (const auto& asset : Assets()) WriteAsset(asset, argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
