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

// Generators and brute-force oracles shared by the unit and acceptance
// tests. Oracles are deliberately naive and do not call the code under test.

#ifndef SIMREADY_TESTS_TEST_UTIL_HPP_
#define SIMREADY_TESTS_TEST_UTIL_HPP_

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "simready/mesh.hpp"
#include "simready/schema.hpp"
#include "simready/token_codec.hpp"
#include "simready/voxel.hpp"

namespace simready::testing {

using Rng = std::mt19937_64;

inline double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int UniformInt(Rng& rng, int lo, int hi) {  // inclusive
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline VoxelGrid RandomGrid(Rng& rng, int resolution, double density) {
  VoxelGrid g(resolution);
  std::bernoulli_distribution coin(density);
  for (std::int64_t i = 0; i < g.volume(); ++i) {
    if (coin(rng)) g.SetIndex(i);
  }
  return g;
}

// A random axis-aligned block plus a few scattered cells; never empty.
inline VoxelGrid RandomBlob(Rng& rng, int resolution) {
  VoxelGrid g(resolution);
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = UniformInt(rng, 0, resolution - 1);
    hi[a] = std::min(resolution - 1, lo[a] + UniformInt(rng, 0, resolution / 4));
  }
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) g.Set({x, y, z});
  const int extra = UniformInt(rng, 0, 5);
  for (int k = 0; k < extra; ++k) {
    g.Set({UniformInt(rng, 0, resolution - 1), UniformInt(rng, 0, resolution - 1),
           UniformInt(rng, 0, resolution - 1)});
  }
  return g;
}

inline Vec3 RandomPoint(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return {Uniform(rng, lo, hi), Uniform(rng, lo, hi), Uniform(rng, lo, hi)};
}

inline Vec3 RandomUnit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = {n(rng), n(rng), n(rng)};
  } while (v.norm() < 1e-3);
  return v.normalized();
}

inline std::vector<Vec3> RandomPoints(Rng& rng, std::size_t n) {
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = RandomPoint(rng);
  return pts;
}

// Points on a coarse integer lattice, so exact distance ties are common.
inline std::vector<Vec3> LatticePoints(Rng& rng, std::size_t n, int side) {
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    p = Vec3(UniformInt(rng, 0, side), UniformInt(rng, 0, side),
             UniformInt(rng, 0, side)) /
        side;
  }
  return pts;
}

inline TriMesh UnitCube(double lo = 0.0, double hi = 1.0) {
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back(i & 1 ? hi : lo, i & 2 ? hi : lo, i & 4 ? hi : lo);
  }
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

inline TriMesh Box(const Vec3& lo, const Vec3& hi) {
  TriMesh m = UnitCube();
  for (auto& v : m.vertices) v = lo + v.cwiseProduct(hi - lo);
  return m;
}

// Random triangle soup with non-degenerate index triples.
inline TriMesh RandomSoup(Rng& rng, int vertices, int faces) {
  TriMesh m;
  for (int i = 0; i < vertices; ++i) m.vertices.push_back(RandomPoint(rng, -3, 5));
  for (int f = 0; f < faces; ++f) {
    int a = UniformInt(rng, 0, vertices - 1), b, c;
    do b = UniformInt(rng, 0, vertices - 1); while (b == a);
    do c = UniformInt(rng, 0, vertices - 1); while (c == a || c == b);
    m.faces.push_back({a, b, c});
  }
  return m;
}

// ---- oracles ---------------------------------------------------------------

inline double Dist2(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// (squared distance, label, index) minimum by linear scan.
struct BruteHit {
  double d2 = std::numeric_limits<double>::infinity();
  int label = std::numeric_limits<int>::max();
  int index = -1;
};

inline BruteHit BruteNearest(const std::vector<Vec3>& pts,
                             const std::vector<int>& labels, const Vec3& q) {
  BruteHit best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = Dist2(pts[i], q);
    const int l = labels.empty() ? 0 : labels[i];
    if (std::tie(d, l) < std::tie(best.d2, best.label)) {
      best = {d, l, static_cast<int>(i)};
    }
  }
  return best;
}

inline double BruteMeanNearest(const std::vector<Vec3>& from,
                               const std::vector<Vec3>& to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, Dist2(p, q));
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(from.size());
}

inline double BruteChamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return BruteMeanNearest(a, b) + BruteMeanNearest(b, a);
}

inline double BruteFScore(const std::vector<Vec3>& pred,
                          const std::vector<Vec3>& gt, double tau) {
  const auto matched = [tau](const std::vector<Vec3>& from,
                             const std::vector<Vec3>& to) {
    std::size_t n = 0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, Dist2(p, q));
      if (std::sqrt(best) <= tau) ++n;
    }
    return n;
  };
  const double p = static_cast<double>(matched(pred, gt)) / pred.size();
  const double r = static_cast<double>(matched(gt, pred)) / gt.size();
  if (p + r == 0.0) return 0.0;
  return 200.0 * p * r / (p + r);
}

// Triangle / closed box overlap by clipping the triangle against the six
// slab planes; any surviving vertex means the sets intersect.
inline bool ClipOverlap(const Vec3& lo, const Vec3& hi, const Vec3& a,
                        const Vec3& b, const Vec3& c) {
  std::vector<Vec3> poly = {a, b, c};
  for (int axis = 0; axis < 3 && !poly.empty(); ++axis) {
    for (int side = 0; side < 2 && !poly.empty(); ++side) {
      const auto inside = [&](const Vec3& p) {
        return side == 0 ? p[axis] >= lo[axis] : p[axis] <= hi[axis];
      };
      const double plane = side == 0 ? lo[axis] : hi[axis];
      std::vector<Vec3> out;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& p = poly[i];
        const Vec3& q = poly[(i + 1) % poly.size()];
        const bool pin = inside(p), qin = inside(q);
        if (pin) out.push_back(p);
        if (pin != qin) {
          const double s = (plane - p[axis]) / (q[axis] - p[axis]);
          Vec3 x = p + s * (q - p);
          x[axis] = plane;
          out.push_back(x);
        }
      }
      poly = std::move(out);
    }
  }
  return !poly.empty();
}

// ---- spec generator --------------------------------------------------------

// A random valid spec: 1..max_parts parts, random tree, every joint type,
// anisotropic scale. Roughly one revolute joint in five spans the full turn.
inline PhysicalAssetSpec RandomSpec(Rng& rng, int max_parts = 6) {
  PhysicalAssetSpec spec;
  const int resolutions[] = {8, 16, 32};
  spec.resolution = resolutions[UniformInt(rng, 0, 2)];
  spec.name = "asset_" + std::to_string(UniformInt(rng, 0, 99999));
  spec.description = "random test asset";
  spec.absolute_scale = {Uniform(rng, 0.05, 3.0), Uniform(rng, 0.05, 3.0),
                         Uniform(rng, 0.05, 3.0)};
  const int n = UniformInt(rng, 1, max_parts);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  spec.root_part = order[0];
  const char* materials[] = {"wood", "steel", "plastic", "glass"};
  for (int i = 0; i < n; ++i) {
    PartSpec p;
    p.id = i;
    p.description = "part " + std::to_string(i);
    p.material = materials[UniformInt(rng, 0, 3)];
    p.density = Uniform(rng, 50.0, 9000.0);
    p.affordance = {"grasp"};
    p.geometry = Encode(RandomBlob(rng, spec.resolution));
    spec.parts.push_back(std::move(p));
  }
  const double r = spec.resolution;
  for (int k = 1; k < n; ++k) {
    JointSpec j;
    j.parent = order[UniformInt(rng, 0, k - 1)];
    j.type = static_cast<JointType>(UniformInt(rng, 0, 2));
    j.axis_direction = RandomUnit(rng);
    j.axis_origin = RandomPoint(rng, 0.0, r);
    if (j.type == JointType::kRevolute) {
      if (UniformInt(rng, 0, 4) == 0) {
        j.range = Range{-kTwoPi, kTwoPi};
      } else {
        const double lo = Uniform(rng, -kTwoPi, kTwoPi - 0.1);
        j.range = Range{lo, Uniform(rng, lo + 0.01, kTwoPi)};
      }
    } else if (j.type == JointType::kPrismatic) {
      const double lo = Uniform(rng, -r / 2, r / 2);
      j.range = Range{lo, lo + Uniform(rng, 0.1, r)};
    }
    spec.parts[order[k]].joint = j;
  }
  return spec;
}

// Minimal valid spec: one root part with geometry "0".
inline PhysicalAssetSpec MinimalSpec() {
  PhysicalAssetSpec spec;
  spec.name = "minimal";
  spec.description = "one voxel";
  spec.absolute_scale = {0.1, 0.1, 0.1};
  spec.resolution = 32;
  PartSpec p;
  p.id = 0;
  p.description = "body";
  p.material = "plastic";
  p.density = 1000.0;
  p.geometry = {"0", 32};
  spec.parts.push_back(p);
  return spec;
}

// ---- labelled grids --------------------------------------------------------

// Occupied cells with density `density`, labels drawn uniformly from
// [0, parts) and renumbered so the ids are contiguous.
inline PartLabeledGrid RandomLabeledGrid(Rng& rng, int resolution, double density,
                                         int parts) {
  std::vector<std::int16_t> labels(
      static_cast<std::size_t>(resolution) * resolution * resolution,
      PartLabeledGrid::kEmpty);
  std::vector<int> remap(parts, -1);
  int next = 0;
  for (auto& l : labels) {
    if (Uniform(rng, 0.0, 1.0) >= density) continue;
    const int raw = UniformInt(rng, 0, parts - 1);
    if (remap[raw] < 0) remap[raw] = next++;
    l = static_cast<std::int16_t>(remap[raw]);
  }
  if (next == 0) labels[0] = 0;
  return PartLabeledGrid::FromLabels(resolution, std::move(labels));
}

// Exterior surface of a labelled grid in the [0,1]^3 frame. Every voxel face
// whose neighbour is empty is split into `subdiv`^2 quads of two triangles;
// face_labels holds the label of the voxel each triangle bounds.
inline TriMesh LabeledSurface(const PartLabeledGrid& grid, int subdiv) {
  const int r = grid.resolution();
  const double h = 1.0 / r;
  TriMesh mesh;
  std::vector<int> face_labels;
  const auto occupied = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= r || y >= r || z >= r) return false;
    return grid.Label({x, y, z}) != PartLabeledGrid::kEmpty;
  };
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        const int label = grid.Label({x, y, z});
        if (label == PartLabeledGrid::kEmpty) continue;
        for (int axis = 0; axis < 3; ++axis) {
          for (int side = 0; side < 2; ++side) {
            int n[3] = {x, y, z};
            n[axis] += side ? 1 : -1;
            if (occupied(n[0], n[1], n[2])) continue;
            const int u = (axis + 1) % 3, v = (axis + 2) % 3;
            Vec3 base(x * h, y * h, z * h);
            base[axis] += side * h;
            const double step = h / subdiv;
            for (int i = 0; i < subdiv; ++i) {
              for (int j = 0; j < subdiv; ++j) {
                const int first = static_cast<int>(mesh.vertices.size());
                for (int k = 0; k < 4; ++k) {
                  Vec3 p = base;
                  p[u] += (i + (k == 1 || k == 2)) * step;
                  p[v] += (j + (k >= 2)) * step;
                  mesh.vertices.push_back(p);
                }
                mesh.faces.push_back({first, first + 1, first + 2});
                mesh.faces.push_back({first, first + 2, first + 3});
                face_labels.insert(face_labels.end(), 2, label);
              }
            }
          }
        }
      }
    }
  }
  mesh.face_labels = std::move(face_labels);
  return mesh;
}

// ---- files -----------------------------------------------------------------

inline std::filesystem::path TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("simready_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace simready::testing

#endif  // SIMREADY_TESTS_TEST_UTIL_HPP_
