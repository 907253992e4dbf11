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

#include "simready/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <fmt/format.h>

namespace simready {
namespace {

void CheckResolution(int resolution) {
  if (resolution < 1 || resolution > kMaxResolution) {
    throw VoxelError(VoxelErrorKind::kInvalidResolution,
                     fmt::format("resolution {} outside [1, {}]", resolution,
                                 kMaxResolution));
  }
}

std::int64_t Cube(int r) {
  return static_cast<std::int64_t>(r) * r * r;
}

// Projects the triangle and the box onto `axis` and reports whether the
// intervals are disjoint.
bool SeparatedOnAxis(const Vec3& axis, const Vec3& v0, const Vec3& v1,
                     const Vec3& v2, const Vec3& half) {
  const double p0 = axis.dot(v0);
  const double p1 = axis.dot(v1);
  const double p2 = axis.dot(v2);
  const double r = half.x() * std::abs(axis.x()) +
                   half.y() * std::abs(axis.y()) +
                   half.z() * std::abs(axis.z());
  const double lo = std::min({p0, p1, p2});
  const double hi = std::max({p0, p1, p2});
  return lo > r || hi < -r;
}

int CellFloor(double v, int resolution) {
  const int i = static_cast<int>(std::floor(v * resolution));
  return std::clamp(i, 0, resolution - 1);
}

}  // namespace

std::int64_t LinearIndex(Cell cell, int resolution) {
  if (cell.x < 0 || cell.y < 0 || cell.z < 0 || cell.x >= resolution ||
      cell.y >= resolution || cell.z >= resolution) {
    throw VoxelError(VoxelErrorKind::kOutOfRange,
                     fmt::format("cell ({},{},{}) outside [0,{})", cell.x,
                                 cell.y, cell.z, resolution));
  }
  const std::int64_t r = resolution;
  return cell.x + r * cell.y + r * r * cell.z;
}

Cell Delinearize(std::int64_t index, int resolution) {
  const std::int64_t r = resolution;
  if (index < 0 || index >= r * r * r) {
    throw VoxelError(VoxelErrorKind::kOutOfRange,
                     fmt::format("index {} outside [0,{})", index, r * r * r));
  }
  return {static_cast<int>(index % r), static_cast<int>((index / r) % r),
          static_cast<int>(index / (r * r))};
}

VoxelGrid::VoxelGrid(int resolution) : resolution_(resolution) {
  CheckResolution(resolution);
  bits_.assign(static_cast<std::size_t>(Cube(resolution)), 0);
}

VoxelGrid VoxelGrid::Full(int resolution) {
  VoxelGrid g(resolution);
  std::fill(g.bits_.begin(), g.bits_.end(), 1);
  return g;
}

std::int64_t VoxelGrid::Count() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

std::vector<std::int64_t> VoxelGrid::Indices() const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::vector<Cell> VoxelGrid::Cells() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(Delinearize(static_cast<std::int64_t>(i), resolution_));
  }
  return out;
}

PartLabeledGrid::PartLabeledGrid(int resolution) : resolution_(resolution) {
  CheckResolution(resolution);
  labels_.assign(static_cast<std::size_t>(Cube(resolution)), kEmpty);
}

PartLabeledGrid PartLabeledGrid::FromLabels(int resolution,
                                            std::vector<std::int16_t> labels) {
  PartLabeledGrid g(resolution);
  if (labels.size() != g.labels_.size()) {
    throw VoxelError(VoxelErrorKind::kResolutionMismatch,
                     "label array size does not match resolution");
  }
  std::vector<char> used;
  for (auto l : labels) {
    if (l == kEmpty) continue;
    if (l < 0) {
      throw VoxelError(VoxelErrorKind::kOutOfRange,
                       fmt::format("negative part id {}", l));
    }
    if (static_cast<std::size_t>(l) >= used.size()) used.resize(l + 1, 0);
    used[l] = 1;
  }
  for (std::size_t p = 0; p < used.size(); ++p) {
    if (!used[p]) {
      throw VoxelError(VoxelErrorKind::kEmptyPart,
                       fmt::format("part {} has no voxels", p));
    }
  }
  g.labels_ = std::move(labels);
  g.part_count_ = static_cast<int>(used.size());
  return g;
}

VoxelGrid PartLabeledGrid::Occupancy() const {
  VoxelGrid g(resolution_);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != kEmpty) g.SetIndex(static_cast<std::int64_t>(i));
  }
  return g;
}

VoxelGrid PartLabeledGrid::PartGrid(int part) const {
  VoxelGrid g(resolution_);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == part) g.SetIndex(static_cast<std::int64_t>(i));
  }
  return g;
}

std::int64_t PartLabeledGrid::Count() const {
  return static_cast<std::int64_t>(labels_.size()) -
         std::count(labels_.begin(), labels_.end(), kEmpty);
}

bool TriangleBoxOverlap(const Vec3& box_center, const Vec3& half_size,
                        const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 v0 = a - box_center;
  const Vec3 v1 = b - box_center;
  const Vec3 v2 = c - box_center;
  const std::array<Vec3, 3> edges = {v1 - v0, v2 - v1, v0 - v2};

  // Box face normals.
  for (int k = 0; k < 3; ++k) {
    const double lo = std::min({v0[k], v1[k], v2[k]});
    const double hi = std::max({v0[k], v1[k], v2[k]});
    if (lo > half_size[k] || hi < -half_size[k]) return false;
  }
  // Triangle normal.
  const Vec3 normal = edges[0].cross(edges[1]);
  if (SeparatedOnAxis(normal, v0, v1, v2, half_size)) return false;
  // Edge cross products.
  for (const auto& e : edges) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 axis = Vec3::Unit(k).cross(e);
      if (axis.squaredNorm() == 0.0) continue;
      if (SeparatedOnAxis(axis, v0, v1, v2, half_size)) return false;
    }
  }
  return true;
}

VoxelGrid Voxelize(const TriMesh& mesh, int resolution, VoxelizeMode mode) {
  CheckResolution(resolution);
  if (mesh.empty()) {
    throw VoxelError(VoxelErrorKind::kEmptyMesh, "cannot voxelize empty mesh");
  }
  VoxelGrid grid(resolution);
  const double h = 1.0 / resolution;
  const Vec3 half = Vec3::Constant(0.5 * h);
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const Vec3 lo = a.cwiseMin(b).cwiseMin(c);
    const Vec3 hi = a.cwiseMax(b).cwiseMax(c);
    // Closed cells: a vertex on a cell boundary touches both neighbours.
    std::array<int, 3> i0{}, i1{};
    for (int k = 0; k < 3; ++k) {
      i0[k] = CellFloor(lo[k], resolution);
      i1[k] = CellFloor(hi[k], resolution);
      if (i0[k] > 0 && lo[k] * resolution == i0[k]) --i0[k];
    }
    for (int z = i0[2]; z <= i1[2]; ++z) {
      for (int y = i0[1]; y <= i1[1]; ++y) {
        for (int x = i0[0]; x <= i1[0]; ++x) {
          const Cell cell{x, y, z};
          if (grid.Contains(cell)) continue;
          const Vec3 center((x + 0.5) * h, (y + 0.5) * h, (z + 0.5) * h);
          if (TriangleBoxOverlap(center, half, a, b, c)) grid.Set(cell);
        }
      }
    }
  }
  if (mode == VoxelizeMode::kSolid) return FillInterior(grid);
  return grid;
}

VoxelGrid FillInterior(const VoxelGrid& shell) {
  const int r = shell.resolution();
  const int p = r + 2;
  const auto pidx = [p](int x, int y, int z) {
    return static_cast<std::size_t>(x + p * (y + p * z));
  };
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(p) * p * p, 0);
  const auto blocked = [&](int x, int y, int z) {
    if (x == 0 || y == 0 || z == 0 || x == p - 1 || y == p - 1 || z == p - 1) {
      return false;
    }
    return shell.Contains({x - 1, y - 1, z - 1});
  };
  std::vector<std::array<int, 3>> stack = {{0, 0, 0}};
  outside[pidx(0, 0, 0)] = 1;
  constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!stack.empty()) {
    const auto [x, y, z] = stack.back();
    stack.pop_back();
    for (const auto& s : kSteps) {
      const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
      if (nx < 0 || ny < 0 || nz < 0 || nx >= p || ny >= p || nz >= p) continue;
      auto& seen = outside[pidx(nx, ny, nz)];
      if (seen || blocked(nx, ny, nz)) continue;
      seen = 1;
      stack.push_back({nx, ny, nz});
    }
  }
  VoxelGrid solid(r);
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        if (!outside[pidx(x + 1, y + 1, z + 1)]) solid.Set({x, y, z});
      }
    }
  }
  return solid;
}

VoxelGrid Downsample(const VoxelGrid& grid, int factor) {
  const int r = grid.resolution();
  if (factor < 1 || r % factor != 0) {
    throw VoxelError(VoxelErrorKind::kNonDivisibleFactor,
                     fmt::format("factor {} does not divide resolution {}",
                                 factor, r));
  }
  VoxelGrid coarse(r / factor);
  for (const auto& c : grid.Cells()) {
    coarse.Set({c.x / factor, c.y / factor, c.z / factor});
  }
  return coarse;
}

VoxelGrid Upsample(const VoxelGrid& grid, int factor) {
  if (factor < 1) {
    throw VoxelError(VoxelErrorKind::kNonDivisibleFactor,
                     fmt::format("invalid upsampling factor {}", factor));
  }
  VoxelGrid fine(grid.resolution() * factor);
  const int r = fine.resolution();
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        if (grid.Contains({x / factor, y / factor, z / factor})) {
          fine.Set({x, y, z});
        }
      }
    }
  }
  return fine;
}

PartLabeledGrid LabelParts(std::span<const VoxelGrid> parts) {
  if (parts.empty()) {
    throw VoxelError(VoxelErrorKind::kEmptyPartList, "empty part list");
  }
  const int r = parts.front().resolution();
  std::vector<std::int16_t> labels(static_cast<std::size_t>(Cube(r)),
                                   PartLabeledGrid::kEmpty);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (parts[p].resolution() != r) {
      throw VoxelError(VoxelErrorKind::kResolutionMismatch,
                       fmt::format("part {} has resolution {}, expected {}", p,
                                   parts[p].resolution(), r));
    }
    if (parts[p].Empty()) {
      throw VoxelError(VoxelErrorKind::kEmptyPart,
                       fmt::format("part {} has no voxels", p));
    }
    const auto bits = parts[p].bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] && labels[i] == PartLabeledGrid::kEmpty) {
        labels[i] = static_cast<std::int16_t>(p);
      }
    }
  }
  // FromLabels rejects a part whose every cell was claimed by a lower id.
  return PartLabeledGrid::FromLabels(r, std::move(labels));
}

}  // namespace simready
