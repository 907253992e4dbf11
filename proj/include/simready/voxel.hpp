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

#ifndef SIMREADY_VOXEL_HPP_
#define SIMREADY_VOXEL_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "simready/error.hpp"
#include "simready/mesh.hpp"

namespace simready {

inline constexpr int kDefaultResolution = 32;
inline constexpr int kMaxResolution = 128;

enum class VoxelErrorKind {
  kOutOfRange,
  kInvalidResolution,
  kEmptyMesh,
  kNonDivisibleFactor,
  kResolutionMismatch,
  kEmptyPartList,
  kEmptyPart,
};

class VoxelError : public KindedError<VoxelErrorKind> {
 public:
  using KindedError::KindedError;
};

struct Cell {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// x-fastest: x + R*y + R^2*z.
std::int64_t LinearIndex(Cell cell, int resolution);
Cell Delinearize(std::int64_t index, int resolution);

// Binary occupancy on an R^3 lattice, stored densely in linear-index order.
class VoxelGrid {
 public:
  explicit VoxelGrid(int resolution = kDefaultResolution);

  static VoxelGrid Full(int resolution);

  int resolution() const { return resolution_; }
  std::int64_t volume() const { return static_cast<std::int64_t>(bits_.size()); }

  bool Contains(Cell c) const { return bits_[Index(c)] != 0; }
  bool ContainsIndex(std::int64_t i) const { return bits_[i] != 0; }
  void Set(Cell c, bool occupied = true) { bits_[Index(c)] = occupied ? 1 : 0; }
  void SetIndex(std::int64_t i, bool occupied = true) { bits_[i] = occupied ? 1 : 0; }

  std::int64_t Count() const;
  bool Empty() const { return Count() == 0; }

  // Occupied linear indices in ascending order.
  std::vector<std::int64_t> Indices() const;
  std::vector<Cell> Cells() const;

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  std::int64_t Index(Cell c) const { return LinearIndex(c, resolution_); }

  int resolution_;
  std::vector<std::uint8_t> bits_;
};

// Occupied cell -> part id. Ids form 0..P-1 with each id used.
class PartLabeledGrid {
 public:
  static constexpr std::int16_t kEmpty = -1;

  explicit PartLabeledGrid(int resolution = kDefaultResolution);

  int resolution() const { return resolution_; }
  int part_count() const { return part_count_; }

  std::int16_t Label(Cell c) const { return labels_[LinearIndex(c, resolution_)]; }
  std::int16_t LabelAt(std::int64_t i) const { return labels_[i]; }
  std::span<const std::int16_t> labels() const { return labels_; }

  // Builds from a dense label array; throws if ids are not contiguous.
  static PartLabeledGrid FromLabels(int resolution,
                                    std::vector<std::int16_t> labels);

  VoxelGrid Occupancy() const;
  VoxelGrid PartGrid(int part) const;
  std::int64_t Count() const;

  friend bool operator==(const PartLabeledGrid&, const PartLabeledGrid&) = default;

 private:
  int resolution_;
  int part_count_ = 0;
  std::vector<std::int16_t> labels_;
};

enum class VoxelizeMode { kSurface, kSolid };

// Closed-box triangle overlap by the separating-axis theorem.
bool TriangleBoxOverlap(const Vec3& box_center, const Vec3& half_size,
                        const Vec3& a, const Vec3& b, const Vec3& c);

// `mesh` must already be normalized to [0,1]^3.
VoxelGrid Voxelize(const TriMesh& mesh, int resolution,
                   VoxelizeMode mode = VoxelizeMode::kSurface);

// Fills every cell not reachable from outside through empty cells
// (6-connected).
VoxelGrid FillInterior(const VoxelGrid& shell);

VoxelGrid Downsample(const VoxelGrid& grid, int factor);

// Nearest-neighbour upsampling: each fine cell copies its parent.
VoxelGrid Upsample(const VoxelGrid& grid, int factor);

// Overlapping cells go to the lowest part id.
PartLabeledGrid LabelParts(std::span<const VoxelGrid> parts);

}  // namespace simready

#endif  // SIMREADY_VOXEL_HPP_
