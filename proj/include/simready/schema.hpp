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

// Tree-structured physical asset description. Geometry and kinematics live
// in the voxel frame [0,R]^3; absolute_scale gives the metric size of that
// cube per axis. See docs/formats.md for the JSON layout.

#ifndef SIMREADY_SCHEMA_HPP_
#define SIMREADY_SCHEMA_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simready/error.hpp"
#include "simready/mesh.hpp"
#include "simready/token_codec.hpp"
#include "simready/voxel.hpp"

namespace simready {

enum class SchemaErrorKind {
  kMalformedJson,
  kMissingField,
  kWrongType,
  kInvalidValue,
  kInvalidPartId,
  kInvalidScale,
  kInvalidDensity,
  kInvalidAxis,
  kInvalidRange,
  kInvalidOrigin,
  kOrphanPart,
  kCycleDetected,
  kMultipleRoots,
  kNoRoot,
  kRootMismatch,
  kGeometry,
  kUnknownPart,
};

class SchemaError : public KindedError<SchemaErrorKind> {
 public:
  using KindedError::KindedError;
};

enum class JointType { kRevolute, kPrismatic, kFixed };

std::string_view JointTypeName(JointType type);

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

// Attached to the child part. Directions and origins are in voxel units;
// revolute ranges in radians, prismatic ranges in voxel units.
struct JointSpec {
  JointType type = JointType::kFixed;
  int parent = 0;
  Vec3 axis_direction = Vec3::UnitZ();
  Vec3 axis_origin = Vec3::Zero();
  std::optional<Range> range;

  friend bool operator==(const JointSpec&, const JointSpec&) = default;
};

struct PartSpec {
  int id = 0;
  std::string description;
  TokenString geometry;
  std::string material;
  double density = 1000.0;  // kg/m^3
  std::vector<std::string> affordance;
  std::optional<JointSpec> joint;

  friend bool operator==(const PartSpec&, const PartSpec&) = default;
};

struct PhysicalAssetSpec {
  std::string name;
  std::string description;
  Vec3 absolute_scale = Vec3::Ones();  // meters
  int resolution = kDefaultResolution;
  std::vector<PartSpec> parts;
  int root_part = 0;

  friend bool operator==(const PhysicalAssetSpec&,
                         const PhysicalAssetSpec&) = default;
};

inline constexpr double kTwoPi = 6.283185307179586476925;
// Tolerance applied to the [-2pi, 2pi] revolute bound.
inline constexpr double kRangeSlack = 1e-9;

// Checks every invariant, including that each part's geometry decodes to a
// non-empty grid. Throws SchemaError.
void ValidateSpec(const PhysicalAssetSpec& spec);

PhysicalAssetSpec ParseSpec(std::string_view json_text);

// Keys in fixed order, 2-space indent, trailing newline. Validates first.
std::string EmitSpec(const PhysicalAssetSpec& spec);

const PartSpec& FindPart(const PhysicalAssetSpec& spec, int part_id);
VoxelGrid PartVoxels(const PhysicalAssetSpec& spec, int part_id);

// density * occupied voxels * (sx/R)(sy/R)(sz/R).
double PartMass(const PhysicalAssetSpec& spec, int part_id);

// Parent before child; root first.
std::vector<int> TopologicalOrder(const PhysicalAssetSpec& spec);
std::vector<int> Children(const PhysicalAssetSpec& spec, int part_id);

}  // namespace simready

#endif  // SIMREADY_SCHEMA_HPP_
