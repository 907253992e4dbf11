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

#ifndef SIMREADY_KINEMATICS_HPP_
#define SIMREADY_KINEMATICS_HPP_

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

#include "simready/error.hpp"
#include "simready/schema.hpp"

namespace simready {

enum class KinematicsErrorKind {
  kNoJoint,
  kFixedJoint,
  kMissingValue,
  kOutOfRange,
  kInvalidCount,
};

class KinematicsError : public KindedError<KinematicsErrorKind> {
 public:
  using KindedError::KindedError;
};

// Metric image of a JointSpec. Revolute ranges stay in radians, prismatic
// ranges are in meters.
struct WorldJoint {
  JointType type = JointType::kFixed;
  int parent = 0;
  int child = 0;
  Vec3 axis_direction = Vec3::UnitZ();
  Vec3 axis_origin = Vec3::Zero();
  std::optional<Range> range;
};

using RigidTransform = Eigen::Isometry3d;

// Part id -> pose relative to the rest configuration. The root is identity.
using PoseSet = std::map<int, RigidTransform>;

// Joint values keyed by child part id.
using JointValues = std::map<int, double>;

Vec3 VoxelToWorld(const PhysicalAssetSpec& spec, const Vec3& voxel_point);
Vec3 CellCenterToWorld(const PhysicalAssetSpec& spec, const Cell& cell);

WorldJoint ToWorldJoint(const PhysicalAssetSpec& spec, int part_id);

// Rigid motion of a joint at value q, expressed in the world rest frame.
RigidTransform JointMotion(const WorldJoint& joint, double q);

// Fixed joints need no entry. Out-of-range values are rejected.
PoseSet ForwardKinematics(const PhysicalAssetSpec& spec, const JointValues& q);

// n >= 2 values spanning [lo, hi] inclusive.
std::vector<double> SampleRange(const PhysicalAssetSpec& spec, int part_id,
                                int n);

}  // namespace simready

#endif  // SIMREADY_KINEMATICS_HPP_
