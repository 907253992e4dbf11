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

#include "simready/kinematics.hpp"

#include <fmt/format.h>

namespace simready {

Vec3 VoxelToWorld(const PhysicalAssetSpec& spec, const Vec3& voxel_point) {
  return (voxel_point / static_cast<double>(spec.resolution))
      .cwiseProduct(spec.absolute_scale);
}

Vec3 CellCenterToWorld(const PhysicalAssetSpec& spec, const Cell& cell) {
  return VoxelToWorld(spec, Vec3(cell.x + 0.5, cell.y + 0.5, cell.z + 0.5));
}

WorldJoint ToWorldJoint(const PhysicalAssetSpec& spec, int part_id) {
  const PartSpec& part = FindPart(spec, part_id);
  if (!part.joint) {
    throw KinematicsError(KinematicsErrorKind::kNoJoint,
                          fmt::format("part {} has no joint", part_id));
  }
  const JointSpec& j = *part.joint;
  WorldJoint w;
  w.type = j.type;
  w.parent = j.parent;
  w.child = part_id;
  w.axis_origin = VoxelToWorld(spec, j.axis_origin);
  const Vec3 scaled = j.axis_direction.cwiseProduct(spec.absolute_scale);
  w.axis_direction = scaled.normalized();
  if (j.range) {
    if (j.type == JointType::kPrismatic) {
      const double meters_per_voxel = scaled.norm() / spec.resolution;
      w.range = Range{j.range->lo * meters_per_voxel,
                      j.range->hi * meters_per_voxel};
    } else {
      w.range = j.range;
    }
  }
  return w;
}

RigidTransform JointMotion(const WorldJoint& joint, double q) {
  RigidTransform m = RigidTransform::Identity();
  switch (joint.type) {
    case JointType::kRevolute: {
      const Eigen::Matrix3d rot =
          Eigen::AngleAxisd(q, joint.axis_direction).toRotationMatrix();
      m.linear() = rot;
      m.translation() = joint.axis_origin - rot * joint.axis_origin;
      break;
    }
    case JointType::kPrismatic:
      m.translation() = q * joint.axis_direction;
      break;
    case JointType::kFixed:
      break;
  }
  return m;
}

PoseSet ForwardKinematics(const PhysicalAssetSpec& spec, const JointValues& q) {
  PoseSet poses;
  for (int id : TopologicalOrder(spec)) {
    const PartSpec& part = spec.parts[id];
    if (!part.joint) {
      poses[id] = RigidTransform::Identity();
      continue;
    }
    const WorldJoint w = ToWorldJoint(spec, id);
    double value = 0.0;
    if (w.type != JointType::kFixed) {
      auto it = q.find(id);
      if (it == q.end()) {
        throw KinematicsError(KinematicsErrorKind::kMissingValue,
                              fmt::format("no joint value for part {}", id));
      }
      value = it->second;
      if (!(value >= w.range->lo && value <= w.range->hi)) {
        throw KinematicsError(
            KinematicsErrorKind::kOutOfRange,
            fmt::format("part {}: q={} outside [{}, {}]", id, value,
                        w.range->lo, w.range->hi));
      }
    }
    poses[id] = poses.at(w.parent) * JointMotion(w, value);
  }
  return poses;
}

std::vector<double> SampleRange(const PhysicalAssetSpec& spec, int part_id,
                                int n) {
  if (n < 2) {
    throw KinematicsError(KinematicsErrorKind::kInvalidCount,
                          fmt::format("need at least 2 samples, got {}", n));
  }
  const WorldJoint w = ToWorldJoint(spec, part_id);
  if (w.type == JointType::kFixed) {
    throw KinematicsError(KinematicsErrorKind::kFixedJoint,
                          fmt::format("part {} has a fixed joint", part_id));
  }
  const Range r = *w.range;
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) {
    values[i] = r.lo + (r.hi - r.lo) * i / (n - 1);
  }
  values.back() = r.hi;
  return values;
}

}  // namespace simready
