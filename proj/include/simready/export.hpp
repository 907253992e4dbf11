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

// URDF / MJCF bundle export and the matching subset readers.
//
// Every link frame sits at its joint's world-frame origin in the rest pose
// and is axis-aligned with the world, so joint origins carry no rotation and
// axes are world axes. The root link frame is the world origin.

#ifndef SIMREADY_EXPORT_HPP_
#define SIMREADY_EXPORT_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simready/error.hpp"
#include "simready/mesh.hpp"
#include "simready/schema.hpp"
#include "simready/voxel.hpp"

namespace simready {

enum class ExportErrorKind {
  kEmptyGeometry,
  kInvalidMesh,
  kMalformedXml,
  kUnsupportedFeature,
  kMissingElement,
  kIo,
};

class ExportError : public KindedError<ExportErrorKind> {
 public:
  using KindedError::KindedError;
};

inline constexpr int kBundleSchemaVersion = 1;
inline constexpr char kUrdfFile[] = "model.urdf";
inline constexpr char kMjcfFile[] = "model.xml";
inline constexpr char kManifestFile[] = "manifest.json";
inline constexpr char kSpecFile[] = "spec.json";
inline constexpr char kMergedMeshFile[] = "meshes/merged.obj";

std::string LinkName(int part_id);
std::string JointName(int part_id);
std::string PartMeshPath(int part_id);

struct ExportBundle {
  std::string urdf;
  std::string mjcf;
  std::string manifest;
  std::vector<std::pair<int, std::string>> part_meshes;  // (part id, path)
  // Every file except the manifest, keyed by bundle-relative path.
  std::map<std::string, std::string> files;
};

// Greedy merge of occupied cells into axis-aligned boxes (x, then y, then
// z extension). Boxes are [lo, hi) in cell units and tile the grid exactly.
struct CellBox {
  Cell lo;
  Cell hi;
};
std::vector<CellBox> MergeBoxes(const VoxelGrid& grid);

// Closed box meshes in voxel units (one box per CellBox).
TriMesh Cuboidify(const VoxelGrid& grid);

// fine_mesh, when given, is in the normalized frame and carries face
// labels; parts that receive no face fall back to cuboids.
ExportBundle Export(const PhysicalAssetSpec& spec,
                    const TriMesh* fine_mesh = nullptr);

void WriteBundle(const ExportBundle& bundle, const std::filesystem::path& dir);

struct ReparsedLink {
  std::string name;
  double mass = 0.0;
  Vec3 center_of_mass = Vec3::Zero();  // world frame
  Vec3 inertia = Vec3::Zero();         // diagonal
  std::vector<std::string> meshes;
};

struct ReparsedJoint {
  std::string name;
  JointType type = JointType::kFixed;
  bool continuous = false;
  std::string parent;
  std::string child;
  Vec3 origin = Vec3::Zero();  // world frame
  Vec3 axis = Vec3::UnitX();
  // Continuous joints report [-2pi, 2pi].
  std::optional<Range> range;
};

struct KinematicSummary {
  std::string name;
  std::vector<ReparsedLink> links;
  std::vector<ReparsedJoint> joints;

  const ReparsedLink* FindLink(std::string_view name) const;
  const ReparsedJoint* FindJointForChild(std::string_view child) const;
};

// Subset readers for documents written by Export. Anything outside the
// subset raises kUnsupportedFeature rather than being skipped.
KinematicSummary ReparseUrdf(std::string_view xml);
// Bodies without a joint below the root come back as fixed joints.
KinematicSummary ReparseMjcf(std::string_view xml);

struct BundleCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<BundleCheck> checks;

  bool ok() const;
  const BundleCheck* Find(std::string_view name) const;
  std::string ToText() const;
};

// Checks: manifest, xml_well_formed, file_existence, checksums,
// joint_limits, structure, fk_sweep, mjcf_urdf_agreement. Never throws for
// bundle content problems.
ValidationReport ValidateBundle(const std::filesystem::path& dir);

std::string Sha256Hex(std::string_view data);

}  // namespace simready

#endif  // SIMREADY_EXPORT_HPP_
