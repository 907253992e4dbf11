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

#ifndef SIMREADY_MESH_HPP_
#define SIMREADY_MESH_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "simready/error.hpp"

namespace simready {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::int32_t, 3>;

enum class MeshErrorKind {
  kParse,
  kNoGeometry,
  kIndexOutOfRange,
  kDegenerateFace,
  kDegenerateGeometry,
  kIo,
};

class MeshError : public KindedError<MeshErrorKind> {
 public:
  using KindedError::KindedError;
};

// Indexed triangle mesh in a local frame. Face labels, when present, hold
// one part id per face.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::optional<std::vector<int>> face_labels;

  bool empty() const { return faces.empty(); }

  // Throws MeshError if an index is out of range, a face is degenerate or
  // the label vector length does not match the face count.
  void Validate() const;

  friend bool operator==(const TriMesh&, const TriMesh&) = default;
};

struct BoundingBox {
  Vec3 origin = Vec3::Zero();
  Vec3 extents = Vec3::Zero();

  double LongestEdge() const { return extents.maxCoeff(); }
};

BoundingBox ComputeBounds(std::span<const Vec3> points);

struct NormalizedMesh {
  TriMesh mesh;
  BoundingBox original;
};

// Parses the OBJ subset (v and f records, 1-based or negative relative
// indices, "a/b/c" corner forms). Polygons are fan-triangulated. vt, vn, g,
// o, s, usemtl and mtllib records are skipped.
TriMesh ParseObj(std::string_view text);
TriMesh LoadMesh(const std::filesystem::path& path);

// Vertices are written with 6 decimal places, faces 1-based.
std::string FormatObj(const TriMesh& mesh);
void SaveMesh(const TriMesh& mesh, const std::filesystem::path& path);

// Uniform scale + translation into [0,1]^3 with the longest edge equal to 1.
NormalizedMesh Normalize(const TriMesh& mesh);

// Applies the same similarity transform Normalize would apply for `frame`.
TriMesh NormalizeInFrame(const TriMesh& mesh, const BoundingBox& frame);

// Concatenates meshes, offsetting face indices. Labels are kept only if
// every input carries them.
TriMesh Concatenate(std::span<const TriMesh> meshes);

double FaceArea(const TriMesh& mesh, std::size_t face);
Vec3 FaceCentroid(const TriMesh& mesh, std::size_t face);

}  // namespace simready

#endif  // SIMREADY_MESH_HPP_
