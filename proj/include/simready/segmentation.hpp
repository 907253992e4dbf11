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

#ifndef SIMREADY_SEGMENTATION_HPP_
#define SIMREADY_SEGMENTATION_HPP_

#include <string>
#include <vector>

#include "simready/error.hpp"
#include "simready/mesh.hpp"
#include "simready/voxel.hpp"

namespace simready {

enum class SegmentationErrorKind { kEmptyLabels, kResolutionMismatch, kUnlabeled };

class SegmentationError : public KindedError<SegmentationErrorKind> {
 public:
  using KindedError::KindedError;
};

struct SegmentedMesh {
  TriMesh mesh;  // face_labels populated
  // Part ids that received no face.
  std::vector<int> empty_parts;
};

// Labels each face with the part of the occupied voxel whose center is
// nearest the face centroid, ties to the lower part id. `mesh` lives in the
// normalized [0,1]^3 frame the voxel grid covers.
SegmentedMesh SegmentMesh(const TriMesh& mesh, const PartLabeledGrid& labels);

struct PartMesh {
  int part = 0;
  TriMesh mesh;
  bool empty_warning = false;
};

// One mesh per part id in [0, part_count), vertices re-indexed compactly in
// first-use order. part_count < 0 uses 1 + max label.
std::vector<PartMesh> SplitParts(const TriMesh& labeled, int part_count = -1);

// Each occupied fine cell takes the label of the nearest labelled coarse
// cell center.
PartLabeledGrid UpsampleLabels(const PartLabeledGrid& labels,
                               const VoxelGrid& fine);

// Voxel centers of `labels` in the normalized frame, paired with part ids.
void LabeledCenters(const PartLabeledGrid& labels, std::vector<Vec3>& centers,
                    std::vector<int>& ids);

}  // namespace simready

#endif  // SIMREADY_SEGMENTATION_HPP_
