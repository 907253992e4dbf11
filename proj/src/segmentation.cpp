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

#include "simready/segmentation.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "simready/spatial_index.hpp"

namespace simready {

void LabeledCenters(const PartLabeledGrid& labels, std::vector<Vec3>& centers,
                    std::vector<int>& ids) {
  centers.clear();
  ids.clear();
  const int r = labels.resolution();
  const double h = 1.0 / r;
  const auto all = labels.labels();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == PartLabeledGrid::kEmpty) continue;
    const Cell c = Delinearize(static_cast<std::int64_t>(i), r);
    centers.emplace_back((c.x + 0.5) * h, (c.y + 0.5) * h, (c.z + 0.5) * h);
    ids.push_back(all[i]);
  }
}

SegmentedMesh SegmentMesh(const TriMesh& mesh, const PartLabeledGrid& labels) {
  std::vector<Vec3> centers;
  std::vector<int> ids;
  LabeledCenters(labels, centers, ids);
  if (centers.empty()) {
    throw SegmentationError(SegmentationErrorKind::kEmptyLabels,
                            "label grid has no occupied cells");
  }
  const UniformGridIndex index(centers, ids, 2.0 / labels.resolution());
  SegmentedMesh out;
  out.mesh = mesh;
  std::vector<int> face_labels(mesh.faces.size());
  std::vector<char> used(labels.part_count(), 0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const NearestHit hit = index.Nearest(FaceCentroid(mesh, f));
    face_labels[f] = hit.label;
    used[hit.label] = 1;
  }
  out.mesh.face_labels = std::move(face_labels);
  for (int p = 0; p < labels.part_count(); ++p) {
    if (!used[p]) out.empty_parts.push_back(p);
  }
  return out;
}

std::vector<PartMesh> SplitParts(const TriMesh& labeled, int part_count) {
  if (!labeled.face_labels) {
    throw SegmentationError(SegmentationErrorKind::kUnlabeled,
                            "mesh carries no face labels");
  }
  const auto& fl = *labeled.face_labels;
  if (part_count < 0) {
    part_count = fl.empty() ? 0 : 1 + *std::max_element(fl.begin(), fl.end());
  }
  std::vector<PartMesh> parts(part_count);
  std::vector<std::unordered_map<int, int>> remap(part_count);
  for (int p = 0; p < part_count; ++p) parts[p].part = p;
  for (std::size_t f = 0; f < labeled.faces.size(); ++f) {
    const int p = fl[f];
    if (p < 0 || p >= part_count) {
      throw SegmentationError(
          SegmentationErrorKind::kUnlabeled,
          fmt::format("face {} has label {} outside [0,{})", f, p, part_count));
    }
    Face out{};
    for (int k = 0; k < 3; ++k) {
      const int v = labeled.faces[f][k];
      auto [it, inserted] = remap[p].try_emplace(
          v, static_cast<int>(parts[p].mesh.vertices.size()));
      if (inserted) parts[p].mesh.vertices.push_back(labeled.vertices[v]);
      out[k] = it->second;
    }
    parts[p].mesh.faces.push_back(out);
  }
  for (auto& part : parts) part.empty_warning = part.mesh.faces.empty();
  return parts;
}

PartLabeledGrid UpsampleLabels(const PartLabeledGrid& labels,
                               const VoxelGrid& fine) {
  const int rc = labels.resolution();
  const int rf = fine.resolution();
  if (rf % rc != 0) {
    throw SegmentationError(
        SegmentationErrorKind::kResolutionMismatch,
        fmt::format("fine resolution {} is not a multiple of {}", rf, rc));
  }
  std::vector<std::int16_t> out(fine.bits().size(), PartLabeledGrid::kEmpty);
  if (fine.Empty()) return PartLabeledGrid(rf);
  std::vector<Vec3> centers;
  std::vector<int> ids;
  LabeledCenters(labels, centers, ids);
  if (centers.empty()) {
    throw SegmentationError(SegmentationErrorKind::kEmptyLabels,
                            "label grid has no occupied cells");
  }
  const UniformGridIndex index(centers, ids, 2.0 / rc);
  const double h = 1.0 / rf;
  for (const auto& c : fine.Cells()) {
    const Vec3 p((c.x + 0.5) * h, (c.y + 0.5) * h, (c.z + 0.5) * h);
    out[LinearIndex(c, rf)] = static_cast<std::int16_t>(index.Nearest(p).label);
  }
  // Throws if a coarse part receives no fine cell; ids are never renumbered.
  return PartLabeledGrid::FromLabels(rf, std::move(out));
}

}  // namespace simready
