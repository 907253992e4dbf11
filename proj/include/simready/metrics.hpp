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

#ifndef SIMREADY_METRICS_HPP_
#define SIMREADY_METRICS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simready/error.hpp"
#include "simready/mesh.hpp"
#include "simready/voxel.hpp"

namespace simready {

enum class MetricErrorKind { kEmptySet, kInvalidThreshold, kResolutionMismatch, kInvalidExtent };

class MetricError : public KindedError<MetricErrorKind> {
 public:
  using KindedError::KindedError;
};

// mean_a min_b |a-b| + mean_b min_a |a-b|.
double Chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

// Percentage in [0,100]. A point counts as matched when its nearest
// neighbour is at distance <= tau.
double FScore(std::span<const Vec3> pred, std::span<const Vec3> gt, double tau);

inline constexpr int kProjectionSize = 256;
inline constexpr double kPsnrCap = 99.0;

// Binary silhouette, row-major kProjectionSize^2.
using ProjectionImage = std::vector<std::uint8_t>;
// Views along +x, -x, +y, -y, +z, -z.
using ProjectionSet = std::array<ProjectionImage, 6>;

ProjectionSet RenderProjections(const VoxelGrid& grid);
ProjectionSet RenderProjections(const TriMesh& normalized_mesh);

// PSNR of the MSE pooled over all six views; zero MSE reports kPsnrCap.
double ProjectionPsnr(const ProjectionSet& pred, const ProjectionSet& gt);
double ProjectionPsnr(const VoxelGrid& pred, const VoxelGrid& gt);
double ProjectionPsnr(const TriMesh& pred, const TriMesh& gt);

// Mean over axes of |pred - gt| / gt.
double ScaleError(const Vec3& pred_extents, const Vec3& gt_extents);

// |a ∩ b| / |a ∪ b|; 1 when both are empty.
double VoxelIou(const VoxelGrid& a, const VoxelGrid& b);

// Area-weighted uniform surface samples, deterministic for a seed.
std::vector<Vec3> SampleSurface(const TriMesh& mesh, std::size_t count,
                                std::uint64_t seed);

inline constexpr std::size_t kDefaultSurfaceSamples = 10000;
inline constexpr double kDefaultFScoreFraction = 0.05;

struct MetricReport {
  std::optional<double> psnr;
  std::optional<double> cd;
  std::optional<double> fscore;
  std::optional<double> scale_error;
  std::optional<double> iou;
};

struct MeshMetricOptions {
  std::size_t samples = kDefaultSurfaceSamples;
  std::uint64_t seed = 0;
  int resolution = kDefaultResolution;  // for IoU
  // tau = fraction * ground-truth bounding-box diagonal.
  double fscore_fraction = kDefaultFScoreFraction;
};

// Both meshes in the same normalized frame.
MetricReport CompareMeshes(const TriMesh& pred, const TriMesh& gt,
                           const MeshMetricOptions& options = {});

// Keys psnr, cd, fscore, scale_error, iou; absent metrics are null.
std::string MetricReportJson(const MetricReport& report);
// Header "metric,value"; absent metrics are omitted.
std::string MetricReportCsv(const MetricReport& report);

}  // namespace simready

#endif  // SIMREADY_METRICS_HPP_
