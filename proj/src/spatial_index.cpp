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

#include "simready/spatial_index.hpp"

#include <algorithm>
#include <cmath>

namespace simready {
namespace {

constexpr int kMaxBucketsPerAxis = 256;
// Relative slack on the ring lower bound so rounding in the computed
// distances can never hide an equal-or-closer point.
constexpr double kBoundSlack = 1e-9;

}  // namespace

UniformGridIndex::UniformGridIndex(std::span<const Vec3> points,
                                   std::span<const int> labels,
                                   double cell_size)
    : points_(points.begin(), points.end()),
      labels_(labels.begin(), labels.end()) {
  Build(cell_size);
}

UniformGridIndex::UniformGridIndex(std::span<const Vec3> points,
                                   double cell_size)
    : points_(points.begin(), points.end()), labels_(points.size(), 0) {
  Build(cell_size);
}

void UniformGridIndex::Build(double cell_size) {
  labels_.resize(points_.size(), 0);
  const BoundingBox box = ComputeBounds(points_);
  origin_ = box.origin;
  if (!(cell_size > 0.0)) {
    const double vol = std::max(box.extents.prod(), 1e-12);
    const double per_point = 2.0 * vol / std::max<std::size_t>(points_.size(), 1);
    cell_size = std::cbrt(per_point);
    // Flat point sets have zero volume; fall back on the largest extent.
    const double longest = box.LongestEdge();
    if (box.extents.minCoeff() <= 1e-12 * std::max(longest, 1.0)) {
      cell_size = std::max(longest, 1e-9) /
                  std::max(1.0, std::sqrt(static_cast<double>(points_.size()) / 2.0));
    }
  }
  cell_ = std::max(cell_size, box.LongestEdge() / kMaxBucketsPerAxis);
  if (!(cell_ > 0.0)) cell_ = 1.0;
  for (int k = 0; k < 3; ++k) {
    dims_[k] = std::clamp(static_cast<int>(std::floor(box.extents[k] / cell_)) + 1,
                          1, kMaxBucketsPerAxis + 1);
  }
  const std::size_t buckets =
      static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::uint32_t> counts(buckets + 1, 0);
  std::vector<std::size_t> flat(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto b = BucketOf(points_[i]);
    flat[i] = Flat(b[0], b[1], b[2]);
    ++counts[flat[i] + 1];
  }
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  bucket_start_ = counts;
  items_.assign(points_.size(), 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    items_[counts[flat[i]]++] = static_cast<std::uint32_t>(i);
  }
}

std::array<int, 3> UniformGridIndex::BucketOf(const Vec3& p) const {
  std::array<int, 3> b{};
  for (int k = 0; k < 3; ++k) {
    const double f = std::floor((p[k] - origin_[k]) / cell_);
    b[k] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(dims_[k] - 1)));
  }
  return b;
}

NearestHit UniformGridIndex::Nearest(const Vec3& query) const {
  NearestHit best;
  if (points_.empty()) return best;
  const auto center = BucketOf(query);
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (int ring = 0; ring <= max_ring; ++ring) {
    const int z0 = std::max(center[2] - ring, 0);
    const int z1 = std::min(center[2] + ring, dims_[2] - 1);
    const int y0 = std::max(center[1] - ring, 0);
    const int y1 = std::min(center[1] + ring, dims_[1] - 1);
    const int x0 = std::max(center[0] - ring, 0);
    const int x1 = std::min(center[0] + ring, dims_[0] - 1);
    for (int z = z0; z <= z1; ++z) {
      const bool z_edge = std::abs(z - center[2]) == ring;
      for (int y = y0; y <= y1; ++y) {
        const bool y_edge = std::abs(y - center[1]) == ring;
        for (int x = x0; x <= x1; ++x) {
          // Only the shell of the current ring.
          if (!z_edge && !y_edge && std::abs(x - center[0]) != ring) continue;
          const std::size_t b = Flat(x, y, z);
          for (std::uint32_t k = bucket_start_[b]; k < bucket_start_[b + 1]; ++k) {
            const std::uint32_t i = items_[k];
            NearestHit hit{SquaredDistance(points_[i], query), labels_[i],
                           static_cast<int>(i)};
            if (hit.Beats(best)) best = hit;
          }
        }
      }
    }
    // Points in later rings are at least ring * cell_ away.
    const double bound = ring * cell_;
    if (best.squared_distance < bound * bound * (1.0 - kBoundSlack)) break;
  }
  return best;
}

}  // namespace simready
