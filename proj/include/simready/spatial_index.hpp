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

#ifndef SIMREADY_SPATIAL_INDEX_HPP_
#define SIMREADY_SPATIAL_INDEX_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "simready/mesh.hpp"

namespace simready {

struct NearestHit {
  double squared_distance = std::numeric_limits<double>::infinity();
  int label = std::numeric_limits<int>::max();
  int index = -1;

  // Orders by distance, then label, then insertion index.
  bool Beats(const NearestHit& other) const {
    if (squared_distance != other.squared_distance) {
      return squared_distance < other.squared_distance;
    }
    if (label != other.label) return label < other.label;
    return index < other.index;
  }
};

inline double SquaredDistance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Uniform bucket grid over labelled points. Nearest() returns exactly the
// (distance, label, index)-minimal point a linear scan would return.
class UniformGridIndex {
 public:
  // cell_size <= 0 picks a size giving roughly two points per bucket.
  UniformGridIndex(std::span<const Vec3> points, std::span<const int> labels,
                   double cell_size = 0.0);
  explicit UniformGridIndex(std::span<const Vec3> points,
                            double cell_size = 0.0);

  NearestHit Nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  void Build(double cell_size);
  std::array<int, 3> BucketOf(const Vec3& p) const;
  std::size_t Flat(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_[1]) * z);
  }

  std::vector<Vec3> points_;
  std::vector<int> labels_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  std::array<int, 3> dims_ = {1, 1, 1};
  std::vector<std::uint32_t> bucket_start_;
  std::vector<std::uint32_t> items_;
};

}  // namespace simready

#endif  // SIMREADY_SPATIAL_INDEX_HPP_
