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

#include "simready/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "simready/spatial_index.hpp"

namespace simready {
namespace {

constexpr int kPixels = kProjectionSize * kProjectionSize;

void RequireNonEmpty(std::span<const Vec3> s, const char* name) {
  if (s.empty()) {
    throw MetricError(MetricErrorKind::kEmptySet,
                      fmt::format("{} point set is empty", name));
  }
}

double MeanNearestDistance(std::span<const Vec3> from, std::span<const Vec3> to) {
  const UniformGridIndex index(to);
  double sum = 0.0;
  for (const auto& p : from) sum += std::sqrt(index.Nearest(p).squared_distance);
  return sum / static_cast<double>(from.size());
}

std::size_t MatchedCount(std::span<const Vec3> from, std::span<const Vec3> to,
                         double tau) {
  const UniformGridIndex index(to);
  std::size_t n = 0;
  for (const auto& p : from) {
    if (std::sqrt(index.Nearest(p).squared_distance) <= tau) ++n;
  }
  return n;
}

// Image axes (u, v) and depth axis for each of the six views; `mirror`
// flips u so that the -axis view is seen from behind.
struct View {
  int u_axis;
  int v_axis;
  int depth_axis;
  bool mirror;
};

constexpr View kViews[6] = {
    {1, 2, 0, false}, {1, 2, 0, true},  {0, 2, 1, false},
    {0, 2, 1, true},  {0, 1, 2, false}, {0, 1, 2, true},
};

double PixelCenter(int i) { return (i + 0.5) / kProjectionSize; }

void SetPixel(ProjectionImage& img, const View& view, int u, int v) {
  if (view.mirror) u = kProjectionSize - 1 - u;
  img[static_cast<std::size_t>(v) * kProjectionSize + u] = 1;
}

void RasterizeTriangle(ProjectionImage& img, const View& view, const Vec3& a,
                       const Vec3& b, const Vec3& c) {
  const double ax = a[view.u_axis], ay = a[view.v_axis];
  const double bx = b[view.u_axis], by = b[view.v_axis];
  const double cx = c[view.u_axis], cy = c[view.v_axis];
  const double area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  if (area == 0.0) return;
  const auto lo_px = [](double v) {
    return std::clamp(static_cast<int>(std::floor(v * kProjectionSize - 0.5)), 0,
                      kProjectionSize - 1);
  };
  const auto hi_px = [](double v) {
    return std::clamp(static_cast<int>(std::ceil(v * kProjectionSize - 0.5)), 0,
                      kProjectionSize - 1);
  };
  const int u0 = lo_px(std::min({ax, bx, cx}));
  const int u1 = hi_px(std::max({ax, bx, cx}));
  const int v0 = lo_px(std::min({ay, by, cy}));
  const int v1 = hi_px(std::max({ay, by, cy}));
  const double sign = area > 0 ? 1.0 : -1.0;
  for (int v = v0; v <= v1; ++v) {
    const double py = PixelCenter(v);
    for (int u = u0; u <= u1; ++u) {
      const double px = PixelCenter(u);
      const double w0 = sign * ((bx - ax) * (py - ay) - (by - ay) * (px - ax));
      const double w1 = sign * ((cx - bx) * (py - by) - (cy - by) * (px - bx));
      const double w2 = sign * ((ax - cx) * (py - cy) - (ay - cy) * (px - cx));
      if (w0 >= 0 && w1 >= 0 && w2 >= 0) SetPixel(img, view, u, v);
    }
  }
}

}  // namespace

double Chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  RequireNonEmpty(a, "first");
  RequireNonEmpty(b, "second");
  return MeanNearestDistance(a, b) + MeanNearestDistance(b, a);
}

double FScore(std::span<const Vec3> pred, std::span<const Vec3> gt, double tau) {
  RequireNonEmpty(pred, "prediction");
  RequireNonEmpty(gt, "ground-truth");
  if (!(tau > 0.0)) {
    throw MetricError(MetricErrorKind::kInvalidThreshold,
                      fmt::format("threshold {} must be > 0", tau));
  }
  const double precision =
      static_cast<double>(MatchedCount(pred, gt, tau)) / pred.size();
  const double recall =
      static_cast<double>(MatchedCount(gt, pred, tau)) / gt.size();
  if (precision + recall == 0.0) return 0.0;
  return 200.0 * precision * recall / (precision + recall);
}

ProjectionSet RenderProjections(const VoxelGrid& grid) {
  ProjectionSet set;
  const int r = grid.resolution();
  for (int k = 0; k < 6; ++k) {
    const View& view = kViews[k];
    ProjectionImage& img = set[k];
    img.assign(kPixels, 0);
    for (int v = 0; v < kProjectionSize; ++v) {
      const int cv = std::min(static_cast<int>(PixelCenter(v) * r), r - 1);
      for (int u = 0; u < kProjectionSize; ++u) {
        const int cu = std::min(static_cast<int>(PixelCenter(u) * r), r - 1);
        int cell[3];
        cell[view.u_axis] = cu;
        cell[view.v_axis] = cv;
        for (int d = 0; d < r; ++d) {
          cell[view.depth_axis] = d;
          if (grid.Contains({cell[0], cell[1], cell[2]})) {
            SetPixel(img, view, u, v);
            break;
          }
        }
      }
    }
  }
  return set;
}

ProjectionSet RenderProjections(const TriMesh& mesh) {
  ProjectionSet set;
  for (int k = 0; k < 6; ++k) {
    set[k].assign(kPixels, 0);
    for (const auto& f : mesh.faces) {
      RasterizeTriangle(set[k], kViews[k], mesh.vertices[f[0]],
                        mesh.vertices[f[1]], mesh.vertices[f[2]]);
    }
  }
  return set;
}

double ProjectionPsnr(const ProjectionSet& pred, const ProjectionSet& gt) {
  std::int64_t diff = 0;
  for (int k = 0; k < 6; ++k) {
    for (int i = 0; i < kPixels; ++i) diff += pred[k][i] != gt[k][i];
  }
  if (diff == 0) return kPsnrCap;
  const double mse = static_cast<double>(diff) / (6.0 * kPixels);
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ProjectionPsnr(const VoxelGrid& pred, const VoxelGrid& gt) {
  if (gt.Empty()) {
    throw MetricError(MetricErrorKind::kEmptySet, "ground-truth grid is empty");
  }
  return ProjectionPsnr(RenderProjections(pred), RenderProjections(gt));
}

double ProjectionPsnr(const TriMesh& pred, const TriMesh& gt) {
  if (gt.empty()) {
    throw MetricError(MetricErrorKind::kEmptySet, "ground-truth mesh is empty");
  }
  return ProjectionPsnr(RenderProjections(pred), RenderProjections(gt));
}

double ScaleError(const Vec3& pred_extents, const Vec3& gt_extents) {
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (!(gt_extents[k] > 0.0)) {
      throw MetricError(MetricErrorKind::kInvalidExtent,
                        fmt::format("ground-truth extent {} must be > 0",
                                    gt_extents[k]));
    }
    sum += std::abs(pred_extents[k] - gt_extents[k]) / gt_extents[k];
  }
  return sum / 3.0;
}

double VoxelIou(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.resolution() != b.resolution()) {
    throw MetricError(MetricErrorKind::kResolutionMismatch,
                      fmt::format("resolutions {} and {} differ", a.resolution(),
                                  b.resolution()));
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto ba = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    inter += ba[i] & bb[i];
    uni += ba[i] | bb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Vec3> SampleSurface(const TriMesh& mesh, std::size_t count,
                                std::uint64_t seed) {
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += FaceArea(mesh, f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) {
    throw MetricError(MetricErrorKind::kEmptySet, "mesh has no surface area");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double pick = uni(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[it - cumulative.begin()];
    const double s = std::sqrt(uni(rng));
    const double t = uni(rng);
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    out.push_back((1.0 - s) * a + s * (1.0 - t) * b + s * t * c);
  }
  return out;
}

MetricReport CompareMeshes(const TriMesh& pred, const TriMesh& gt,
                           const MeshMetricOptions& options) {
  MetricReport report;
  report.psnr = ProjectionPsnr(pred, gt);
  const auto ps = SampleSurface(pred, options.samples, options.seed);
  const auto gs = SampleSurface(gt, options.samples, options.seed);
  report.cd = Chamfer(ps, gs);
  const BoundingBox box = ComputeBounds(gt.vertices);
  report.fscore = FScore(ps, gs, options.fscore_fraction * box.extents.norm());
  report.iou = VoxelIou(Voxelize(pred, options.resolution),
                        Voxelize(gt, options.resolution));
  return report;
}

std::string MetricReportJson(const MetricReport& report) {
  nlohmann::ordered_json j;
  const auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("psnr", report.psnr);
  put("cd", report.cd);
  put("fscore", report.fscore);
  put("scale_error", report.scale_error);
  put("iou", report.iou);
  return j.dump(2) + "\n";
}

std::string MetricReportCsv(const MetricReport& report) {
  std::string out = "metric,value\n";
  const auto put = [&out](const char* key, const std::optional<double>& v) {
    if (v) out += fmt::format("{},{:.6f}\n", key, *v);
  };
  put("psnr", report.psnr);
  put("cd", report.cd);
  put("fscore", report.fscore);
  put("scale_error", report.scale_error);
  put("iou", report.iou);
  return out;
}

}  // namespace simready
