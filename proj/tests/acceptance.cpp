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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "export_util.hpp"
#include "flow_util.hpp"
#include "simready/export.hpp"
#include "simready/flow.hpp"
#include "simready/kinematics.hpp"
#include "simready/mesh.hpp"
#include "simready/metrics.hpp"
#include "simready/segmentation.hpp"
#include "simready/token_codec.hpp"
#include "simready/voxel.hpp"
#include "test_util.hpp"

namespace simready {
namespace {

namespace fs = std::filesystem;
using testing::Rng;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void Fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::vector<std::string> CorpusAssets() {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(SIMREADY_CORPUS)) {
    if (fs::exists(e.path() / "asset.template.json")) out.push_back(e.path().filename());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> PartMeshes(const std::string& asset) {
  std::vector<fs::path> out;
  for (int k = 0;; ++k) {
    const fs::path p = fs::path(SIMREADY_CORPUS) / asset / fmt::format("part_{}.obj", k);
    if (!fs::exists(p)) break;
    out.push_back(p);
  }
  return out;
}

TriMesh LoadAsset(const std::string& asset) {
  std::vector<TriMesh> parts;
  for (const auto& p : PartMeshes(asset)) parts.push_back(LoadMesh(p));
  return Concatenate(parts);
}

Outcome CodecRoundTrip() {
  Outcome o;
  Rng rng(101);
  const std::array resolutions{8, 16, 32};
  const std::array densities{0.01, 0.1, 0.5, 1.0};
  int failures = 0;
  const auto start = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int r = resolutions[i % 3];
    const double d = densities[(i / 3) % 4];
    const VoxelGrid g = testing::RandomGrid(rng, r, d);
    if (!(Decode(Encode(g)) == g)) ++failures;
  }
  const double secs = Seconds(start);
  if (failures > 0) o.Fail(fmt::format("{} failures", failures));
  if (secs >= 5.0) o.Fail(fmt::format("{:.2f} s", secs));
  if (o.pass) o.detail = fmt::format("1000 grids, 0 failures, {:.2f} s", secs);
  return o;
}

Outcome Compression() {
  Outcome o;
  const auto assets = CorpusAssets();
  double merged_ratio = 0.0;
  double coords_ratio = 0.0;
  for (const auto& asset : assets) {
    const TriMesh mesh = LoadAsset(asset);
    if (mesh.faces.size() < 5000) o.Fail(fmt::format("{}: {} faces", asset, mesh.faces.size()));
    const auto rep = CompareRepresentations(Normalize(mesh).mesh, kDefaultResolution);
    const auto count = [&](Representation r) { return rep[static_cast<int>(r)].tokens; };
    const auto merged = count(Representation::kMergedRuns);
    const auto index = count(Representation::kIndexList);
    const auto coords = count(Representation::kVoxelCoords);
    const auto text = count(Representation::kMeshText);
    if (!(merged <= index && index <= coords && coords <= text)) {
      o.Fail(fmt::format("{}: ordering {} {} {} {}", asset, merged, index, coords, text));
    }
    merged_ratio += static_cast<double>(text) / merged;
    coords_ratio += static_cast<double>(text) / coords;
  }
  const double n = static_cast<double>(assets.size());
  merged_ratio /= n;
  coords_ratio /= n;
  if (assets.size() < 10) o.Fail(fmt::format("{} meshes", assets.size()));
  if (merged_ratio < 50.0) o.Fail(fmt::format("mesh-text/merged {:.1f}x", merged_ratio));
  if (coords_ratio < 20.0) o.Fail(fmt::format("mesh-text/coords {:.1f}x", coords_ratio));
  if (o.pass) {
    o.detail = fmt::format("{} meshes, mean mesh-text/merged {:.1f}x, mesh-text/coords {:.1f}x",
                           assets.size(), merged_ratio, coords_ratio);
  }
  return o;
}

Outcome MetricOracles() {
  Outcome o;
  Rng rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = testing::RandomPoints(rng, 100);
    const auto b = testing::RandomPoints(rng, 100);
    const double tau = testing::Uniform(rng, 0.01, 0.3);
    if (Chamfer(a, b) != testing::BruteChamfer(a, b)) o.Fail(fmt::format("chamfer {}", trial));
    if (FScore(a, b, tau) != testing::BruteFScore(a, b, tau)) {
      o.Fail(fmt::format("fscore {}", trial));
    }
    if (Chamfer(a, a) != 0.0) o.Fail(fmt::format("chamfer(A,A) {}", trial));
    if (FScore(a, a, tau) != 100.0) o.Fail(fmt::format("fscore(A,A) {}", trial));
  }
  if (o.pass) o.detail = "100 instances bit-identical, self chamfer 0, self fscore 100";
  return o;
}

Outcome FlowObjective() {
  Outcome o;
  Rng rng(104);
  FlowConfig small = testing::GradientCheckConfig();

  double worst_loss = 0.0;
  for (auto& s : testing::RandomBatch(rng, small, 20)) {
    const testing::OracleVelocity oracle(s.x0, s.noise);
    worst_loss = std::max(worst_loss, FlowLoss(oracle, std::span(&s, 1)));
  }
  if (worst_loss > std::numeric_limits<double>::epsilon()) {
    o.Fail(fmt::format("oracle loss {:.3e}", worst_loss));
  }

  double worst_grad = 0.0;
  std::size_t params = 0;
  for (int cd : {0, 3}) {
    small.condition_dim = cd;
    const RefinerModel model(small);
    const auto batch = testing::RandomBatch(rng, small, 4);
    const auto g = testing::CheckGradient(model, batch);
    params = std::max(params, g.params);
    worst_grad = std::max(worst_grad, g.worst_relative);
  }
  if (params > 1000) o.Fail(fmt::format("{} parameters", params));
  if (worst_grad > 1e-4) o.Fail(fmt::format("gradient rel err {:.3e}", worst_grad));

  const VoxelGrid target = testing::RandomBlob(rng, 16);
  const FlowVector x0 = ToSigned(target);
  const FlowVector noise = testing::RandomNormal(rng, x0.size());
  for (int n : {1, 2, 3, 7, 16, 50, 100}) {
    const FlowVector v = noise - x0;
    const FlowVector out = Integrate([&](const FlowVector&, double) { return v; }, noise, n);
    const double err = (out - x0).cwiseAbs().maxCoeff();
    if (!(FromSigned(out, 16) == target) || err > 1e-12) {
      o.Fail(fmt::format("Euler {} steps err {:.3e}", n, err));
    }
  }

  // Single-pair overfit on a corpus asset at the default resolutions.
  const VoxelGrid fine = Voxelize(Normalize(LoadAsset("faucet")).mesh, 32, VoxelizeMode::kSolid);
  FlowConfig config;
  const std::vector<TrainingPair> pair{{Downsample(fine, config.factor()), fine, {}}};
  const auto start = Clock::now();
  const RefinerModel model = Train(pair, config);
  const VoxelGrid sample = SampleFine(model, pair[0].coarse, 50, 0);
  const double secs = Seconds(start);
  const auto& curve = model.loss_curve;
  double tail = 0.0;
  const std::size_t k = std::min<std::size_t>(10, curve.size());
  for (std::size_t i = curve.size() - k; i < curve.size(); ++i) tail += curve[i];
  const double reduction = 1.0 - tail / k / curve.front();
  const double iou = VoxelIou(sample, fine);
  if (reduction < 0.9) o.Fail(fmt::format("loss reduction {:.3f}", reduction));
  if (iou < 0.95) o.Fail(fmt::format("IoU {:.4f}", iou));
  if (secs >= 600.0) o.Fail(fmt::format("overfit {:.0f} s", secs));
  if (o.pass) {
    o.detail = fmt::format(
        "oracle loss {:.1e}, grad rel err {:.1e} ({} params), overfit {:.1f}% IoU {:.3f} in {:.0f} s",
        worst_loss, worst_grad, params, 100.0 * reduction, iou, secs);
  }
  return o;
}

Outcome ExportRoundTrip() {
  Outcome o;
  Rng rng(105);
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    const PhysicalAssetSpec spec = testing::RandomSpec(rng);
    const ExportBundle a = Export(spec);
    const ExportBundle b = Export(spec);
    if (a.urdf != b.urdf || a.mjcf != b.mjcf || a.manifest != b.manifest || a.files != b.files) {
      o.Fail(fmt::format("spec {}: export not deterministic", trial));
    }
    const auto errors = testing::RoundTripErrors(spec, ReparseUrdf(a.urdf));
    if (!errors.empty()) o.Fail(fmt::format("spec {}: {}", trial, errors.front()));
  }
  if (o.pass) o.detail = "200 specs recovered within 1e-5, byte-deterministic";
  return o;
}

Outcome Kinematics() {
  Outcome o;
  Rng rng(106);

  PhysicalAssetSpec quarter = testing::MinimalSpec();
  quarter.absolute_scale = Vec3::Ones();
  PartSpec child = quarter.parts[0];
  child.id = 1;
  child.joint = JointSpec{JointType::kRevolute, 0, Vec3::UnitZ(), Vec3::Zero(),
                          Range{0.0, std::numbers::pi}};
  quarter.parts.push_back(child);
  ValidateSpec(quarter);
  const Vec3 turned = ForwardKinematics(quarter, {{1, std::numbers::pi / 2}}).at(1) * Vec3::UnitX();
  const double quarter_err = (turned - Vec3::UnitY()).cwiseAbs().maxCoeff();
  if (quarter_err > 1e-12) o.Fail(fmt::format("quarter turn err {:.3e}", quarter_err));

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PhysicalAssetSpec s = testing::RandomSpec(rng, 5);
    // Widen every range to contain 0 so the rest configuration is legal.
    for (auto& p : s.parts) {
      if (!p.joint || !p.joint->range) continue;
      p.joint->range->lo = std::min(p.joint->range->lo, 0.0);
      p.joint->range->hi = std::max(p.joint->range->hi, 0.0);
    }
    JointValues rest;
    JointValues q;
    for (const auto& p : s.parts) {
      if (!p.joint || !p.joint->range) continue;
      const Range r = *ToWorldJoint(s, p.id).range;
      rest[p.id] = 0.0;
      q[p.id] = testing::Uniform(rng, r.lo, r.hi);
    }
    for (const auto& [id, t] : ForwardKinematics(s, rest)) {
      if (!t.matrix().isIdentity(0.0)) o.Fail(fmt::format("rest pose {} part {}", trial, id));
    }
    for (const auto& [id, t] : ForwardKinematics(s, q)) {
      worst = std::max(worst, std::abs(t.linear().determinant() - 1.0));
      const auto cells = PartVoxels(s, id).Cells();
      for (std::size_t i = 0; i < cells.size() && i < 20; ++i) {
        const Vec3 a = CellCenterToWorld(s, cells[i]);
        const Vec3 b = CellCenterToWorld(s, cells.back());
        const Vec3 c = testing::RandomPoint(rng, -1.0, 1.0);
        worst = std::max(worst, std::abs((t * a - t * b).norm() - (a - b).norm()));
        worst = std::max(worst, std::abs((t * a - t * c).norm() - (a - c).norm()));
      }
    }
  }
  if (worst > 1e-9) o.Fail(fmt::format("rigidity err {:.3e}", worst));
  if (o.pass) {
    o.detail = fmt::format("rest identity, quarter turn err {:.1e}, rigidity err {:.1e}",
                           quarter_err, worst);
  }
  return o;
}

Outcome Segmentation() {
  Outcome o;
  Rng rng(107);
  double lowest = 1.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int r = std::array{8, 16, 32}[trial % 3];
    const auto g = testing::RandomLabeledGrid(rng, r, testing::Uniform(rng, 0.05, 0.6),
                                              testing::UniformInt(rng, 1, 6));
    const TriMesh surface = testing::LabeledSurface(g, 2);
    const SegmentedMesh s = SegmentMesh(surface, g);
    std::size_t agree = 0;
    for (std::size_t f = 0; f < surface.faces.size(); ++f) {
      agree += s.mesh.face_labels->at(f) == surface.face_labels->at(f);
    }
    lowest = std::min(lowest, static_cast<double>(agree) / surface.faces.size());
  }
  if (lowest < 0.99) o.Fail(fmt::format("self-consistency {:.4f}", lowest));

  for (int trial = 0; trial < 50; ++trial) {
    const int r = std::array{4, 8, 16}[trial % 3];
    const auto g = testing::RandomLabeledGrid(rng, r, testing::Uniform(rng, 0.005, 0.3),
                                              testing::UniformInt(rng, 1, 6));
    const TriMesh m = testing::RandomSoup(rng, 300, 400);
    const SegmentedMesh s = SegmentMesh(m, g);
    std::vector<Vec3> pts;
    std::vector<int> ids;
    for (int z = 0; z < r; ++z) {
      for (int y = 0; y < r; ++y) {
        for (int x = 0; x < r; ++x) {
          const int l = g.Label({x, y, z});
          if (l == PartLabeledGrid::kEmpty) continue;
          pts.emplace_back((x + 0.5) / r, (y + 0.5) / r, (z + 0.5) / r);
          ids.push_back(l);
        }
      }
    }
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      if (s.mesh.face_labels->at(f) != testing::BruteNearest(pts, ids, FaceCentroid(m, f)).label) {
        o.Fail(fmt::format("instance {} face {}", trial, f));
        break;
      }
    }
  }
  if (o.pass) {
    o.detail = fmt::format("min self-consistency {:.4f}, 50 NN instances exact", lowest);
  }
  return o;
}

int Shell(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome Pipeline() {
  Outcome o;
  const fs::path dir = testing::TempDir("acceptance_pipeline");
  const std::string cli = fmt::format("'{}'", SIMREADY_CLI);
  const auto assets = CorpusAssets();
  const auto start = Clock::now();
  for (const auto& asset : assets) {
    const fs::path work = dir / asset;
    fs::create_directories(work);
    const std::string log = fmt::format(" > '{0}/log.txt' 2>&1", work.string());
    std::string meshes;
    for (const auto& p : PartMeshes(asset)) meshes += fmt::format(" --mesh '{}'", p.string());
    const fs::path tmpl = fs::path(SIMREADY_CORPUS) / asset / "asset.template.json";
    const std::vector<std::pair<std::string, std::string>> steps{
        {"encode", fmt::format("{} encode{} --mode solid --out '{}/merged.tok'", cli, meshes,
                               work.string())},
        {"spec", fmt::format("{} encode{} --mode solid --template '{}' --spec-out '{}/spec.json'",
                             cli, meshes, tmpl.string(), work.string())},
        {"export", fmt::format("{0} export --spec '{1}/spec.json' --out '{1}/bundle'", cli,
                               work.string())},
        {"validate", fmt::format("{} validate --bundle '{}/bundle'", cli, work.string())},
    };
    for (const auto& [name, command] : steps) {
      if (Shell("env -u SIMREADY_RES " + command + log) != 0) {
        o.Fail(fmt::format("{}: {} failed: {}", asset, name,
                           testing::ReadFile(work / "log.txt")));
        break;
      }
    }
  }
  const double secs = Seconds(start);
  if (secs >= 60.0) o.Fail(fmt::format("{:.1f} s", secs));
  if (o.pass) o.detail = fmt::format("{} assets validated in {:.1f} s", assets.size(), secs);
  fs::remove_all(dir);
  return o;
}

}  // namespace
}  // namespace simready

int main() {
  using simready::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 codec round trip", simready::CodecRoundTrip},
      {"AC2 token compression", simready::Compression},
      {"AC3 metric oracles", simready::MetricOracles},
      {"AC4 flow objective", simready::FlowObjective},
      {"AC5 export round trip", simready::ExportRoundTrip},
      {"AC6 kinematics", simready::Kinematics},
      {"AC7 segmentation", simready::Segmentation},
      {"AC8 cli pipeline", simready::Pipeline},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    fmt::print("[{}] {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
