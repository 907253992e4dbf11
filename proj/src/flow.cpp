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

#include "simready/flow.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

namespace simready {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

constexpr std::array<char, 4> kMagic = {'S', 'R', 'F', 'L'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Offsets of each parameter block inside the flat vector.
struct Layout {
  int hidden;
  int global;
  int statics;
  std::size_t w_x, w_s, w_g, b1, w2, b2, total;

  explicit Layout(const FlowConfig& c)
      : hidden(c.hidden),
        global(2 * c.time_frequencies + c.condition_dim),
        statics(RefinerModel::StaticFeatureCount(c)) {
    const std::size_t h = hidden;
    w_x = 0;
    w_s = w_x + h * RefinerModel::kNeighbourhood;
    w_g = w_s + h * statics;
    b1 = w_g + h * global;
    w2 = b1 + h;
    b2 = w2 + h;
    total = b2 + 1;
  }
};

std::int64_t Voxels(int r) { return static_cast<std::int64_t>(r) * r * r; }

// Fine voxels whose coarse parent is occupied, in linear-index order. The
// network only runs on these rows; every other voxel predicts x0 = -1.
std::vector<std::int64_t> SupportRows(const VoxelGrid& coarse,
                                      const FlowConfig& config) {
  const int r = config.fine_resolution;
  const int k = config.factor();
  std::vector<std::int64_t> rows;
  std::int64_t row = 0;
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x, ++row) {
        if (coarse.Contains({x / k, y / k, z / k})) rows.push_back(row);
      }
    }
  }
  return rows;
}

std::array<int, 3> Coords(std::int64_t row, int r) {
  return {static_cast<int>(row % r), static_cast<int>((row / r) % r),
          static_cast<int>(row / (static_cast<std::int64_t>(r) * r))};
}

// 3x3x3 neighbourhood gather, x-fastest offsets, centre at column 13.
RowMatrix Neighbourhood(const FlowVector& field, int r,
                        const std::vector<std::int64_t>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()),
                RefinerModel::kNeighbourhood);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [x, y, z] = Coords(rows[i], r);
    int col = 0;
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx, ++col) {
          const int nx = x + dx, ny = y + dy, nz = z + dz;
          const bool inside =
              nx >= 0 && ny >= 0 && nz >= 0 && nx < r && ny < r && nz < r;
          out(i, col) =
              inside ? field[nx + static_cast<std::int64_t>(r) * (ny + r * nz)]
                     : 0.0;
        }
      }
    }
  }
  return out;
}

// Control-branch inputs: the coarse cells within coarse_radius of the
// voxel's parent and the voxel's offset inside the parent. The coarse window
// is mirrored along every axis where the offset lies in the upper half, so
// the voxel's own corner always faces the negative side.
RowMatrix StaticFeatures(const VoxelGrid& coarse, const FlowConfig& config,
                         const std::vector<std::int64_t>& rows) {
  const int r = config.fine_resolution;
  const int rc = config.coarse_resolution;
  const int k = config.factor();
  const int rad = config.coarse_radius;
  const int window = RefinerModel::StaticFeatureCount(config) - 3;
  const auto bits = coarse.bits();
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), window + 3);
  for (std::size_t row = 0; row < rows.size(); ++row) {
    const std::array<int, 3> c = Coords(rows[row], r);
    std::array<int, 3> parent{}, sign{};
    for (int a = 0; a < 3; ++a) {
      parent[a] = c[a] / k;
      sign[a] = 2 * (c[a] % k) >= k && k > 1 ? -1 : 1;
      out(row, window + a) =
          k > 1 ? 2.0 * (c[a] % k) / (k - 1) - 1.0 : 0.0;
    }
    int col = 0;
    for (int dz = -rad; dz <= rad; ++dz) {
      const int nz = parent[2] + sign[2] * dz;
      for (int dy = -rad; dy <= rad; ++dy) {
        const int ny = parent[1] + sign[1] * dy;
        for (int dx = -rad; dx <= rad; ++dx, ++col) {
          const int nx = parent[0] + sign[0] * dx;
          const bool inside = nx >= 0 && ny >= 0 && nz >= 0 && nx < rc &&
                              ny < rc && nz < rc;
          const std::size_t index =
              nx + static_cast<std::size_t>(rc) * (ny + static_cast<std::size_t>(rc) * nz);
          out(row, col) = inside && bits[index] ? 1.0 : -1.0;
        }
      }
    }
  }
  return out;
}

Eigen::VectorXd GlobalFeatures(double t, const FlowVector& image_condition,
                               const FlowConfig& config) {
  Eigen::VectorXd g(2 * config.time_frequencies + config.condition_dim);
  for (int j = 0; j < config.time_frequencies; ++j) {
    const double w = std::numbers::pi * std::ldexp(1.0, j);
    g[2 * j] = std::sin(w * t);
    g[2 * j + 1] = std::cos(w * t);
  }
  for (int j = 0; j < config.condition_dim; ++j) {
    g[2 * config.time_frequencies + j] =
        j < image_condition.size() ? image_condition[j] : 0.0;
  }
  return g;
}

void CheckCoarse(const VoxelGrid& coarse, const FlowConfig& config) {
  if (coarse.resolution() != config.coarse_resolution) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("coarse grid resolution {} != {}",
                                coarse.resolution(), config.coarse_resolution));
  }
}

void CheckCondition(const FlowVector& c, const FlowConfig& config) {
  if (c.size() != 0 && c.size() != config.condition_dim) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("image condition has {} values, expected {}",
                                c.size(), config.condition_dim));
  }
}

struct Forward {
  std::vector<std::int64_t> rows;
  RowMatrix x_feats;
  RowMatrix s_feats;
  Eigen::VectorXd global;
  RowMatrix hidden;        // tanh activations, N x H
  Eigen::VectorXd x0_hat;  // D on the support rows
  Eigen::VectorXd velocity;
  double inv_t = 1.0;
};

Forward RunForward(const std::vector<double>& params, const FlowConfig& config,
                   const FlowVector& x_t, double t, const VoxelGrid& coarse,
                   const FlowVector& image_condition) {
  const Layout L(config);
  const int r = config.fine_resolution;
  const int h = config.hidden;
  Forward fw;
  fw.rows = SupportRows(coarse, config);
  fw.x_feats = Neighbourhood(x_t, r, fw.rows);
  fw.s_feats = StaticFeatures(coarse, config, fw.rows);
  fw.global = GlobalFeatures(t, image_condition, config);
  const ConstRowMap w_x(params.data() + L.w_x, h, RefinerModel::kNeighbourhood);
  const ConstRowMap w_s(params.data() + L.w_s, h, L.statics);
  const ConstRowMap w_g(params.data() + L.w_g, h, L.global);
  const Eigen::Map<const Eigen::VectorXd> b1(params.data() + L.b1, h);
  const Eigen::Map<const Eigen::VectorXd> w2(params.data() + L.w2, h);
  const double b2 = params[L.b2];

  const Eigen::RowVectorXd bias = (w_g * fw.global + b1).transpose();
  fw.hidden = fw.x_feats * w_x.transpose() + fw.s_feats * w_s.transpose();
  fw.hidden.rowwise() += bias;
  fw.hidden = fw.hidden.array().tanh();
  fw.x0_hat = ((fw.hidden * w2).array() + b2).tanh();
  fw.inv_t = 1.0 / std::max(t, config.t_min);
  Eigen::VectorXd d = Eigen::VectorXd::Constant(x_t.size(), -1.0);
  for (std::size_t i = 0; i < fw.rows.size(); ++i) d[fw.rows[i]] = fw.x0_hat[i];
  fw.velocity = (x_t - d) * fw.inv_t;
  return fw;
}

void CheckSample(const FlowSample& s, const FlowConfig& config) {
  const auto n = Voxels(config.fine_resolution);
  if (s.x0.size() != n || s.noise.size() != n) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("sample tensors have {} / {} values, expected {}",
                                s.x0.size(), s.noise.size(), n));
  }
  if (!(s.t >= 0.0 && s.t <= 1.0)) {
    throw FlowError(FlowErrorKind::kInvalidTime,
                    fmt::format("t = {} outside [0, 1]", s.t));
  }
  CheckCoarse(s.coarse, config);
  CheckCondition(s.image_condition, config);
}

void PutU32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t GetU32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FlowError(FlowErrorKind::kCheckpoint, "truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void FlowConfig::Validate() const {
  const auto fail = [](const std::string& msg) {
    throw FlowError(FlowErrorKind::kInvalidConfig, msg);
  };
  if (coarse_resolution < 1 || fine_resolution < coarse_resolution ||
      fine_resolution > kMaxResolution ||
      fine_resolution % coarse_resolution != 0) {
    fail(fmt::format("fine resolution {} must be a multiple of coarse {} and "
                     "at most {}",
                     fine_resolution, coarse_resolution, kMaxResolution));
  }
  if (hidden < 1) fail("hidden must be >= 1");
  if (coarse_radius < 0 || coarse_radius > kMaxCoarseRadius) {
    fail(fmt::format("coarse_radius must lie in [0, {}]", kMaxCoarseRadius));
  }
  if (time_frequencies < 0 || condition_dim < 0) {
    fail("time_frequencies and condition_dim must be >= 0");
  }
  if (steps < 0) fail("steps must be >= 0");
  if (samples_per_pair < 1) fail("samples_per_pair must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(t_min > 0.0 && t_min <= 1.0)) fail("t_min must lie in (0, 1]");
  if (!(consistency_tolerance >= 0.0 && consistency_tolerance <= 1.0)) {
    fail("consistency_tolerance must lie in [0, 1]");
  }
}

FlowConfig ParseFlowConfig(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FlowError(FlowErrorKind::kInvalidConfig, e.what());
  }
  if (!j.is_object()) {
    throw FlowError(FlowErrorKind::kInvalidConfig, "config must be an object");
  }
  FlowConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "fine_resolution") c.fine_resolution = value.get<int>();
      else if (key == "coarse_resolution") c.coarse_resolution = value.get<int>();
      else if (key == "hidden") c.hidden = value.get<int>();
      else if (key == "coarse_radius") c.coarse_radius = value.get<int>();
      else if (key == "time_frequencies") c.time_frequencies = value.get<int>();
      else if (key == "condition_dim") c.condition_dim = value.get<int>();
      else if (key == "steps") c.steps = value.get<int>();
      else if (key == "samples_per_pair") c.samples_per_pair = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "t_min") c.t_min = value.get<double>();
      else if (key == "consistency_tolerance") c.consistency_tolerance = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw FlowError(FlowErrorKind::kInvalidConfig,
                           fmt::format("unknown config key '{}'", key));
    } catch (const nlohmann::json::type_error&) {
      throw FlowError(FlowErrorKind::kInvalidConfig,
                      fmt::format("config key '{}' has the wrong type", key));
    }
  }
  c.Validate();
  return c;
}

std::string EmitFlowConfig(const FlowConfig& c) {
  nlohmann::ordered_json j;
  j["fine_resolution"] = c.fine_resolution;
  j["coarse_resolution"] = c.coarse_resolution;
  j["hidden"] = c.hidden;
  j["coarse_radius"] = c.coarse_radius;
  j["time_frequencies"] = c.time_frequencies;
  j["condition_dim"] = c.condition_dim;
  j["steps"] = c.steps;
  j["samples_per_pair"] = c.samples_per_pair;
  j["learning_rate"] = c.learning_rate;
  j["t_min"] = c.t_min;
  j["consistency_tolerance"] = c.consistency_tolerance;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

FlowVector ToSigned(const VoxelGrid& grid) {
  const auto bits = grid.bits();
  FlowVector x(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) x[i] = bits[i] ? 1.0 : -1.0;
  return x;
}

VoxelGrid FromSigned(const FlowVector& x, int resolution) {
  VoxelGrid grid(resolution);
  if (x.size() != grid.volume()) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("vector of {} values for resolution {}",
                                x.size(), resolution));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) grid.SetIndex(i);
  }
  return grid;
}

FlowVector Interpolate(const FlowVector& x0, const FlowVector& noise, double t) {
  if (x0.size() != noise.size()) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("x0 has {} values, noise {}", x0.size(),
                                noise.size()));
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw FlowError(FlowErrorKind::kInvalidTime,
                    fmt::format("t = {} outside [0, 1]", t));
  }
  return (1.0 - t) * x0 + t * noise;
}

double FlowLoss(const VelocityModel& model, std::span<const FlowSample> batch) {
  if (batch.empty()) {
    throw FlowError(FlowErrorKind::kEmptyBatch, "empty batch");
  }
  double total = 0.0;
  for (const auto& s : batch) {
    if (s.x0.size() != s.noise.size()) {
      throw FlowError(FlowErrorKind::kShapeMismatch, "x0 and noise differ in size");
    }
    const FlowVector x_t = Interpolate(s.x0, s.noise, s.t);
    const FlowVector v = model.Velocity(x_t, s.t, s.coarse, s.image_condition);
    if (v.size() != x_t.size()) {
      throw FlowError(FlowErrorKind::kShapeMismatch,
                      "model output shape differs from input");
    }
    total += (v - (s.noise - s.x0)).squaredNorm() / static_cast<double>(x_t.size());
  }
  return total / static_cast<double>(batch.size());
}

int RefinerModel::StaticFeatureCount(const FlowConfig& config) {
  const int side = 2 * config.coarse_radius + 1;
  return side * side * side + 3;
}

std::size_t RefinerModel::ParamCount(const FlowConfig& config) {
  return Layout(config).total;
}

RefinerModel::RefinerModel(const FlowConfig& config) : config_(config) {
  config_.Validate();
  const Layout L(config_);
  params_.assign(L.total, 0.0);
  std::mt19937_64 rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double in_scale =
      1.0 / std::sqrt(static_cast<double>(kNeighbourhood + L.statics + L.global));
  for (std::size_t i = L.w_x; i < L.b1; ++i) params_[i] = normal(rng) * in_scale;
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(L.hidden));
  for (std::size_t i = L.w2; i < L.b2; ++i) params_[i] = normal(rng) * out_scale;
}

RefinerModel::RefinerModel(const FlowConfig& config, std::vector<double> params)
    : config_(config), params_(std::move(params)) {
  config_.Validate();
  if (params_.size() != ParamCount(config_)) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("{} parameters given, architecture needs {}",
                                params_.size(), ParamCount(config_)));
  }
}

FlowVector RefinerModel::Velocity(const FlowVector& x_t, double t,
                                  const VoxelGrid& coarse,
                                  const FlowVector& image_condition) const {
  if (x_t.size() != Voxels(config_.fine_resolution)) {
    throw FlowError(FlowErrorKind::kShapeMismatch,
                    fmt::format("x_t has {} values, expected {}", x_t.size(),
                                Voxels(config_.fine_resolution)));
  }
  CheckCoarse(coarse, config_);
  CheckCondition(image_condition, config_);
  return RunForward(params_, config_, x_t, t, coarse, image_condition).velocity;
}

double RefinerModel::LossAndGradient(std::span<const FlowSample> batch,
                                     std::vector<double>& gradient) const {
  if (batch.empty()) {
    throw FlowError(FlowErrorKind::kEmptyBatch, "empty batch");
  }
  const Layout L(config_);
  const int h = config_.hidden;
  gradient.assign(params_.size(), 0.0);
  RowMap g_wx(gradient.data() + L.w_x, h, kNeighbourhood);
  RowMap g_ws(gradient.data() + L.w_s, h, L.statics);
  RowMap g_wg(gradient.data() + L.w_g, h, L.global);
  Eigen::Map<Eigen::VectorXd> g_b1(gradient.data() + L.b1, h);
  Eigen::Map<Eigen::VectorXd> g_w2(gradient.data() + L.w2, h);
  const Eigen::Map<const Eigen::VectorXd> w2(params_.data() + L.w2, h);

  const double n = static_cast<double>(Voxels(config_.fine_resolution));
  const double scale = 1.0 / (n * static_cast<double>(batch.size()));
  double loss = 0.0;
  for (const auto& s : batch) {
    CheckSample(s, config_);
    const FlowVector x_t = Interpolate(s.x0, s.noise, s.t);
    const Forward fw =
        RunForward(params_, config_, x_t, s.t, s.coarse, s.image_condition);
    const Eigen::VectorXd residual = fw.velocity - (s.noise - s.x0);
    loss += residual.squaredNorm() * scale;
    // dL/do = 2 r scale * (-1/t) * (1 - D^2), with D = tanh(o).
    Eigen::VectorXd d_x0(static_cast<Eigen::Index>(fw.rows.size()));
    for (std::size_t i = 0; i < fw.rows.size(); ++i) {
      d_x0[i] = residual[fw.rows[i]] * (-2.0 * scale * fw.inv_t) *
                (1.0 - fw.x0_hat[i] * fw.x0_hat[i]);
    }
    g_w2 += fw.hidden.transpose() * d_x0;
    gradient[L.b2] += d_x0.sum();
    RowMatrix d_z = d_x0 * w2.transpose();
    d_z.array() *= 1.0 - fw.hidden.array().square();
    g_wx += d_z.transpose() * fw.x_feats;
    g_ws += d_z.transpose() * fw.s_feats;
    const Eigen::VectorXd d_bias = d_z.colwise().sum().transpose();
    g_b1 += d_bias;
    g_wg += d_bias * fw.global.transpose();
  }
  return loss;
}

void RefinerModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FlowError(FlowErrorKind::kCheckpoint,
                    fmt::format("cannot write '{}'", path.string()));
  }
  out.write(kMagic.data(), kMagic.size());
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(config_.fine_resolution));
  PutU32(out, static_cast<std::uint32_t>(config_.coarse_resolution));
  PutU32(out, static_cast<std::uint32_t>(config_.hidden));
  PutU32(out, static_cast<std::uint32_t>(config_.coarse_radius));
  PutU32(out, static_cast<std::uint32_t>(config_.time_frequencies));
  PutU32(out, static_cast<std::uint32_t>(config_.condition_dim));
  PutU32(out, static_cast<std::uint32_t>(params_.size()));
  for (double p : params_) {
    PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p)));
  }
  if (!out) {
    throw FlowError(FlowErrorKind::kCheckpoint,
                    fmt::format("write failed for '{}'", path.string()));
  }
}

RefinerModel RefinerModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FlowError(FlowErrorKind::kCheckpoint,
                    fmt::format("cannot open '{}'", path.string()));
  }
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw FlowError(FlowErrorKind::kCheckpoint, "not a refiner checkpoint");
  }
  if (GetU32(in) != kCheckpointVersion) {
    throw FlowError(FlowErrorKind::kCheckpoint, "unsupported checkpoint version");
  }
  FlowConfig config;
  config.fine_resolution = static_cast<int>(GetU32(in));
  config.coarse_resolution = static_cast<int>(GetU32(in));
  config.hidden = static_cast<int>(GetU32(in));
  config.coarse_radius = static_cast<int>(GetU32(in));
  config.time_frequencies = static_cast<int>(GetU32(in));
  config.condition_dim = static_cast<int>(GetU32(in));
  config.Validate();
  const std::uint32_t count = GetU32(in);
  if (count != ParamCount(config)) {
    throw FlowError(FlowErrorKind::kCheckpoint,
                    "parameter count does not match header shapes");
  }
  std::vector<double> params(count);
  for (auto& p : params) p = std::bit_cast<float>(GetU32(in));
  return RefinerModel(config, std::move(params));
}

RefinerModel Train(std::span<const TrainingPair> dataset,
                   const FlowConfig& config) {
  config.Validate();
  if (dataset.empty()) {
    throw FlowError(FlowErrorKind::kEmptyDataset, "empty dataset");
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& pair = dataset[i];
    if (pair.fine.resolution() != config.fine_resolution ||
        pair.coarse.resolution() != config.coarse_resolution) {
      throw FlowError(FlowErrorKind::kInconsistentPair,
                      fmt::format("pair {}: resolutions {}/{} do not match "
                                  "config {}/{}",
                                  i, pair.fine.resolution(),
                                  pair.coarse.resolution(),
                                  config.fine_resolution,
                                  config.coarse_resolution));
    }
    const VoxelGrid down = Downsample(pair.fine, config.factor());
    std::int64_t missing = 0;
    const auto cb = pair.coarse.bits();
    const auto db = down.bits();
    for (std::size_t k = 0; k < cb.size(); ++k) missing += cb[k] && !db[k];
    const auto coarse_count = pair.coarse.Count();
    if (coarse_count > 0 &&
        static_cast<double>(missing) / coarse_count > config.consistency_tolerance) {
      throw FlowError(FlowErrorKind::kInconsistentPair,
                      fmt::format("pair {}: {} of {} coarse cells have no fine "
                                  "cell",
                                  i, missing, coarse_count));
    }
    CheckCondition(pair.image_condition, config);
  }

  RefinerModel model(config);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = Voxels(config.fine_resolution);

  std::vector<FlowSample> batch;
  for (const auto& pair : dataset) {
    for (int k = 0; k < config.samples_per_pair; ++k) {
      FlowSample s;
      s.x0 = ToSigned(pair.fine);
      s.noise = FlowVector(n);
      s.coarse = pair.coarse;
      s.image_condition = pair.image_condition;
      batch.push_back(std::move(s));
    }
  }

  // Adam.
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::vector<double> m(model.param_count(), 0.0);
  std::vector<double> v(model.param_count(), 0.0);
  std::vector<double> grad;
  auto params = model.mutable_params();
  for (int step = 0; step < config.steps; ++step) {
    // Stratified t: one draw per stratum of [0, 1), shared across pairs.
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& s = batch[b];
      const auto stratum = b % static_cast<std::size_t>(config.samples_per_pair);
      s.t = (static_cast<double>(stratum) + uniform(rng)) / config.samples_per_pair;
      for (Eigen::Index i = 0; i < n; ++i) s.noise[i] = normal(rng);
    }
    const double loss = model.LossAndGradient(batch, grad);
    model.loss_curve.push_back(loss);
    const double c1 = 1.0 - std::pow(kBeta1, step + 1);
    const double c2 = 1.0 - std::pow(kBeta2, step + 1);
    // Cosine decay to a tenth of the base rate.
    const double progress = static_cast<double>(step) / config.steps;
    const double lr = config.learning_rate *
                      (0.55 + 0.45 * std::cos(std::numbers::pi * progress));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }
  return model;
}

FlowVector Integrate(const VelocityField& field, FlowVector x1, int steps) {
  if (steps < 1) {
    throw FlowError(FlowErrorKind::kInvalidSteps,
                    fmt::format("need at least one step, got {}", steps));
  }
  FlowVector x = std::move(x1);
  const double dt = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(steps - i) / steps;
    x -= dt * field(x, t);
  }
  return x;
}

VoxelGrid SampleFine(const RefinerModel& model, const VoxelGrid& coarse,
                     int steps, std::uint64_t seed,
                     const FlowVector& image_condition) {
  const FlowConfig& config = model.config();
  CheckCoarse(coarse, config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FlowVector noise(Voxels(config.fine_resolution));
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = normal(rng);
  const FlowVector x0 = Integrate(
      [&](const FlowVector& x, double t) {
        return model.Velocity(x, t, coarse, image_condition);
      },
      std::move(noise), steps);
  return FromSigned(x0, config.fine_resolution);
}

std::string LossCurveCsv(std::span<const double> curve) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += fmt::format("{},{:.9g}\n", i, curve[i]);
  }
  return out;
}

}  // namespace simready
