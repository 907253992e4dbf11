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

// Coarse-to-fine voxel refinement by flow matching.
//
// Occupancy is encoded as +1 (occupied) / -1 (empty). Along the straight
// path x_t = (1 - t) x0 + t eps the regression target of the velocity
// network is eps - x0, and the training loss is
//
//   E || f(x_t, c, V_low, t) - (eps - x0) ||^2
//
// averaged per voxel. Sampling integrates dx/dt = f from t = 1 (noise) to
// t = 0 with forward Euler and thresholds at zero.
//
// The velocity network is a shared-weight local model over the fine
// lattice. Per voxel it sees the 3x3x3 neighbourhood of x_t, and through an
// additive control branch the coarse cells within coarse_radius of its
// parent plus the voxel's offset inside that parent. A sinusoidal time
// embedding and the optional image condition c enter as a global bias.
// A tanh readout of the hidden layer predicts x0 as D in [-1, 1] and the
// velocity is recovered as (x_t - D) / max(t, t_min). Voxels whose coarse
// parent is empty skip the network and use D = -1.

#ifndef SIMREADY_FLOW_HPP_
#define SIMREADY_FLOW_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "simready/error.hpp"
#include "simready/voxel.hpp"

namespace simready {

enum class FlowErrorKind {
  kShapeMismatch,
  kInvalidTime,
  kEmptyBatch,
  kEmptyDataset,
  kInconsistentPair,
  kInvalidConfig,
  kInvalidSteps,
  kCheckpoint,
};

class FlowError : public KindedError<FlowErrorKind> {
 public:
  using KindedError::KindedError;
};

inline constexpr int kMaxCoarseRadius = 4;

struct FlowConfig {
  int fine_resolution = 32;
  int coarse_resolution = 16;
  int hidden = 16;
  int coarse_radius = 2;
  int time_frequencies = 4;
  int condition_dim = 0;
  int steps = 2000;
  int samples_per_pair = 8;
  double learning_rate = 1e-2;
  double t_min = 0.1;
  double consistency_tolerance = 0.05;
  std::uint64_t seed = 0;

  int factor() const { return fine_resolution / coarse_resolution; }
  void Validate() const;
};

// Unknown keys are rejected; missing keys keep their defaults.
FlowConfig ParseFlowConfig(std::string_view json_text);
std::string EmitFlowConfig(const FlowConfig& config);

using FlowVector = Eigen::VectorXd;

// Occupancy to +/-1 in linear-index order and back (threshold at zero).
FlowVector ToSigned(const VoxelGrid& grid);
VoxelGrid FromSigned(const FlowVector& x, int resolution);

struct FlowSample {
  FlowVector x0;
  FlowVector noise;
  double t = 0.0;
  VoxelGrid coarse{1};
  FlowVector image_condition;
};

FlowVector Interpolate(const FlowVector& x0, const FlowVector& noise, double t);

// Anything that predicts a velocity for a noisy state.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;
  virtual FlowVector Velocity(const FlowVector& x_t, double t,
                              const VoxelGrid& coarse,
                              const FlowVector& image_condition) const = 0;
};

// Mean squared error per voxel over the batch.
double FlowLoss(const VelocityModel& model, std::span<const FlowSample> batch);

class RefinerModel : public VelocityModel {
 public:
  static constexpr int kNeighbourhood = 27;
  static int StaticFeatureCount(const FlowConfig& config);

  // Random initialization from config.seed.
  explicit RefinerModel(const FlowConfig& config);
  RefinerModel(const FlowConfig& config, std::vector<double> params);

  const FlowConfig& config() const { return config_; }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t param_count() const { return params_.size(); }
  static std::size_t ParamCount(const FlowConfig& config);

  FlowVector Velocity(const FlowVector& x_t, double t, const VoxelGrid& coarse,
                      const FlowVector& image_condition) const override;

  // Loss and its gradient with respect to params() over the batch.
  double LossAndGradient(std::span<const FlowSample> batch,
                         std::vector<double>& gradient) const;

  std::vector<double> loss_curve;

  void Save(const std::filesystem::path& path) const;
  static RefinerModel Load(const std::filesystem::path& path);

 private:
  FlowConfig config_;
  std::vector<double> params_;
};

struct TrainingPair {
  VoxelGrid coarse{1};
  VoxelGrid fine{1};
  FlowVector image_condition;
};

// Deterministic for a given config.seed. loss_curve holds one value per
// step (the batch loss before that step's update).
RefinerModel Train(std::span<const TrainingPair> dataset,
                   const FlowConfig& config);

using VelocityField = std::function<FlowVector(const FlowVector& x, double t)>;

// Forward Euler from t = 1 to t = 0 in `steps` uniform steps.
FlowVector Integrate(const VelocityField& field, FlowVector x1, int steps);

VoxelGrid SampleFine(const RefinerModel& model, const VoxelGrid& coarse,
                     int steps, std::uint64_t seed,
                     const FlowVector& image_condition = {});

// "step,loss" rows.
std::string LossCurveCsv(std::span<const double> curve);

}  // namespace simready

#endif  // SIMREADY_FLOW_HPP_
