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

#include <gtest/gtest.h>

#include "flow_util.hpp"
#include "simready/metrics.hpp"
#include "test_util.hpp"

namespace simready {
namespace {

using testing::Rng;

template <typename Fn>
FlowErrorKind KindOf(Fn&& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const FlowError& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no FlowError thrown";
  return FlowErrorKind::kCheckpoint;
}

class ZeroVelocity : public VelocityModel {
 public:
  FlowVector Velocity(const FlowVector& x_t, double, const VoxelGrid&,
                      const FlowVector&) const override {
    return FlowVector::Zero(x_t.size());
  }
};

FlowConfig SmallConfig() {
  FlowConfig c;
  c.fine_resolution = 16;
  c.coarse_resolution = 8;
  c.hidden = 8;
  c.steps = 20;
  c.samples_per_pair = 2;
  c.seed = 11;
  return c;
}

VoxelGrid Ball(int r, Vec3 centre, double radius) {
  VoxelGrid g(r);
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        if ((Vec3(x + 0.5, y + 0.5, z + 0.5) - centre).norm() <= radius) g.Set({x, y, z});
      }
    }
  }
  return g;
}

TrainingPair PairOf(const VoxelGrid& fine, int factor) {
  return {Downsample(fine, factor), fine, {}};
}

TEST(Interpolate, Examples) {
  const FlowVector x0 = FlowVector::Constant(5, -1.0);
  const FlowVector eps = FlowVector::LinSpaced(5, -2.0, 2.0);
  EXPECT_EQ(Interpolate(x0, eps, 0.0), x0);
  EXPECT_EQ(Interpolate(x0, eps, 1.0), eps);
  EXPECT_EQ(Interpolate(FlowVector::Zero(4), FlowVector::Ones(4), 0.5),
            FlowVector::Constant(4, 0.5));
  EXPECT_EQ(KindOf([&] { Interpolate(x0, FlowVector::Zero(4), 0.5); }),
            FlowErrorKind::kShapeMismatch);
  EXPECT_EQ(KindOf([&] { Interpolate(x0, eps, 1.5); }), FlowErrorKind::kInvalidTime);
}

TEST(Interpolate, PropertyAffineInTime) {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    // Dyadic values and times keep every operation exact.
    FlowVector x0(16), eps(16);
    for (int i = 0; i < 16; ++i) {
      x0[i] = testing::UniformInt(rng, -64, 64) / 32.0;
      eps[i] = testing::UniformInt(rng, -64, 64) / 32.0;
    }
    const double t1 = testing::UniformInt(rng, 0, 16) / 16.0;
    const double t2 = testing::UniformInt(rng, 0, 16) / 16.0;
    const FlowVector mid = Interpolate(x0, eps, 0.5 * (t1 + t2));
    const FlowVector avg = 0.5 * (Interpolate(x0, eps, t1) + Interpolate(x0, eps, t2));
    ASSERT_EQ(mid, avg);
  }
}

TEST(FlowLoss, OracleFieldHasZeroLoss) {
  Rng rng(72);
  const FlowConfig c = testing::GradientCheckConfig();
  for (const auto& s : testing::RandomBatch(rng, c, 20)) {
    const testing::OracleVelocity oracle(s.x0, s.noise);
    const FlowSample batch[] = {s};
    ASSERT_EQ(FlowLoss(oracle, batch), 0.0);
  }
}

TEST(FlowLoss, ZeroModelOnZeroDataIsNoiseVariance) {
  Rng rng(73);
  std::vector<FlowSample> batch;
  for (int i = 0; i < 10; ++i) {
    FlowSample s;
    s.x0 = FlowVector::Zero(1000);
    s.noise = testing::RandomNormal(rng, 1000);
    s.t = testing::Uniform(rng, 0, 1);
    batch.push_back(s);
  }
  EXPECT_NEAR(FlowLoss(ZeroVelocity{}, batch), 1.0, 0.05);
}

TEST(FlowLoss, EmptyBatchAndMismatchedShapes) {
  EXPECT_EQ(KindOf([] { FlowLoss(ZeroVelocity{}, {}); }), FlowErrorKind::kEmptyBatch);
  const RefinerModel m(testing::GradientCheckConfig());
  std::vector<double> g;
  EXPECT_EQ(KindOf([&] { m.LossAndGradient({}, g); }), FlowErrorKind::kEmptyBatch);
  FlowSample s;
  s.x0 = FlowVector::Zero(3);
  s.noise = FlowVector::Zero(4);
  const FlowSample bad[] = {s};
  EXPECT_EQ(KindOf([&] { FlowLoss(ZeroVelocity{}, bad); }), FlowErrorKind::kShapeMismatch);
}

TEST(FlowLoss, ModelLossMatchesGradientPassAndIsNonNegative) {
  Rng rng(74);
  const FlowConfig c = testing::GradientCheckConfig();
  for (int trial = 0; trial < 10; ++trial) {
    FlowConfig ct = c;
    ct.seed = trial;
    const RefinerModel m(ct);
    const auto batch = testing::RandomBatch(rng, ct, 3);
    std::vector<double> g;
    const double loss = m.LossAndGradient(batch, g);
    EXPECT_GE(loss, 0.0);
    EXPECT_NEAR(loss, FlowLoss(m, batch), 1e-12 * loss);
    EXPECT_EQ(g.size(), m.param_count());
  }
}

TEST(RefinerModel, GradientMatchesCentralDifferences) {
  Rng rng(75);
  for (int cond : {0, 3}) {
    FlowConfig c = testing::GradientCheckConfig();
    c.condition_dim = cond;
    const RefinerModel m(c);
    ASSERT_LE(m.param_count(), 1000u);
    const auto check = testing::CheckGradient(m, testing::RandomBatch(rng, c, 3));
    EXPECT_LE(check.worst_relative, 1e-4) << "condition_dim " << cond;
  }
}

TEST(RefinerModel, ParamCountAndShapes) {
  const FlowConfig c = testing::GradientCheckConfig();
  EXPECT_EQ(RefinerModel::StaticFeatureCount(c), 30);
  EXPECT_EQ(RefinerModel::ParamCount(c), 537u);
  const RefinerModel m(c);
  const VoxelGrid coarse = VoxelGrid::Full(4);
  EXPECT_EQ(m.Velocity(FlowVector::Zero(512), 0.5, coarse, {}).size(), 512);
  EXPECT_EQ(KindOf([&] { m.Velocity(FlowVector::Zero(64), 0.5, coarse, {}); }),
            FlowErrorKind::kShapeMismatch);
  EXPECT_EQ(KindOf([&] { m.Velocity(FlowVector::Zero(512), 0.5, VoxelGrid(8), {}); }),
            FlowErrorKind::kShapeMismatch);
  EXPECT_EQ(KindOf([&] { RefinerModel(c, std::vector<double>(3)); }),
            FlowErrorKind::kShapeMismatch);
}

TEST(RefinerModel, EmptyParentsPredictEmpty) {
  // Outside the coarse support the model predicts x0 = -1, so the velocity
  // is (x_t + 1) / max(t, t_min) whatever the weights.
  const FlowConfig c = testing::GradientCheckConfig();
  const RefinerModel m(c);
  Rng rng(76);
  const FlowVector x = testing::RandomNormal(rng, 512);
  const FlowVector v = m.Velocity(x, 0.5, VoxelGrid(4), {});
  EXPECT_LE((v - (x.array() + 1.0).matrix() / 0.5).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Integrate, OracleFieldRecoversX0ForAnyStepCount) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const VoxelGrid fine = testing::RandomGrid(rng, 8, 0.3);
    const FlowVector x0 = ToSigned(fine);
    const FlowVector eps = testing::RandomNormal(rng, x0.size());
    const FlowVector target = eps - x0;
    const auto field = [&](const FlowVector&, double) { return target; };
    const FlowVector one = Integrate(field, eps, 1);
    for (int n : {1, 2, 7, 50}) {
      const FlowVector out = Integrate(field, eps, n);
      ASSERT_EQ(FromSigned(out, 8), fine) << n;
      ASSERT_LE((out - x0).cwiseAbs().maxCoeff(), 1e-12) << n;
      ASSERT_EQ(FromSigned(out, 8), FromSigned(one, 8));
    }
  }
  EXPECT_EQ(KindOf([] { Integrate([](const FlowVector& x, double) { return x; },
                                  FlowVector::Zero(3), 0); }),
            FlowErrorKind::kInvalidSteps);
}

TEST(Integrate, VisitsUniformTimesFromOneDown) {
  std::vector<double> seen;
  Integrate(
      [&](const FlowVector& x, double t) {
        seen.push_back(t);
        return FlowVector::Zero(x.size());
      },
      FlowVector::Zero(1), 4);
  EXPECT_EQ(seen, (std::vector<double>{1.0, 0.75, 0.5, 0.25}));
}

TEST(Train, DeterministicForSeed) {
  Rng rng(78);
  const FlowConfig c = SmallConfig();
  const VoxelGrid fine = Ball(16, Vec3(8, 8, 8), 5);
  const TrainingPair pairs[] = {PairOf(fine, 2)};
  const RefinerModel a = Train(pairs, c);
  const RefinerModel b = Train(pairs, c);
  ASSERT_EQ(a.loss_curve.size(), 20u);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  FlowConfig other = c;
  other.seed = 12;
  EXPECT_NE(Train(pairs, other).loss_curve, a.loss_curve);
  EXPECT_EQ(SampleFine(a, pairs[0].coarse, 5, 1), SampleFine(a, pairs[0].coarse, 5, 1));
}

TEST(Train, DatasetErrors) {
  const FlowConfig c = SmallConfig();
  EXPECT_EQ(KindOf([&] { Train({}, c); }), FlowErrorKind::kEmptyDataset);

  const VoxelGrid fine = Ball(16, Vec3(8, 8, 8), 4);
  TrainingPair bad = PairOf(fine, 2);
  bad.coarse = VoxelGrid::Full(8);
  const TrainingPair pairs[] = {PairOf(fine, 2), bad};
  std::string msg;
  EXPECT_EQ(KindOf([&] { Train(pairs, c); }, &msg), FlowErrorKind::kInconsistentPair);
  EXPECT_NE(msg.find("pair 1"), std::string::npos) << msg;

  const TrainingPair wrong_res[] = {PairOf(Ball(32, Vec3(16, 16, 16), 8), 2)};
  EXPECT_EQ(KindOf([&] { Train(wrong_res, c); }), FlowErrorKind::kInconsistentPair);

  FlowConfig broken = c;
  broken.coarse_radius = kMaxCoarseRadius + 1;
  const TrainingPair ok[] = {PairOf(fine, 2)};
  EXPECT_EQ(KindOf([&] { Train(ok, broken); }), FlowErrorKind::kInvalidConfig);
}

TEST(Train, ToleratesFewMissingCoarseCells) {
  FlowConfig c = SmallConfig();
  c.steps = 1;
  const VoxelGrid fine = Ball(16, Vec3(8, 8, 8), 6);
  TrainingPair pair = PairOf(fine, 2);
  pair.coarse.Set({0, 0, 0});  // one stray coarse cell out of many
  const TrainingPair pairs[] = {pair};
  EXPECT_NO_THROW(Train(pairs, c));
  c.consistency_tolerance = 0.0;
  EXPECT_EQ(KindOf([&] { Train(pairs, c); }), FlowErrorKind::kInconsistentPair);
}

TEST(Train, ShortRunReducesLoss) {
  FlowConfig c = SmallConfig();
  c.steps = 300;
  c.samples_per_pair = 4;
  const TrainingPair pairs[] = {PairOf(Ball(16, Vec3(7, 8, 9), 5.5), 2)};
  const RefinerModel m = Train(pairs, c);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += m.loss_curve[i];
    tail += m.loss_curve[m.loss_curve.size() - 1 - i];
  }
  EXPECT_LT(tail, 0.5 * head);
}

TEST(Train, SwappedConditionsFollowTheCoarseGrid) {
  FlowConfig c = SmallConfig();
  c.steps = 400;
  c.samples_per_pair = 4;
  const VoxelGrid a = Ball(16, Vec3(5, 5, 8), 4.5);
  const VoxelGrid b = Ball(16, Vec3(11, 10, 8), 4.5);
  const TrainingPair pairs[] = {PairOf(a, 2), PairOf(b, 2)};
  const RefinerModel m = Train(pairs, c);
  const VoxelGrid from_a = SampleFine(m, pairs[0].coarse, 20, 3);
  const VoxelGrid from_b = SampleFine(m, pairs[1].coarse, 20, 3);
  EXPECT_GT(VoxelIou(from_a, a), VoxelIou(from_a, b));
  EXPECT_GT(VoxelIou(from_b, b), VoxelIou(from_b, a));
}

TEST(Checkpoint, RoundTripAndLayout) {
  FlowConfig c = testing::GradientCheckConfig();
  c.condition_dim = 2;
  const RefinerModel m(c);
  const auto dir = testing::TempDir("flow");
  m.Save(dir / "a.ckpt");
  const RefinerModel back = RefinerModel::Load(dir / "a.ckpt");
  EXPECT_EQ(back.config().fine_resolution, 8);
  EXPECT_EQ(back.config().coarse_resolution, 4);
  EXPECT_EQ(back.config().hidden, 8);
  EXPECT_EQ(back.config().coarse_radius, 1);
  EXPECT_EQ(back.config().time_frequencies, 4);
  EXPECT_EQ(back.config().condition_dim, 2);
  ASSERT_EQ(back.param_count(), m.param_count());
  for (std::size_t i = 0; i < m.param_count(); ++i) {
    ASSERT_EQ(back.params()[i], static_cast<double>(static_cast<float>(m.params()[i])));
  }
  back.Save(dir / "b.ckpt");
  const std::string bytes = testing::ReadFile(dir / "a.ckpt");
  EXPECT_EQ(bytes, testing::ReadFile(dir / "b.ckpt"));
  EXPECT_EQ(bytes.size(), 4 + 4 + 7 * 4 + 4 * m.param_count());
  EXPECT_EQ(bytes.substr(0, 4), "SRFL");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x08\x00\x00\x00", 4));

  testing::WriteFile(dir / "bad.ckpt", "XXXX" + bytes.substr(4));
  EXPECT_EQ(KindOf([&] { RefinerModel::Load(dir / "bad.ckpt"); }), FlowErrorKind::kCheckpoint);
  testing::WriteFile(dir / "short.ckpt", bytes.substr(0, bytes.size() - 2));
  EXPECT_EQ(KindOf([&] { RefinerModel::Load(dir / "short.ckpt"); }),
            FlowErrorKind::kCheckpoint);
  EXPECT_EQ(KindOf([&] { RefinerModel::Load(dir / "missing.ckpt"); }),
            FlowErrorKind::kCheckpoint);
  std::filesystem::remove_all(dir);
}

TEST(FlowConfig, ParseEmitRoundTrip) {
  FlowConfig c = SmallConfig();
  c.learning_rate = 0.003;
  c.t_min = 0.25;
  const std::string text = EmitFlowConfig(c);
  EXPECT_EQ(EmitFlowConfig(ParseFlowConfig(text)), text);
  EXPECT_LT(text.find("\"fine_resolution\""), text.find("\"seed\""));
  const FlowConfig d = ParseFlowConfig(R"({"hidden": 4})");
  EXPECT_EQ(d.hidden, 4);
  EXPECT_EQ(d.steps, FlowConfig{}.steps);
}

TEST(FlowConfig, Rejections) {
  EXPECT_EQ(KindOf([] { ParseFlowConfig(R"({"hiden": 4})"); }), FlowErrorKind::kInvalidConfig);
  EXPECT_EQ(KindOf([] { ParseFlowConfig(R"({"hidden": "4"})"); }),
            FlowErrorKind::kInvalidConfig);
  EXPECT_EQ(KindOf([] { ParseFlowConfig("[1]"); }), FlowErrorKind::kInvalidConfig);
  EXPECT_EQ(KindOf([] { ParseFlowConfig("{"); }), FlowErrorKind::kInvalidConfig);
  EXPECT_EQ(KindOf([] { ParseFlowConfig(R"({"coarse_resolution": 12})"); }),
            FlowErrorKind::kInvalidConfig);
  EXPECT_EQ(KindOf([] { ParseFlowConfig(R"({"t_min": 0})"); }),
            FlowErrorKind::kInvalidConfig);
}

TEST(Signed, RoundTripAndLossCsv) {
  Rng rng(79);
  const VoxelGrid g = testing::RandomGrid(rng, 8, 0.4);
  EXPECT_EQ(FromSigned(ToSigned(g), 8), g);
  EXPECT_EQ(KindOf([&] { FromSigned(ToSigned(g), 4); }), FlowErrorKind::kShapeMismatch);
  const double curve[] = {1.5, 0.25};
  EXPECT_EQ(LossCurveCsv(curve), "step,loss\n0,1.5\n1,0.25\n");
}

}  // namespace
}  // namespace simready
