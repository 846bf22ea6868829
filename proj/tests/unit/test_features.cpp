// Copyright 2026 The gatedrnn Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <cstring>
#include <fstream>
#include <unistd.h>

#include "gatedrnn/features.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {
namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

TEST(MinMax, MapsRangeOntoBounds) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const auto [y, stats] = minmax_fit_apply(x);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.01);
  EXPECT_DOUBLE_EQ(y(1, 0), 0.99);
}

TEST(MinMax, ConstantDimensionMapsToMidpoint) {
  const Matrix x = Matrix::Constant(4, 2, 3.0);
  const auto [y, stats] = minmax_fit_apply(x);
  EXPECT_TRUE(y.isApproxToConstant(0.5));
  EXPECT_TRUE(stats.is_constant(0));
}

TEST(MinMax, DoesNotClampOutOfRangeValues) {
  Matrix train(2, 1);
  train << 0.0, 1.0;
  const auto [y, stats] = minmax_fit_apply(train);
  Matrix dev(1, 1);
  dev << 2.0;
  const Matrix out = stats.apply(dev);
  EXPECT_NEAR(out(0, 0), 0.01 + 0.98 * 2.0, 1e-15);
  EXPECT_GT(out(0, 0), 0.99);
}

TEST(MinMax, InverseRecoversInputs) {
  const Matrix x = random_matrix(20, 5, 3, 7.0);
  const auto [y, stats] = minmax_fit_apply(x);
  EXPECT_LT((stats.invert(y) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MinMax, FitsAcrossSeveralMatrices) {
  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 3.0;
  const Matrix sets[] = {a, b};
  const MinMaxStats s = minmax_fit(sets);
  EXPECT_EQ(s.min[0], -1.0);
  EXPECT_EQ(s.max[0], 3.0);
}

TEST(MeanVar, RestoreInvertsApply) {
  const Matrix x = random_matrix(50, 6, 5, 4.0);
  const MeanVarStats s = meanvar_fit(x);
  EXPECT_LT((meanvar_restore(s, meanvar_apply(s, x)) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MeanVar, NormalizedFitSetHasZeroMeanUnitVariance) {
  const Matrix x = random_matrix(200, 4, 7, 3.0).array() + 5.0;
  const Matrix y = meanvar_apply(meanvar_fit(x), x);
  for (Index d = 0; d < 4; ++d) {
    const double mean = y.col(d).mean();
    const double var = (y.col(d).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
}

TEST(MeanVar, ZeroVarianceDimensionIsFlaggedAndUnscaled) {
  Matrix x = random_matrix(10, 2, 9);
  x.col(1).setConstant(4.0);
  const MeanVarStats s = meanvar_fit(x);
  EXPECT_TRUE(s.degenerate[1]);
  EXPECT_FALSE(s.degenerate[0]);
  EXPECT_EQ(s.stddev[1], 1.0);
  const Matrix y = s.apply(x);
  EXPECT_TRUE(y.col(1).isZero(0.0));
  EXPECT_TRUE(s.restore(y).col(1).isApproxToConstant(4.0));
}

TEST(Dynamics, ConstantSequenceHasZeroDynamics) {
  const Matrix d = compute_dynamics(Matrix::Constant(5, 2, 1.5));
  EXPECT_TRUE(d.rightCols(4).isZero(0.0));
  EXPECT_TRUE(d.leftCols(2).isApproxToConstant(1.5));
}

TEST(Dynamics, HandEvaluatedRamp) {
  Matrix x(4, 1);
  x << 0, 1, 2, 3;
  const Matrix d = compute_dynamics(x);
  EXPECT_EQ(d.col(1), (Vector(4) << 0.5, 1, 1, 0.5).finished());
  EXPECT_EQ(d.col(2), (Vector(4) << 1, 0, 0, -1).finished());
}

TEST(Dynamics, SingleFrameHasZeroDynamics) {
  Matrix x(1, 3);
  x << 1, 2, 3;
  const Matrix d = compute_dynamics(x);
  EXPECT_TRUE(d.rightCols(6).isZero(0.0));
}

TEST(Dynamics, IsLinear) {
  const Matrix x = random_matrix(9, 3, 11), y = random_matrix(9, 3, 12);
  const Matrix lhs = compute_dynamics(2.5 * x - 0.75 * y);
  const Matrix rhs = 2.5 * compute_dynamics(x) - 0.75 * compute_dynamics(y);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Dynamics, BlockLayoutIsStaticDeltaAccel) {
  const Matrix x = random_matrix(6, 2, 13);
  const Matrix d = compute_dynamics(x);
  ASSERT_EQ(d.cols(), 6);
  EXPECT_EQ(d.leftCols(2), x);
  EXPECT_DOUBLE_EQ(d(2, 3), 0.5 * (x(3, 1) - x(1, 1)));
  EXPECT_DOUBLE_EQ(d(2, 4), x(1, 0) - 2 * x(2, 0) + x(3, 0));
}

TEST(InterpolateF0, FillsGapInLogDomain) {
  const F0Track tr = interpolate_f0((Vector(3) << 100, 0, 200).finished());
  EXPECT_NEAR(tr.log_f0[1], 0.5 * (std::log(100.0) + std::log(200.0)), 1e-15);
  EXPECT_EQ(tr.vuv, (VoicingFlags{1, 0, 1}));
}

TEST(InterpolateF0, AllVoicedIsLogOfInput) {
  const Vector f0 = (Vector(3) << 90, 120, 150).finished();
  const F0Track tr = interpolate_f0(f0);
  EXPECT_EQ(tr.log_f0, Vector(f0.array().log()));
  EXPECT_EQ(tr.vuv, (VoicingFlags{1, 1, 1}));
}

TEST(InterpolateF0, ExtendsEdges) {
  const F0Track tr = interpolate_f0((Vector(4) << 0, 0, 150, 0).finished());
  for (Index t = 0; t < 4; ++t) EXPECT_EQ(tr.log_f0[t], std::log(150.0));
  EXPECT_EQ(tr.vuv, (VoicingFlags{0, 0, 1, 0}));
}

TEST(InterpolateF0, ContinuousAtVoicingBoundaries) {
  const Vector f0 = (Vector(7) << 110, 0, 0, 0, 130, 140, 0).finished();
  const F0Track tr = interpolate_f0(f0);
  EXPECT_EQ(tr.log_f0[0], std::log(110.0));
  EXPECT_EQ(tr.log_f0[4], std::log(130.0));
  EXPECT_EQ(tr.log_f0[6], std::log(140.0));
  EXPECT_LT(tr.log_f0[1], tr.log_f0[2]);
}

TEST(InterpolateF0, RejectsAllUnvoiced) {
  EXPECT_THROW(interpolate_f0(Vector::Zero(5)), ValidationError);
}

TEST(AcousticLayout, DeskScaleOffsets) {
  const AcousticLayout l;
  EXPECT_EQ(l.bap_offset(), 36);
  EXPECT_EQ(l.lf0_offset(), 48);
  EXPECT_EQ(l.vuv_offset(), 51);
  EXPECT_EQ(l.target_dim(), 52);
  const AcousticLayout wide{60, 25};
  EXPECT_EQ(wide.target_dim(), 3 * 86 + 1);
}

TEST(AssembleTargets, PlacesStreamsAndDynamics) {
  const AcousticLayout l{2, 1};
  const Matrix mcc = random_matrix(5, 2, 21), bap = random_matrix(5, 1, 22);
  const Vector lf0 = random_matrix(5, 1, 23).col(0);
  const VoicingFlags vuv{1, 0, 1, 1, 0};
  const Matrix t = assemble_targets(l, mcc, bap, lf0, vuv);
  ASSERT_EQ(t.cols(), l.target_dim());
  EXPECT_EQ(t.middleCols(l.mcc_offset(), 6), compute_dynamics(mcc));
  EXPECT_EQ(t.middleCols(l.bap_offset(), 3), compute_dynamics(bap));
  EXPECT_EQ(t.middleCols(l.lf0_offset(), 3), compute_dynamics(Matrix(lf0)));
  EXPECT_EQ(t(1, l.vuv_offset()), 0.0);
  EXPECT_EQ(t(2, l.vuv_offset()), 1.0);
}

class FeatureFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("gatedrnn_features_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::filesystem::path dir_;
};

TEST_F(FeatureFileTest, RoundTripIsBitExact) {
  Matrix m = random_matrix(7, 3, 31);
  m(0, 0) = -0.0;
  m(1, 1) = 1e-310;
  write_feature_file(path("a.bin"), m);
  const Matrix back = read_feature_file(path("a.bin"));
  ASSERT_EQ(back.rows(), 7);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_EQ(std::memcmp(back.data(), m.data(), sizeof(double) * 21), 0);
  EXPECT_EQ(std::filesystem::file_size(path("a.bin")), 16u + 21 * 8);
}

TEST_F(FeatureFileTest, DetectsTruncationAndTrailingBytes) {
  write_feature_file(path("b.bin"), random_matrix(4, 2, 32));
  std::filesystem::resize_file(path("b.bin"), 16 + 7 * 8);
  EXPECT_THROW(read_feature_file(path("b.bin")), IoError);

  write_feature_file(path("c.bin"), random_matrix(4, 2, 33));
  std::ofstream(path("c.bin"), std::ios::app | std::ios::binary) << 'x';
  EXPECT_THROW(read_feature_file(path("c.bin")), IoError);
  EXPECT_THROW(read_feature_file(path("missing.bin")), IoError);
}

TEST_F(FeatureFileTest, SidecarNamesStreams) {
  const std::vector<StreamInfo> streams{{"mcc", 0, 3}, {"vuv", 3, 1}};
  write_feature_sidecar(path("d.bin"), 10, 4, streams);
  EXPECT_TRUE(std::filesystem::exists(path("d.bin.json")));
  EXPECT_EQ(read_feature_sidecar(path("d.bin")), streams);
  EXPECT_THROW(write_feature_sidecar(path("e.bin"), 10, 4, {{"x", 2, 3}}), ValidationError);
}

}  // namespace
}  // namespace gatedrnn
