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

#include "gatedrnn/backprop.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {
namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

CellParams random_params(const CellSpec& spec, Rng& rng, double scale = 0.5) {
  CellParams p(spec);
  p.for_each_tensor([&](std::span<double> s) {
    for (double& x : s) x = rng.uniform(-scale, scale);
  });
  return p;
}

std::vector<double> flatten(const CellParams& p) {
  std::vector<double> out;
  p.for_each_tensor([&](std::span<const double> s) { out.insert(out.end(), s.begin(), s.end()); });
  return out;
}

TEST(SequenceBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(1);
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, 3, 4};
    const CellParams p = random_params(spec, rng);
    const Matrix x = random_matrix(3, 5, rng);
    const auto tr = run_sequence(p, x);
    const CellGradients g = sequence_backward(p, x, tr, Matrix::Zero(4, 5));
    for (double v : flatten(g.params)) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(g.inputs.isZero(0.0));
    EXPECT_TRUE(g.initial.hidden.isZero(0.0));
  }
}

TEST(SequenceBackward, ScalarLstmHandDerivation) {
  const CellSpec spec{CellKind::kVanillaLstm, 1, 1};
  const CellParams p(spec);
  const double x0 = 0.8;
  const Matrix x = Matrix::Constant(1, 1, x0);
  const CellState init{Vector::Zero(1), Vector::Ones(1)};
  const auto tr = run_sequence(p, x, init);
  const CellGradients g = sequence_backward(p, x, tr, Matrix::Ones(1, 1));

  // i = f = o = 1/2, g = 0, c = 1/2, h = tanh(1/2) / 2.
  const double tau = std::tanh(0.5);
  const double d_opre = tau * 0.25;
  const double dc = 0.5 * (1.0 - tau * tau);
  const auto& gp = g.params;
  EXPECT_NEAR(gp.gate(GateRole::kOutput).bias[0], d_opre, 1e-15);
  EXPECT_NEAR(gp.gate(GateRole::kOutput).input_weights(0, 0), d_opre * x0, 1e-15);
  EXPECT_NEAR((*gp.gate(GateRole::kOutput).peephole)[0], d_opre * 0.5, 1e-15);
  EXPECT_NEAR(gp.gate(GateRole::kCandidate).bias[0], 0.5 * dc, 1e-15);
  EXPECT_NEAR(gp.gate(GateRole::kCandidate).input_weights(0, 0), 0.5 * dc * x0, 1e-15);
  EXPECT_NEAR(gp.gate(GateRole::kForget).bias[0], 0.25 * dc, 1e-15);
  EXPECT_NEAR((*gp.gate(GateRole::kForget).peephole)[0], 0.25 * dc, 1e-15);
  EXPECT_EQ(gp.gate(GateRole::kInput).bias[0], 0.0);
  EXPECT_NEAR((*g.initial.cell)[0], 0.5 * dc, 1e-15);
  EXPECT_EQ(g.initial.hidden[0], 0.0);
  EXPECT_EQ(g.inputs(0, 0), 0.0);
}

TEST(SequenceBackward, LinearInUpstream) {
  Rng rng(2);
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, 3, 3};
    const CellParams p = random_params(spec, rng);
    const Matrix x = random_matrix(3, 4, rng);
    const Matrix up = random_matrix(3, 4, rng);
    const auto tr = run_sequence(p, x);
    const auto a = flatten(sequence_backward(p, x, tr, up).params);
    const auto b = flatten(sequence_backward(p, x, tr, 2.0 * up).params);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], 2.0 * a[i]);
  }
}

TEST(SequenceBackward, AdditiveOverSequences) {
  // The gradient of L_A + L_B, checked against central differences of the
  // summed loss, equals the sum of per-sequence gradients.
  Rng rng(3);
  const CellSpec spec{CellKind::kNph, 2, 3};
  const CellParams p = random_params(spec, rng);
  const Matrix xa = random_matrix(2, 4, rng), xb = random_matrix(2, 6, rng);
  const Matrix ya = random_matrix(3, 4, rng), yb = random_matrix(3, 6, rng);
  auto grad = [&](const Matrix& x, const Matrix& y) {
    const auto tr = run_sequence(p, x);
    return flatten(sequence_backward(p, x, tr, tr.hidden - y).params);
  };
  const auto ga = grad(xa, ya), gb = grad(xb, yb);

  auto lp = p.cast<long double>();
  std::vector<long double*> slots;
  lp.for_each_tensor([&](std::span<long double> s) {
    for (auto& v : s) slots.push_back(&v);
  });
  auto loss = [&]() {
    long double total = 0;
    for (const auto* pair : {&xa, &xb}) {
      const Matrix& y = pair == &xa ? ya : yb;
      const auto tr = run_sequence(lp, MatrixT<long double>(pair->cast<long double>()));
      total += 0.5L * (tr.hidden - y.cast<long double>()).squaredNorm();
    }
    return total;
  };
  const long double eps = 1e-6L;
  for (std::size_t i = 0; i < slots.size(); i += 3) {
    const long double orig = *slots[i];
    *slots[i] = orig + eps;
    const long double up = loss();
    *slots[i] = orig - eps;
    const long double down = loss();
    *slots[i] = orig;
    const double numeric = static_cast<double>((up - down) / (2 * eps));
    EXPECT_LT(relative_error(ga[i] + gb[i], numeric), 1e-6) << "parameter " << i;
  }
}

TEST(SequenceBackward, RejectsMismatchedTrace) {
  Rng rng(4);
  const CellSpec spec{CellKind::kGru, 2, 2};
  const CellParams p = random_params(spec, rng);
  const Matrix x = random_matrix(2, 3, rng);
  const auto tr = run_sequence(p, x);
  EXPECT_THROW(sequence_backward(p, x, tr, Matrix::Zero(2, 4)), ValidationError);
  EXPECT_THROW(sequence_backward(p, random_matrix(2, 5, rng), tr, Matrix::Zero(2, 5)),
               ValidationError);
}

TEST(GradCheck, PublishedExamples) {
  EXPECT_LT(grad_check({CellKind::kVanillaLstm, 4, 3}, 1, 1e-5, 6), kGradCheckThreshold);
  EXPECT_LT(grad_check({CellKind::kGru, 4, 3}, 1, 1e-5, 6), kGradCheckThreshold);
  EXPECT_LT(grad_check({CellKind::kSlstm, 2, 2}, 1, 1e-5, 4), kGradCheckThreshold);
}

class GradCheckAllKinds : public ::testing::TestWithParam<CellKind> {};

TEST_P(GradCheckAllKinds, BelowThresholdOnSmallInstances) {
  const struct {
    Index ni, nh, steps;
  } shapes[] = {{1, 1, 1}, {3, 2, 5}, {5, 4, 8}, {8, 8, 12}};
  for (const auto& s : shapes)
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
      EXPECT_LT(grad_check({GetParam(), s.ni, s.nh}, seed, 1e-5, s.steps), kGradCheckThreshold)
          << "nI=" << s.ni << " nH=" << s.nh << " T=" << s.steps << " seed=" << seed;
}

INSTANTIATE_TEST_SUITE_P(Kinds, GradCheckAllKinds, ::testing::ValuesIn(kAllCellKinds),
                         [](const auto& info) {
                           std::string n(to_string(info.param));
                           n.erase(std::remove(n.begin(), n.end(), '-'), n.end());
                           return n;
                         });

TEST(RelativeError, FloorsDenominator) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-13, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}

}  // namespace
}  // namespace gatedrnn
