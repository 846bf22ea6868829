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

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "gatedrnn/features.hpp"
#include "gatedrnn/mlpg.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {
namespace {

// Explicit 3T x T window matrix for one dimension, edge-replicated.
Matrix window_matrix(Index steps) {
  Matrix w = Matrix::Zero(3 * steps, steps);
  auto clampi = [&](Index t) { return std::clamp<Index>(t, 0, steps - 1); };
  for (Index t = 0; t < steps; ++t) {
    w(t, t) = 1.0;
    w(steps + t, clampi(t + 1)) += 0.5;
    w(steps + t, clampi(t - 1)) -= 0.5;
    w(2 * steps + t, clampi(t - 1)) += 1.0;
    w(2 * steps + t, t) -= 2.0;
    w(2 * steps + t, clampi(t + 1)) += 1.0;
  }
  return w;
}

// Dense oracle: solves (W' P W) c = W' P mu with a general LU factorization.
Matrix dense_mlpg(const GenerationProblem& p) {
  const Index steps = p.frames(), dims = p.dims();
  const Matrix w = window_matrix(steps);
  Matrix out(steps, dims);
  for (Index d = 0; d < dims; ++d) {
    Vector mu(3 * steps), prec(3 * steps);
    for (Index b = 0; b < 3; ++b) {
      mu.segment(b * steps, steps) = p.means.col(b * dims + d);
      prec.segment(b * steps, steps) = p.variances.col(b * dims + d).cwiseInverse();
    }
    const Matrix a = w.transpose() * prec.asDiagonal() * w;
    const Vector rhs = w.transpose() * prec.asDiagonal() * mu;
    out.col(d) = a.fullPivLu().solve(rhs);
  }
  return out;
}

GenerationProblem random_problem(Index steps, Index dims, Rng& rng) {
  GenerationProblem p;
  p.means.resize(steps, 3 * dims);
  p.variances.resize(steps, 3 * dims);
  for (Index i = 0; i < p.means.size(); ++i) {
    p.means.data()[i] = rng.uniform(-2.0, 2.0);
    p.variances.data()[i] = rng.uniform(0.05, 3.0);
  }
  return p;
}

TEST(WindowOracle, AgreesWithComputeDynamics) {
  Rng rng(1);
  Matrix x(7, 1);
  for (Index t = 0; t < 7; ++t) x(t, 0) = rng.uniform(-1, 1);
  const Vector stacked = window_matrix(7) * x.col(0);
  const Matrix dyn = compute_dynamics(x);
  for (Index b = 0; b < 3; ++b)
    EXPECT_LT((stacked.segment(b * 7, 7) - dyn.col(b)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MlpgSolve, MatchesDenseOracleSmall) {
  Rng rng(2);
  const GenerationProblem p = random_problem(6, 2, rng);
  EXPECT_LT((mlpg_solve(p) - dense_mlpg(p)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MlpgSolve, MatchesDenseOracleRandom) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const Index steps = 1 + static_cast<Index>(rng.below(64));
    const Index dims = 1 + static_cast<Index>(rng.below(3));
    const GenerationProblem p = random_problem(steps, dims, rng);
    EXPECT_LT((mlpg_solve(p) - dense_mlpg(p)).cwiseAbs().maxCoeff(), 1e-8)
        << "T=" << steps << " D=" << dims;
  }
}

TEST(MlpgSolve, ZeroDynamicPrecisionReturnsStaticMeans) {
  Rng rng(4);
  GenerationProblem p = random_problem(9, 2, rng);
  p.variances.rightCols(4).setConstant(std::numeric_limits<double>::infinity());
  EXPECT_EQ(mlpg_solve(p), p.means.leftCols(2));
}

TEST(MlpgSolve, ConsistentConstantTargets) {
  GenerationProblem p;
  p.means = Matrix::Zero(8, 3);
  p.means.col(0).setConstant(1.25);
  p.variances = Matrix::Ones(8, 3);
  const Matrix c = mlpg_solve(p);
  EXPECT_LT((c.array() - 1.25).abs().maxCoeff(), 1e-12);
}

TEST(MlpgSolve, SolutionIsLocalMinimum) {
  Rng rng(5);
  const GenerationProblem p = random_problem(10, 2, rng);
  const Matrix c = mlpg_solve(p);
  const double best = mlpg_objective(p, c);
  for (Index t = 0; t < c.rows(); ++t) {
    for (Index d = 0; d < c.cols(); ++d) {
      for (double step : {-1e-3, 1e-3}) {
        Matrix q = c;
        q(t, d) += step;
        EXPECT_GE(mlpg_objective(p, q), best);
      }
    }
  }
}

TEST(MlpgSolve, EquivariantUnderScaling) {
  Rng rng(6);
  GenerationProblem p = random_problem(12, 2, rng);
  const Matrix c = mlpg_solve(p);
  const double k = 3.5;
  for (Index b = 0; b < 3; ++b) {
    p.means.col(b * 2 + 1) *= k;
    p.variances.col(b * 2 + 1) *= k * k;
  }
  const Matrix scaled = mlpg_solve(p);
  EXPECT_LT((scaled.col(0) - c.col(0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((scaled.col(1) - k * c.col(1)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MlpgSolve, SingularSystemIsNumericalError) {
  GenerationProblem p;
  p.means = Matrix::Zero(4, 3);
  p.variances = Matrix::Constant(4, 3, std::numeric_limits<double>::infinity());
  EXPECT_THROW(mlpg_solve(p), NumericalError);
}

TEST(MlpgSolve, RejectsMalformedProblems) {
  GenerationProblem p;
  p.means = Matrix::Zero(4, 3);
  p.variances = Matrix::Ones(4, 2);
  EXPECT_THROW(mlpg_solve(p), ValidationError);
  p.variances = Matrix::Ones(4, 3);
  p.variances(1, 1) = -1.0;
  EXPECT_THROW(mlpg_solve(p), ValidationError);
  p.variances(1, 1) = 0.0;
  EXPECT_THROW(mlpg_solve(p), ValidationError);
  p.means = Matrix::Zero(0, 3);
  p.variances = Matrix::Ones(0, 3);
  EXPECT_THROW(mlpg_solve(p), ValidationError);
}

TEST(BandedSpdMatrix, SolvesLikeDense) {
  Rng rng(7);
  const Index n = 15;
  Matrix dense = Matrix::Zero(n, n);
  BandedSpdMatrix band(n, 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = std::max<Index>(0, i - 2); j <= i; ++j) {
      const double v = i == j ? 6.0 + rng.uniform() : rng.uniform(-1, 1);
      band.add(i, j, v);
      dense(i, j) += v;
      if (i != j) dense(j, i) += v;
    }
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) EXPECT_EQ(band.at(i, j), dense(i, j));
  Vector b(n);
  for (Index i = 0; i < n; ++i) b[i] = rng.uniform(-1, 1);
  EXPECT_LT((band.solve(b) - dense.fullPivLu().solve(b)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(band.add(0, 5, 1.0), ValidationError);
}

}  // namespace
}  // namespace gatedrnn
