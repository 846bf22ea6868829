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

#pragma once

#include "gatedrnn/common.hpp"
#include "gatedrnn/features.hpp"
#include "gatedrnn/network.hpp"

namespace gatedrnn {

/// Per-frame Gaussian over [static, delta, delta-delta] for D dimensions.
/// Both matrices are T x 3D with column blocks [static | delta | accel].
/// A variance of +infinity removes that row from the objective (precision 0).
struct GenerationProblem {
  Matrix means;
  Matrix variances;

  Index frames() const { return means.rows(); }
  Index dims() const { return means.cols() / 3; }
  void validate() const;
};

/// Symmetric positive-definite band matrix stored by diagonals:
/// band(k, i) = A(i + k, i) for k in [0, bandwidth].
class BandedSpdMatrix {
 public:
  BandedSpdMatrix(Index size, Index bandwidth);

  Index size() const { return band_.cols(); }
  Index bandwidth() const { return band_.rows() - 1; }

  /// Adds v to A(i, j) (and A(j, i)); requires |i - j| <= bandwidth.
  void add(Index i, Index j, double v);
  double at(Index i, Index j) const;

  /// Solves A x = b by banded Cholesky. Throws NumericalError when A is not
  /// positive definite.
  Vector solve(const Vector& rhs) const;

 private:
  Matrix band_;
};

/// Most likely static trajectory (T x D) under the windows of
/// compute_dynamics, solved per dimension.
Matrix mlpg_solve(const GenerationProblem& problem);

/// The quadratic objective sum_t (Wc - mu)^T P (Wc - mu) for one candidate
/// trajectory; used by tests and diagnostics.
double mlpg_objective(const GenerationProblem& problem, const Matrix& trajectory);

/// One generated utterance in natural units.
struct GeneratedUtterance {
  Matrix mcc;      // T x mcc_dim
  Matrix bap;      // T x bap_dim
  Vector log_f0;   // smoothed, still defined on unvoiced frames
  Vector f0_hz;    // 0 where unvoiced
  VoicingFlags vuv;
};

/// `inputs` are normalized linguistic frames. Forward pass, restore mean/variance, then MLPG per stream with the
/// per-dimension global variances of the training targets. A static
/// dimension flagged as degenerate by the normalizer is passed through
/// unsmoothed. V/UV is thresholded at 0.5.
GeneratedUtterance pipeline_generate(const Model& model, const Matrix& inputs,
                                     const MeanVarStats& norm, const Vector& global_variances,
                                     const AcousticLayout& layout);

/// Takes raw linguistic frames and uses the normalization stored in the
/// model.
GeneratedUtterance pipeline_generate(const Model& model, const Matrix& raw_linguistic);

}  // namespace gatedrnn
