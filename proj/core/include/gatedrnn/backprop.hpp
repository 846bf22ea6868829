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

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gatedrnn/cells.hpp"
#include "gatedrnn/common.hpp"

namespace gatedrnn {

/// Gradients of a scalar loss with respect to everything run_sequence reads.
struct CellGradients {
  CellParams params;  // same structure as the parameters
  Matrix inputs;      // nI x T
  CellState initial;  // dL/dh_{-1} and, for cells with memory, dL/dc_{-1}
};

/// Backpropagation through time. `upstream` holds dL/dh_t as columns
/// (nH x T); `trace` must come from run_sequence(params, inputs, ...).
CellGradients sequence_backward(const CellParams& params, const Matrix& inputs,
                                const SequenceTrace& trace, const Matrix& upstream);

/// Max relative error between sequence_backward and central differences
/// (L(θ+eps) - L(θ-eps)) / 2eps over every parameter, on a random instance
/// with loss 0.5 * sum_t |h_t - y_t|^2 and random targets y.
///
/// The perturbed losses are evaluated in extended precision so that
/// roundoff in the difference quotient stays far below the threshold.
double grad_check(const CellSpec& spec, std::uint64_t seed, double eps = 1e-5,
                  Index steps = 6);

/// Relative error with the denominator floored at 1e-12.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / scale;
}

inline constexpr double kGradCheckThreshold = 1e-6;

}  // namespace gatedrnn
