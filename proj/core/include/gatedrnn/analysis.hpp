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

#include <cstdint>
#include <string>
#include <vector>

#include "gatedrnn/cells.hpp"
#include "gatedrnn/common.hpp"

namespace gatedrnn {

/// Per-frame mean over hidden units of one gate's activations.
struct GateSeries {
  Vector values;
  std::string id;
  std::vector<Index> boundaries;  // segment start frames, first = 0
  GateRole gate = GateRole::kForget;
  /// Set when the kind has no such gate and its equations fix it at 1.
  bool pinned = false;
};

/// Throws ValidationError when the kind neither has the gate nor pins it
/// (e.g. the forget gate of a GRU). NIG/NOG/NFG removed gates and the
/// S-LSTM output gate come back as a constant 1 series with `pinned` set.
GateSeries mean_gate_activation(const SequenceTrace& trace, GateRole gate, std::string id = {},
                                std::vector<Index> boundaries = {});

struct BoundaryAlignment {
  double boundary_mean = 0.0;  // frames within +-1 of a boundary
  double interior_mean = 0.0;  // all other frames
  double difference = 0.0;     // boundary_mean - interior_mean
  std::vector<Index> peaks;            // strict local maxima
  std::vector<Index> peak_distances;   // to the nearest boundary, per peak
};

/// Frame 0 counts as a boundary. Requires at least two segments.
BoundaryAlignment boundary_alignment(const GateSeries& series);

struct CorrelationTable {
  Vector correlations;                  // one per unit, in [-1, 1]
  std::vector<std::uint8_t> constant;   // units with zero variance (r reported as 0)
  Index argmax = 0;                     // largest |r|
  double max_value = 0.0;               // signed r at argmax
};

/// Pearson r between every column of `cell_states` (T x nH) and `target`
/// (T). Needs T >= 3 and a non-constant target.
CorrelationTable cell_target_correlation(const Matrix& cell_states, const Vector& target);

/// Writes <stem>.csv (frame,value) and <stem>.svg with one dashed vertical
/// line per boundary.
void emit_gate_plot(const GateSeries& series, const std::string& stem);

/// Writes <stem>.csv (frame,cell,target) and <stem>.svg with the two
/// trajectories standardized and drawn one above the other.
void emit_correlation_plot(const Vector& cell, const Vector& target, Index unit, double r,
                           const std::string& stem);

/// Writes the table as CSV (unit,r,constant).
void write_correlation_csv(const CorrelationTable& table, const std::string& path);

}  // namespace gatedrnn
