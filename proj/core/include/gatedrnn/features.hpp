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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gatedrnn/common.hpp"

namespace gatedrnn {

/// Per-frame binary voicing decision (0 or 1).
using VoicingFlags = std::vector<std::uint8_t>;

/// Regression windows shared by compute_dynamics and MLPG.
inline constexpr std::array<double, 3> kDeltaWindow = {-0.5, 0.0, 0.5};
inline constexpr std::array<double, 3> kAccelWindow = {1.0, -2.0, 1.0};

/// Min-max statistics for linguistic inputs, mapping [min, max] onto [lo, hi].
struct MinMaxStats {
  Vector min;
  Vector max;
  double lo = 0.01;
  double hi = 0.99;

  /// Affine map, no clamping. Constant dimensions map to (lo + hi) / 2.
  Matrix apply(const Matrix& frames) const;
  /// Inverse of apply on non-constant dimensions.
  Matrix invert(const Matrix& normalized) const;
  bool is_constant(Index d) const { return !(max[d] > min[d]); }
};

MinMaxStats minmax_fit(std::span<const Matrix> sets, double lo = 0.01, double hi = 0.99);
std::pair<Matrix, MinMaxStats> minmax_fit_apply(const Matrix& frames, double lo = 0.01,
                                                double hi = 0.99);

/// Mean/standard-deviation statistics for acoustic targets. Dimensions with
/// zero variance get stddev 1 and are flagged.
struct MeanVarStats {
  Vector mean;
  Vector stddev;
  std::vector<std::uint8_t> degenerate;

  Matrix apply(const Matrix& frames) const;
  Matrix restore(const Matrix& normalized) const;
};

MeanVarStats meanvar_fit(std::span<const Matrix> sets);
inline MeanVarStats meanvar_fit(const Matrix& frames) {
  return meanvar_fit(std::span<const Matrix>(&frames, 1));
}
inline Matrix meanvar_apply(const MeanVarStats& s, const Matrix& m) { return s.apply(m); }
inline Matrix meanvar_restore(const MeanVarStats& s, const Matrix& m) { return s.restore(m); }

/// [static, delta, delta-delta] with edge replication. Input T x D, output T x 3D.
Matrix compute_dynamics(const Matrix& statics);

struct F0Track {
  Vector log_f0;
  VoicingFlags vuv;
};

/// Unvoiced frames are marked by f0 <= 0. Gaps are filled by linear
/// interpolation in log-F0; leading and trailing gaps copy the nearest
/// voiced value. Throws ValidationError for an all-unvoiced track.
F0Track interpolate_f0(const Vector& f0_hz);

/// Column layout of the network target vector:
///   [mcc | d mcc | dd mcc | bap | d bap | dd bap | lf0 | d lf0 | dd lf0 | vuv]
struct AcousticLayout {
  Index mcc_dim = 12;
  Index bap_dim = 4;

  Index mcc_offset() const { return 0; }
  Index bap_offset() const { return 3 * mcc_dim; }
  Index lf0_offset() const { return 3 * (mcc_dim + bap_dim); }
  Index vuv_offset() const { return 3 * (mcc_dim + bap_dim + 1); }
  Index target_dim() const { return vuv_offset() + 1; }

  friend bool operator==(const AcousticLayout&, const AcousticLayout&) = default;
};

/// Stacks static streams and their dynamics into the target layout.
Matrix assemble_targets(const AcousticLayout& layout, const Matrix& mcc, const Matrix& bap,
                        const Vector& log_f0, const VoicingFlags& vuv);

/// One stream of a feature file: a named block of adjacent columns.
struct StreamInfo {
  std::string name;
  Index offset = 0;
  Index width = 0;

  friend bool operator==(const StreamInfo&, const StreamInfo&) = default;
};

// Feature file: u64 frame count, u64 dims, then frames x dims float64
// values, row-major, little-endian. The sidecar <path>.json names streams:
//   {"frames": T, "dims": D, "streams": [{"name", "offset", "width"}, ...]}
void write_feature_file(const std::string& path, const Matrix& frames);
Matrix read_feature_file(const std::string& path);
void write_feature_sidecar(const std::string& path, Index frames, Index dims,
                           const std::vector<StreamInfo>& streams);
std::vector<StreamInfo> read_feature_sidecar(const std::string& path);

}  // namespace gatedrnn
