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

namespace gatedrnn {

/// Objective measures for one system on one set.
struct MetricReport {
  double mcd_db = 0.0;
  double bap_db = 0.0;
  double f0_rmse_hz = 0.0;
  double vuv_error_pct = 0.0;
  Index mcd_frames = 0;
  Index bap_frames = 0;
  Index f0_frames = 0;  // jointly voiced
  Index vuv_frames = 0;
};

/// (10 / ln 10) * sqrt(2 * sum_d (ref_d - hyp_d)^2), averaged over frames.
/// The caller drops the energy coefficient.
double mcd(const Matrix& ref, const Matrix& hyp);

/// Same formula as mcd, applied to band aperiodicities.
double bap_distortion(const Matrix& ref, const Matrix& hyp);

struct F0Rmse {
  double rmse_hz = 0.0;
  Index frames = 0;
};

/// RMSE in Hz over frames voiced in both tracks. Throws when there is none.
F0Rmse f0_rmse(const Vector& ref_f0_hz, const Vector& hyp_f0_hz, const VoicingFlags& ref_vuv,
               const VoicingFlags& hyp_vuv);

/// Percentage of frames whose voicing decisions disagree.
double vuv_error(const VoicingFlags& ref, const VoicingFlags& hyp);

/// Pools frames across utterances so set-level numbers are frame averages.
class MetricAccumulator {
 public:
  /// mcc matrices must already exclude the energy coefficient.
  void add(const Matrix& ref_mcc, const Matrix& hyp_mcc, const Matrix& ref_bap,
           const Matrix& hyp_bap, const Vector& ref_f0_hz, const Vector& hyp_f0_hz,
           const VoicingFlags& ref_vuv, const VoicingFlags& hyp_vuv);

  /// Throws ValidationError when nothing has been added.
  MetricReport report() const;

 private:
  double mcd_sum_ = 0.0;
  double bap_sum_ = 0.0;
  double f0_sq_sum_ = 0.0;
  Index vuv_mismatch_ = 0;
  MetricReport counts_;
};

}  // namespace gatedrnn
