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

#include "gatedrnn/metrics.hpp"

#include <cmath>
#include <numbers>

namespace gatedrnn {

namespace {

const double kDbScale = 10.0 / std::numbers::ln10;

double distortion_sum(const Matrix& ref, const Matrix& hyp) {
  require(ref.rows() == hyp.rows() && ref.cols() == hyp.cols(),
          "distortion: reference and hypothesis shapes differ");
  double sum = 0.0;
  for (Index t = 0; t < ref.rows(); ++t)
    sum += kDbScale * std::sqrt(2.0 * (ref.row(t) - hyp.row(t)).squaredNorm());
  return sum;
}

double frame_mean_distortion(const Matrix& ref, const Matrix& hyp) {
  require(ref.rows() >= 1, "distortion: no frames");
  const double sum = distortion_sum(ref, hyp);
  return sum / static_cast<double>(ref.rows());
}

void check_aligned(Index a, Index b, Index c, Index d) {
  require(a == b && b == c && c == d, "f0_rmse: sequences are not aligned");
}

}  // namespace

double mcd(const Matrix& ref, const Matrix& hyp) { return frame_mean_distortion(ref, hyp); }

double bap_distortion(const Matrix& ref, const Matrix& hyp) {
  return frame_mean_distortion(ref, hyp);
}

F0Rmse f0_rmse(const Vector& ref_f0_hz, const Vector& hyp_f0_hz, const VoicingFlags& ref_vuv,
               const VoicingFlags& hyp_vuv) {
  check_aligned(ref_f0_hz.size(), hyp_f0_hz.size(), static_cast<Index>(ref_vuv.size()),
                static_cast<Index>(hyp_vuv.size()));
  F0Rmse out;
  double sq = 0.0;
  for (Index t = 0; t < ref_f0_hz.size(); ++t) {
    const auto k = static_cast<std::size_t>(t);
    if (!ref_vuv[k] || !hyp_vuv[k]) continue;
    const double e = ref_f0_hz[t] - hyp_f0_hz[t];
    sq += e * e;
    ++out.frames;
  }
  require(out.frames > 0, "f0_rmse: no jointly voiced frames");
  out.rmse_hz = std::sqrt(sq / static_cast<double>(out.frames));
  return out;
}

double vuv_error(const VoicingFlags& ref, const VoicingFlags& hyp) {
  require(ref.size() == hyp.size(), "vuv_error: sequences are not aligned");
  require(!ref.empty(), "vuv_error: empty input");
  std::size_t mismatch = 0;
  for (std::size_t t = 0; t < ref.size(); ++t)
    if ((ref[t] != 0) != (hyp[t] != 0)) ++mismatch;
  return 100.0 * static_cast<double>(mismatch) / static_cast<double>(ref.size());
}

void MetricAccumulator::add(const Matrix& ref_mcc, const Matrix& hyp_mcc,
                            const Matrix& ref_bap, const Matrix& hyp_bap,
                            const Vector& ref_f0_hz, const Vector& hyp_f0_hz,
                            const VoicingFlags& ref_vuv, const VoicingFlags& hyp_vuv) {
  mcd_sum_ += distortion_sum(ref_mcc, hyp_mcc);
  counts_.mcd_frames += ref_mcc.rows();
  bap_sum_ += distortion_sum(ref_bap, hyp_bap);
  counts_.bap_frames += ref_bap.rows();

  check_aligned(ref_f0_hz.size(), hyp_f0_hz.size(), static_cast<Index>(ref_vuv.size()),
                static_cast<Index>(hyp_vuv.size()));
  for (std::size_t t = 0; t < ref_vuv.size(); ++t) {
    const Index i = static_cast<Index>(t);
    if ((ref_vuv[t] != 0) != (hyp_vuv[t] != 0)) ++vuv_mismatch_;
    if (ref_vuv[t] && hyp_vuv[t]) {
      const double e = ref_f0_hz[i] - hyp_f0_hz[i];
      f0_sq_sum_ += e * e;
      ++counts_.f0_frames;
    }
  }
  counts_.vuv_frames += static_cast<Index>(ref_vuv.size());
}

MetricReport MetricAccumulator::report() const {
  MetricReport r = counts_;
  if (r.vuv_frames == 0) throw ValidationError("metrics: report requested before any frames were added");
  if (r.mcd_frames > 0) r.mcd_db = mcd_sum_ / static_cast<double>(r.mcd_frames);
  if (r.bap_frames > 0) r.bap_db = bap_sum_ / static_cast<double>(r.bap_frames);
  if (r.f0_frames > 0) r.f0_rmse_hz = std::sqrt(f0_sq_sum_ / static_cast<double>(r.f0_frames));
  if (r.vuv_frames > 0)
    r.vuv_error_pct = 100.0 * static_cast<double>(vuv_mismatch_) / static_cast<double>(r.vuv_frames);
  return r;
}

}  // namespace gatedrnn
