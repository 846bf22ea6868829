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

#include "gatedrnn/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gatedrnn/binary_io.hpp"

namespace gatedrnn {

namespace {

Index total_rows(std::span<const Matrix> sets) {
  Index n = 0;
  for (const auto& m : sets) n += m.rows();
  return n;
}

Index common_cols(std::span<const Matrix> sets) {
  require(!sets.empty(), "normalization needs at least one frame");
  const Index d = sets.front().cols();
  for (const auto& m : sets) require(m.cols() == d, "frame dimensions differ across sets");
  require(total_rows(sets) >= 1, "normalization needs at least one frame");
  return d;
}

}  // namespace

MinMaxStats minmax_fit(std::span<const Matrix> sets, double lo, double hi) {
  require(hi > lo, "minmax range must satisfy hi > lo");
  const Index d = common_cols(sets);
  MinMaxStats s;
  s.lo = lo;
  s.hi = hi;
  s.min = Vector::Constant(d, std::numeric_limits<double>::infinity());
  s.max = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  for (const auto& m : sets) {
    if (m.rows() == 0) continue;
    s.min = s.min.cwiseMin(m.colwise().minCoeff().transpose());
    s.max = s.max.cwiseMax(m.colwise().maxCoeff().transpose());
  }
  return s;
}

Matrix MinMaxStats::apply(const Matrix& frames) const {
  require(frames.cols() == min.size(), "minmax: frame dimension mismatch");
  Matrix out(frames.rows(), frames.cols());
  for (Index d = 0; d < frames.cols(); ++d) {
    if (is_constant(d)) {
      out.col(d).setConstant(0.5 * (lo + hi));
    } else {
      const double scale = (hi - lo) / (max[d] - min[d]);
      out.col(d) = ((frames.col(d).array() - min[d]) * scale + lo).matrix();
    }
  }
  return out;
}

Matrix MinMaxStats::invert(const Matrix& normalized) const {
  require(normalized.cols() == min.size(), "minmax: frame dimension mismatch");
  Matrix out(normalized.rows(), normalized.cols());
  for (Index d = 0; d < normalized.cols(); ++d) {
    if (is_constant(d)) {
      out.col(d).setConstant(min[d]);
    } else {
      const double scale = (max[d] - min[d]) / (hi - lo);
      out.col(d) = ((normalized.col(d).array() - lo) * scale + min[d]).matrix();
    }
  }
  return out;
}

std::pair<Matrix, MinMaxStats> minmax_fit_apply(const Matrix& frames, double lo, double hi) {
  MinMaxStats s = minmax_fit(std::span<const Matrix>(&frames, 1), lo, hi);
  Matrix out = s.apply(frames);
  return {std::move(out), std::move(s)};
}

MeanVarStats meanvar_fit(std::span<const Matrix> sets) {
  const Index d = common_cols(sets);
  const double n = static_cast<double>(total_rows(sets));
  MeanVarStats s;
  s.mean = Vector::Zero(d);
  for (const auto& m : sets) s.mean += m.colwise().sum().transpose();
  s.mean /= n;

  Vector var = Vector::Zero(d);
  Vector lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (const auto& m : sets) {
    if (m.rows() == 0) continue;
    var += (m.rowwise() - s.mean.transpose()).array().square().colwise().sum().matrix().transpose();
    lo = lo.cwiseMin(m.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(m.colwise().maxCoeff().transpose());
  }
  var /= n;

  s.stddev.resize(d);
  s.degenerate.assign(static_cast<std::size_t>(d), 0);
  for (Index j = 0; j < d; ++j) {
    if (!(hi[j] > lo[j]) || !(var[j] > 0.0)) {
      s.stddev[j] = 1.0;
      s.degenerate[static_cast<std::size_t>(j)] = 1;
    } else {
      s.stddev[j] = std::sqrt(var[j]);
    }
  }
  return s;
}

Matrix MeanVarStats::apply(const Matrix& frames) const {
  require(frames.cols() == mean.size(), "meanvar: frame dimension mismatch");
  return ((frames.rowwise() - mean.transpose()).array().rowwise() /
          stddev.transpose().array())
      .matrix();
}

Matrix MeanVarStats::restore(const Matrix& normalized) const {
  require(normalized.cols() == mean.size(), "meanvar: frame dimension mismatch");
  return ((normalized.array().rowwise() * stddev.transpose().array()).matrix().rowwise() +
          mean.transpose());
}

Matrix compute_dynamics(const Matrix& statics) {
  const Index steps = statics.rows();
  const Index d = statics.cols();
  require(steps >= 1, "compute_dynamics needs at least one frame");
  Matrix out(steps, 3 * d);
  out.leftCols(d) = statics;
  for (Index t = 0; t < steps; ++t) {
    const auto prev = statics.row(std::max<Index>(t - 1, 0));
    const auto cur = statics.row(t);
    const auto next = statics.row(std::min<Index>(t + 1, steps - 1));
    out.row(t).segment(d, d) = kDeltaWindow[0] * prev + kDeltaWindow[1] * cur + kDeltaWindow[2] * next;
    out.row(t).segment(2 * d, d) = kAccelWindow[0] * prev + kAccelWindow[1] * cur + kAccelWindow[2] * next;
  }
  return out;
}

F0Track interpolate_f0(const Vector& f0_hz) {
  const Index steps = f0_hz.size();
  require(steps >= 1, "interpolate_f0 needs at least one frame");
  F0Track out;
  out.vuv.resize(static_cast<std::size_t>(steps));
  out.log_f0.resize(steps);
  std::vector<Index> voiced;
  for (Index t = 0; t < steps; ++t) {
    const bool v = f0_hz[t] > 0.0;
    out.vuv[static_cast<std::size_t>(t)] = v ? 1 : 0;
    if (v) {
      voiced.push_back(t);
      out.log_f0[t] = std::log(f0_hz[t]);
    }
  }
  require(!voiced.empty(), "interpolate_f0: utterance has no voiced frame");

  for (Index t = 0; t < voiced.front(); ++t) out.log_f0[t] = out.log_f0[voiced.front()];
  for (Index t = voiced.back() + 1; t < steps; ++t) out.log_f0[t] = out.log_f0[voiced.back()];
  for (std::size_t k = 0; k + 1 < voiced.size(); ++k) {
    const Index a = voiced[k];
    const Index b = voiced[k + 1];
    const double la = out.log_f0[a];
    const double lb = out.log_f0[b];
    for (Index t = a + 1; t < b; ++t) {
      const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
      out.log_f0[t] = (1.0 - w) * la + w * lb;
    }
  }
  return out;
}

Matrix assemble_targets(const AcousticLayout& layout, const Matrix& mcc, const Matrix& bap,
                        const Vector& log_f0, const VoicingFlags& vuv) {
  const Index steps = mcc.rows();
  require(mcc.cols() == layout.mcc_dim && bap.cols() == layout.bap_dim,
          "acoustic stream widths do not match the layout");
  require(bap.rows() == steps && log_f0.size() == steps &&
              static_cast<Index>(vuv.size()) == steps,
          "acoustic streams differ in length");
  Matrix out(steps, layout.target_dim());
  out.middleCols(layout.mcc_offset(), 3 * layout.mcc_dim) = compute_dynamics(mcc);
  out.middleCols(layout.bap_offset(), 3 * layout.bap_dim) = compute_dynamics(bap);
  out.middleCols(layout.lf0_offset(), 3) = compute_dynamics(Matrix(log_f0));
  for (Index t = 0; t < steps; ++t)
    out(t, layout.vuv_offset()) = vuv[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
  return out;
}

void write_feature_file(const std::string& path, const Matrix& frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  BinaryWriter w(out);
  w.u64(static_cast<std::uint64_t>(frames.rows()));
  w.u64(static_cast<std::uint64_t>(frames.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = frames;
  w.values(rows.data(), rows.size());
}

Matrix read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  BinaryReader r(in, path);
  const std::uint64_t frames = r.u64();
  const std::uint64_t dims = r.u64();
  if (frames > (std::uint64_t{1} << 28) || dims > (std::uint64_t{1} << 20))
    throw IoError(path + ": implausible feature file header");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Index>(frames), static_cast<Index>(dims));
  r.values(rows.data(), rows.size());
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes");
  return rows;
}

void write_feature_sidecar(const std::string& path, Index frames, Index dims,
                           const std::vector<StreamInfo>& streams) {
  for (const auto& s : streams)
    require(s.offset >= 0 && s.width >= 1 && s.offset + s.width <= dims,
            "stream '" + s.name + "' lies outside the feature dimensions");
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["dims"] = dims;
  j["streams"] = nlohmann::json::array();
  for (const auto& s : streams)
    j["streams"].push_back({{"name", s.name}, {"offset", s.offset}, {"width", s.width}});
  std::ofstream out(path + ".json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + path + ".json");
  out << j.dump(2) << '\n';
}

std::vector<StreamInfo> read_feature_sidecar(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) throw IoError("cannot open " + path + ".json");
  std::vector<StreamInfo> streams;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& s : j.at("streams"))
      streams.push_back({s.at("name").get<std::string>(), s.at("offset").get<Index>(),
                         s.at("width").get<Index>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ".json: " + e.what());
  }
  return streams;
}

}  // namespace gatedrnn
