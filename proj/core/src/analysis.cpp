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

#include "gatedrnn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace gatedrnn {

namespace {

const Matrix& gate_matrix(const SequenceTrace& trace, GateRole gate) {
  switch (gate) {
    case GateRole::kInput: return trace.input;
    case GateRole::kForget: return trace.forget;
    case GateRole::kOutput: return trace.output;
    case GateRole::kReset: return trace.reset;
    case GateRole::kUpdate: return trace.update;
    case GateRole::kCandidate: return trace.candidate;
  }
  throw ValidationError("unknown gate");
}

bool is_pinned(CellKind kind, GateRole gate) {
  switch (kind) {
    case CellKind::kNig: return gate == GateRole::kInput;
    case CellKind::kNog: return gate == GateRole::kOutput;
    case CellKind::kNfg: return gate == GateRole::kForget;
    case CellKind::kSlstm: return gate == GateRole::kOutput;
    default: return false;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(10);
  return out;
}

constexpr double kWidth = 800.0;
constexpr double kHeight = 300.0;
constexpr double kMargin = 30.0;

double x_of(Index t, Index steps) {
  const double span = steps > 1 ? static_cast<double>(steps - 1) : 1.0;
  return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(t) / span;
}

// Maps value v in [lo, hi] onto the vertical band [top, bottom].
std::string polyline(const Vector& v, double lo, double hi, double top, double bottom,
                     const std::string& color) {
  const double range = hi > lo ? hi - lo : 1.0;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (Index t = 0; t < v.size(); ++t) {
    const double y = bottom - (bottom - top) * (v[t] - lo) / range;
    os << (t ? " " : "") << x_of(t, v.size()) << ',' << y;
  }
  os << "\"/>\n";
  return os.str();
}

void write_svg_header(std::ostream& out) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

GateSeries mean_gate_activation(const SequenceTrace& trace, GateRole gate, std::string id,
                                std::vector<Index> boundaries) {
  GateSeries s;
  s.id = std::move(id);
  s.boundaries = std::move(boundaries);
  s.gate = gate;
  const Index steps = trace.steps();
  if (has_gate(trace.kind, gate)) {
    const Matrix& m = gate_matrix(trace, gate);
    require(m.cols() == steps && m.rows() >= 1, "trace is missing the requested gate");
    s.values = m.colwise().mean().transpose();
  } else if (is_pinned(trace.kind, gate)) {
    s.values = Vector::Ones(steps);
    s.pinned = true;
  } else {
    throw ValidationError(std::string(to_string(trace.kind)) + " has no " +
                          std::string(to_string(gate)) + " gate");
  }
  return s;
}

BoundaryAlignment boundary_alignment(const GateSeries& series) {
  const Index steps = series.values.size();
  std::vector<Index> b = series.boundaries;
  if (std::find(b.begin(), b.end(), Index{0}) == b.end()) b.push_back(0);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  require(b.size() >= 2, "boundary_alignment needs at least two segments");
  require(b.back() < steps, "boundary lies beyond the end of the series");

  std::vector<bool> near(static_cast<std::size_t>(steps), false);
  for (Index x : b)
    for (Index t = std::max<Index>(0, x - 1); t <= std::min(steps - 1, x + 1); ++t)
      near[static_cast<std::size_t>(t)] = true;

  BoundaryAlignment a;
  double bsum = 0, isum = 0;
  Index bn = 0, in = 0;
  for (Index t = 0; t < steps; ++t) {
    if (near[static_cast<std::size_t>(t)]) {
      bsum += series.values[t];
      ++bn;
    } else {
      isum += series.values[t];
      ++in;
    }
  }
  a.boundary_mean = bn ? bsum / static_cast<double>(bn) : 0.0;
  a.interior_mean = in ? isum / static_cast<double>(in) : a.boundary_mean;
  a.difference = a.boundary_mean - a.interior_mean;

  for (Index t = 1; t + 1 < steps; ++t) {
    const double v = series.values[t];
    if (v > series.values[t - 1] && v > series.values[t + 1]) {
      a.peaks.push_back(t);
      Index best = std::numeric_limits<Index>::max();
      for (Index x : b) best = std::min(best, std::abs(x - t));
      a.peak_distances.push_back(best);
    }
  }
  return a;
}

CorrelationTable cell_target_correlation(const Matrix& cell_states, const Vector& target) {
  const Index steps = cell_states.rows();
  require(steps >= 3, "correlation needs at least three frames");
  require(target.size() == steps, "target length does not match the cell-state frames");
  require(cell_states.cols() >= 1, "correlation needs at least one unit");

  const Vector y = target.array() - target.mean();
  const double syy = y.squaredNorm();
  require(syy > 0.0, "correlation target is constant");

  CorrelationTable table;
  const Index units = cell_states.cols();
  table.correlations = Vector::Zero(units);
  table.constant.assign(static_cast<std::size_t>(units), 0);
  double best = -1.0;
  for (Index u = 0; u < units; ++u) {
    const Vector x = cell_states.col(u).array() - cell_states.col(u).mean();
    const double sxx = x.squaredNorm();
    double r = 0.0;
    if (sxx > 0.0) {
      r = std::clamp(x.dot(y) / std::sqrt(sxx * syy), -1.0, 1.0);
    } else {
      table.constant[static_cast<std::size_t>(u)] = 1;
    }
    table.correlations[u] = r;
    if (std::abs(r) > best) {
      best = std::abs(r);
      table.argmax = u;
    }
  }
  table.max_value = table.correlations[table.argmax];
  return table;
}

void emit_gate_plot(const GateSeries& series, const std::string& stem) {
  const Index steps = series.values.size();
  require(steps >= 1, "cannot plot an empty series");
  {
    auto csv = open_out(stem + ".csv");
    csv << "frame,value\n";
    for (Index t = 0; t < steps; ++t) csv << t << ',' << series.values[t] << '\n';
  }
  auto svg = open_out(stem + ".svg");
  write_svg_header(svg);
  svg << "<text x=\"" << kMargin << "\" y=\"18\" font-size=\"12\">" << series.id << " mean "
      << to_string(series.gate) << " gate" << (series.pinned ? " (pinned)" : "") << "</text>\n";
  svg << std::fixed << std::setprecision(2);
  for (Index b : series.boundaries) {
    const double x = x_of(b, steps);
    svg << "<line class=\"boundary\" x1=\"" << x << "\" y1=\"" << kMargin << "\" x2=\"" << x
        << "\" y2=\"" << kHeight - kMargin
        << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
  }
  const double lo = std::min(0.0, series.values.minCoeff());
  const double hi = std::max(1.0, series.values.maxCoeff());
  svg << polyline(series.values, lo, hi, kMargin, kHeight - kMargin, "steelblue");
  svg << "</svg>\n";
  if (!svg) throw IoError("failed writing " + stem + ".svg");
}

void emit_correlation_plot(const Vector& cell, const Vector& target, Index unit, double r,
                           const std::string& stem) {
  const Index steps = cell.size();
  require(steps >= 1 && target.size() == steps, "cell and target lengths differ");
  {
    auto csv = open_out(stem + ".csv");
    csv << "frame,cell,target\n";
    for (Index t = 0; t < steps; ++t) csv << t << ',' << cell[t] << ',' << target[t] << '\n';
  }
  auto standardize = [](const Vector& v) -> Vector {
    const Vector c = v.array() - v.mean();
    const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(v.size()));
    return sd > 0.0 ? Vector(c / sd) : c;
  };
  const Vector a = standardize(cell);
  const Vector b = standardize(target);
  const double lo = std::min(a.minCoeff(), b.minCoeff());
  const double hi = std::max(a.maxCoeff(), b.maxCoeff());
  const double mid = kHeight / 2;

  auto svg = open_out(stem + ".svg");
  write_svg_header(svg);
  svg << "<text x=\"" << kMargin << "\" y=\"18\" font-size=\"12\">cell " << unit
      << " (top) vs target (bottom), r = " << std::setprecision(4) << r << "</text>\n";
  svg << polyline(a, lo, hi, kMargin, mid - 5, "firebrick");
  svg << polyline(b, lo, hi, mid + 5, kHeight - kMargin, "steelblue");
  svg << "</svg>\n";
  if (!svg) throw IoError("failed writing " + stem + ".svg");
}

void write_correlation_csv(const CorrelationTable& table, const std::string& path) {
  auto out = open_out(path);
  out << std::setprecision(17) << "unit,r,constant\n";
  for (Index u = 0; u < table.correlations.size(); ++u)
    out << u << ',' << table.correlations[u] << ','
        << int(table.constant[static_cast<std::size_t>(u)]) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace gatedrnn
