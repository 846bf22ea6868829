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

#include "gatedrnn/backprop.hpp"

#include <array>
#include <vector>

#include "gatedrnn/rng.hpp"

namespace gatedrnn {

namespace {

Vector sigmoid_slope(const Eigen::Ref<const Vector>& s) {
  return (s.array() * (1.0 - s.array())).matrix();
}

Vector tanh_slope(const Eigen::Ref<const Vector>& y) {
  return (1.0 - y.array().square()).matrix();
}

std::size_t slot(GateRole role) { return static_cast<std::size_t>(role); }

}  // namespace

CellGradients sequence_backward(const CellParams& params, const Matrix& inputs,
                                const SequenceTrace& trace, const Matrix& upstream) {
  const CellSpec& spec = params.spec();
  const Index nh = spec.hidden_dim;
  const Index steps = trace.steps();
  require(trace.kind == spec.kind, "trace kind does not match parameters");
  require(inputs.rows() == spec.input_dim && inputs.cols() == steps,
          "inputs do not match the trace length");
  require(upstream.rows() == nh && upstream.cols() == steps,
          "upstream gradients do not match the trace length");

  // Pre-activation gradients per gate, one column per step.
  std::array<Matrix, kGateRoleCount> dpre;
  for (std::size_t r = 0; r < kGateRoleCount; ++r)
    if (params.has(static_cast<GateRole>(r))) dpre[r] = Matrix::Zero(nh, steps);
  // GRU: gradient w.r.t. R_h h_{t-1} (before the reset gate is applied).
  Matrix d_recurrent_candidate;
  if (spec.kind == CellKind::kGru) d_recurrent_candidate = Matrix::Zero(nh, steps);

  Matrix hidden_prev(nh, steps);
  hidden_prev.col(0) = trace.initial.hidden;
  if (steps > 1) hidden_prev.rightCols(steps - 1) = trace.hidden.leftCols(steps - 1);
  const bool with_cell = has_memory_cell(spec.kind);
  Matrix cell_prev;
  if (with_cell) {
    cell_prev.resize(nh, steps);
    cell_prev.col(0) = *trace.initial.cell;
    if (steps > 1) cell_prev.rightCols(steps - 1) = trace.cell.leftCols(steps - 1);
  }

  const bool with_input = params.has(GateRole::kInput);
  const bool with_forget = params.has(GateRole::kForget);
  const bool with_output = params.has(GateRole::kOutput);
  auto peephole = [&](GateRole role) -> const Vector* {
    if (!params.has(role)) return nullptr;
    const auto& p = params.gate(role).peephole;
    return p ? &*p : nullptr;
  };
  const Vector* peep_input = peephole(GateRole::kInput);
  const Vector* peep_forget = peephole(GateRole::kForget);
  const Vector* peep_output = peephole(GateRole::kOutput);

  Vector dh_next = Vector::Zero(nh);
  Vector dc_next = Vector::Zero(nh);
  for (Index t = steps - 1; t >= 0; --t) {
    const Vector dh = upstream.col(t) + dh_next;
    Vector dh_prev = Vector::Zero(nh);

    if (spec.kind == CellKind::kGru) {
      const auto h_prev = hidden_prev.col(t);
      const auto z = trace.update.col(t).array();
      const auto r = trace.reset.col(t).array();
      const auto cand = trace.candidate.col(t);
      const auto& wr = params.gate(GateRole::kCandidate).recurrent_weights;
      const Vector q = wr * h_prev;

      dpre[slot(GateRole::kUpdate)].col(t) =
          (dh.array() * (h_prev - cand).array() * z * (1.0 - z)).matrix();
      const Vector da_cand =
          (dh.array() * (1.0 - z) * tanh_slope(cand).array()).matrix();
      dpre[slot(GateRole::kCandidate)].col(t) = da_cand;
      dpre[slot(GateRole::kReset)].col(t) =
          (da_cand.array() * q.array() * r * (1.0 - r)).matrix();
      d_recurrent_candidate.col(t) = (da_cand.array() * r).matrix();

      dh_prev = (dh.array() * z).matrix();
      dh_prev.noalias() += params.gate(GateRole::kReset).recurrent_weights.transpose() *
                           dpre[slot(GateRole::kReset)].col(t);
      dh_prev.noalias() += params.gate(GateRole::kUpdate).recurrent_weights.transpose() *
                           dpre[slot(GateRole::kUpdate)].col(t);
      dh_prev.noalias() += wr.transpose() * d_recurrent_candidate.col(t);
      dh_next = dh_prev;
      continue;
    }

    const auto c_prev = cell_prev.col(t);
    const auto cand = trace.candidate.col(t);
    Vector dc;

    if (spec.kind == CellKind::kSlstm) {
      const auto f = trace.forget.col(t).array();
      dc = dc_next + (dh.array() * tanh_slope(trace.hidden.col(t)).array()).matrix();
      dpre[slot(GateRole::kForget)].col(t) =
          (dc.array() * (c_prev - cand).array() * f * (1.0 - f)).matrix();
      dpre[slot(GateRole::kCandidate)].col(t) =
          (dc.array() * (1.0 - f) * tanh_slope(cand).array()).matrix();
      dc_next = (dc.array() * f).matrix();
    } else {
      const Vector tc = trace.cell.col(t).array().tanh().matrix();
      if (with_output) {
        const auto o = trace.output.col(t).array();
        const Vector da_o = (dh.array() * tc.array() * o * (1.0 - o)).matrix();
        dpre[slot(GateRole::kOutput)].col(t) = da_o;
        dc = dc_next + (dh.array() * o * tanh_slope(tc).array()).matrix();
        if (peep_output) dc += peep_output->cwiseProduct(da_o);
      } else {
        dc = dc_next + (dh.array() * tanh_slope(tc).array()).matrix();
      }

      if (with_input) {
        const auto i = trace.input.col(t).array();
        dpre[slot(GateRole::kInput)].col(t) =
            (dc.array() * cand.array() * sigmoid_slope(trace.input.col(t)).array()).matrix();
        dpre[slot(GateRole::kCandidate)].col(t) =
            (dc.array() * i * tanh_slope(cand).array()).matrix();
      } else {
        dpre[slot(GateRole::kCandidate)].col(t) =
            (dc.array() * tanh_slope(cand).array()).matrix();
      }

      Vector dc_prev;
      if (with_forget) {
        const auto f = trace.forget.col(t).array();
        dpre[slot(GateRole::kForget)].col(t) =
            (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
        dc_prev = (dc.array() * f).matrix();
      } else {
        dc_prev = dc;
      }
      if (peep_input) dc_prev += peep_input->cwiseProduct(dpre[slot(GateRole::kInput)].col(t));
      if (peep_forget)
        dc_prev += peep_forget->cwiseProduct(dpre[slot(GateRole::kForget)].col(t));
      dc_next = dc_prev;
    }

    for (std::size_t r = 0; r < kGateRoleCount; ++r) {
      if (dpre[r].size() == 0) continue;
      dh_prev.noalias() +=
          params.gate(static_cast<GateRole>(r)).recurrent_weights.transpose() * dpre[r].col(t);
    }
    dh_next = dh_prev;
  }

  CellGradients grads{CellParams(spec), Matrix::Zero(spec.input_dim, steps), CellState{}};
  for (std::size_t r = 0; r < kGateRoleCount; ++r) {
    const auto role = static_cast<GateRole>(r);
    if (!params.has(role)) continue;
    const auto& src = params.gate(role);
    auto& dst = grads.params.gate(role);
    dst.input_weights.noalias() = dpre[r] * inputs.transpose();
    if (spec.kind == CellKind::kGru && role == GateRole::kCandidate)
      dst.recurrent_weights.noalias() = d_recurrent_candidate * hidden_prev.transpose();
    else
      dst.recurrent_weights.noalias() = dpre[r] * hidden_prev.transpose();
    dst.bias = dpre[r].rowwise().sum();
    if (dst.peephole) {
      const Matrix& source = (role == GateRole::kOutput) ? trace.cell : cell_prev;
      *dst.peephole = dpre[r].cwiseProduct(source).rowwise().sum();
    }
    grads.inputs.noalias() += src.input_weights.transpose() * dpre[r];
  }
  grads.initial.hidden = dh_next;
  if (with_cell) grads.initial.cell = dc_next;
  return grads;
}

double grad_check(const CellSpec& spec, std::uint64_t seed, double eps, Index steps) {
  spec.validate();
  require(eps > 0.0, "grad_check eps must be positive");
  require(steps >= 1, "grad_check needs at least one step");
  using Ext = long double;

  Rng rng(seed);
  CellParams params(spec);
  params.for_each_tensor([&](std::span<double> s) {
    for (double& v : s) v = rng.uniform(-0.5, 0.5);
  });
  Matrix inputs(spec.input_dim, steps);
  for (Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.uniform(-1.0, 1.0);
  CellState init = zero_state(spec);
  for (Index i = 0; i < init.hidden.size(); ++i) init.hidden[i] = rng.uniform(-0.5, 0.5);
  if (init.cell)
    for (Index i = 0; i < init.cell->size(); ++i) (*init.cell)[i] = rng.uniform(-0.5, 0.5);
  Matrix targets(spec.hidden_dim, steps);
  for (Index i = 0; i < targets.size(); ++i) targets.data()[i] = rng.uniform(-1.0, 1.0);

  const SequenceTrace trace = run_sequence(params, inputs, init);
  const Matrix upstream = trace.hidden - targets;
  const CellGradients grads = sequence_backward(params, inputs, trace, upstream);

  std::vector<double> analytic;
  analytic.reserve(static_cast<std::size_t>(params.size()));
  grads.params.for_each_tensor(
      [&](std::span<const double> s) { analytic.insert(analytic.end(), s.begin(), s.end()); });

  BasicCellParams<Ext> probe = params.cast<Ext>();
  const MatrixT<Ext> inputs_ext = inputs.cast<Ext>();
  const MatrixT<Ext> targets_ext = targets.cast<Ext>();
  BasicCellState<Ext> init_ext;
  init_ext.hidden = init.hidden.cast<Ext>();
  if (init.cell) init_ext.cell = init.cell->cast<Ext>();
  auto loss = [&]() {
    const auto tr = run_sequence(probe, inputs_ext, init_ext);
    return Ext(0.5) * (tr.hidden - targets_ext).squaredNorm();
  };

  const Ext step = static_cast<Ext>(eps);
  double worst = 0.0;
  std::size_t k = 0;
  probe.for_each_tensor([&](std::span<Ext> s) {
    for (Ext& theta : s) {
      const Ext saved = theta;
      theta = saved + step;
      const Ext up = loss();
      theta = saved - step;
      const Ext down = loss();
      theta = saved;
      const double numeric = static_cast<double>((up - down) / (Ext(2) * step));
      worst = std::max(worst, relative_error(analytic[k++], numeric));
    }
  });
  return worst;
}

}  // namespace gatedrnn
