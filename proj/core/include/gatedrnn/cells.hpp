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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gatedrnn/common.hpp"

namespace gatedrnn {

/// The seven recurrent architectures, in the order used by every report.
enum class CellKind : std::uint8_t {
  kVanillaLstm = 0,
  kNig = 1,  // no input gate
  kNog = 2,  // no output gate
  kNfg = 3,  // no forget gate
  kNph = 4,  // no peepholes
  kGru = 5,
  kSlstm = 6,
};

inline constexpr std::array<CellKind, 7> kAllCellKinds = {
    CellKind::kVanillaLstm, CellKind::kNig, CellKind::kNog, CellKind::kNfg,
    CellKind::kNph,         CellKind::kGru, CellKind::kSlstm};

/// Display name: LSTM, NIG, NOG, NFG, NPH, GRU, S-LSTM.
std::string_view to_string(CellKind kind);

/// Case-insensitive; accepts display names plus "vanilla" and "slstm".
CellKind parse_cell_kind(std::string_view name);

/// Parameter groups. The LSTM family uses input/forget/candidate/output,
/// GRU uses reset/update/candidate.
enum class GateRole : std::uint8_t {
  kInput = 0,
  kForget = 1,
  kCandidate = 2,
  kOutput = 3,
  kReset = 4,
  kUpdate = 5,
};
inline constexpr std::size_t kGateRoleCount = 6;

std::string_view to_string(GateRole role);

bool has_gate(CellKind kind, GateRole role);
bool has_peephole(CellKind kind, GateRole role);
bool has_memory_cell(CellKind kind);

struct CellSpec {
  CellKind kind = CellKind::kVanillaLstm;
  Index input_dim = 1;
  Index hidden_dim = 1;

  void validate() const;
  friend bool operator==(const CellSpec&, const CellSpec&) = default;
};

/// Exact scalar parameter count of the recurrent layer.
std::int64_t param_count(const CellSpec& spec);

template <typename Scalar>
struct BasicGateParams {
  MatrixT<Scalar> input_weights;      // nH x nI
  MatrixT<Scalar> recurrent_weights;  // nH x nH
  std::optional<VectorT<Scalar>> peephole;
  VectorT<Scalar> bias;

  bool operator==(const BasicGateParams& other) const;
};

/// All weights of one recurrent layer. Absent gates hold no storage.
///
/// Flat tensor order (used by serialization and optimizers): roles in
/// GateRole order, and within a role W, R, peephole (if any), bias.
template <typename Scalar>
class BasicCellParams {
 public:
  BasicCellParams() = default;
  /// Zero-filled parameters with the structure implied by spec.kind.
  explicit BasicCellParams(const CellSpec& spec);

  const CellSpec& spec() const { return spec_; }
  CellKind kind() const { return spec_.kind; }

  bool has(GateRole role) const {
    return gates_[static_cast<std::size_t>(role)].has_value();
  }
  const BasicGateParams<Scalar>& gate(GateRole role) const;
  BasicGateParams<Scalar>& gate(GateRole role);

  std::int64_t size() const;

  /// Calls fn(std::span<Scalar>) once per tensor in flat order.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& g : gates_) {
      if (!g) continue;
      fn(std::span<Scalar>(g->input_weights.data(), g->input_weights.size()));
      fn(std::span<Scalar>(g->recurrent_weights.data(),
                           g->recurrent_weights.size()));
      if (g->peephole) fn(std::span<Scalar>(g->peephole->data(), g->peephole->size()));
      fn(std::span<Scalar>(g->bias.data(), g->bias.size()));
    }
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    for (const auto& g : gates_) {
      if (!g) continue;
      fn(std::span<const Scalar>(g->input_weights.data(), g->input_weights.size()));
      fn(std::span<const Scalar>(g->recurrent_weights.data(),
                                 g->recurrent_weights.size()));
      if (g->peephole)
        fn(std::span<const Scalar>(g->peephole->data(), g->peephole->size()));
      fn(std::span<const Scalar>(g->bias.data(), g->bias.size()));
    }
  }

  template <typename Other>
  BasicCellParams<Other> cast() const {
    BasicCellParams<Other> out(spec_);
    for (std::size_t r = 0; r < kGateRoleCount; ++r) {
      if (!gates_[r]) continue;
      const auto& src = *gates_[r];
      auto& dst = out.gate(static_cast<GateRole>(r));
      dst.input_weights = src.input_weights.template cast<Other>();
      dst.recurrent_weights = src.recurrent_weights.template cast<Other>();
      if (src.peephole) dst.peephole = src.peephole->template cast<Other>();
      dst.bias = src.bias.template cast<Other>();
    }
    return out;
  }

  bool operator==(const BasicCellParams& other) const {
    return spec_ == other.spec_ && gates_ == other.gates_;
  }

 private:
  CellSpec spec_;
  std::array<std::optional<BasicGateParams<Scalar>>, kGateRoleCount> gates_;
};

using GateParams = BasicGateParams<double>;
using CellParams = BasicCellParams<double>;

template <typename Scalar>
struct BasicCellState {
  VectorT<Scalar> hidden;
  std::optional<VectorT<Scalar>> cell;  // absent for GRU
};
using CellState = BasicCellState<double>;

CellState zero_state(const CellSpec& spec);

/// Activations of one step. Gates removed by the architecture are absent;
/// `candidate` is g(.) for the LSTM family and h~ for GRU.
template <typename Scalar>
struct BasicGateTrace {
  std::optional<VectorT<Scalar>> input;
  std::optional<VectorT<Scalar>> forget;
  std::optional<VectorT<Scalar>> output;
  std::optional<VectorT<Scalar>> reset;
  std::optional<VectorT<Scalar>> update;
  VectorT<Scalar> candidate;
  std::optional<VectorT<Scalar>> cell;
  VectorT<Scalar> hidden;
};
using GateTrace = BasicGateTrace<double>;

/// Activations over a whole sequence, one column per step (nH x T).
/// Matrices of gates the kind does not have are empty.
template <typename Scalar>
struct BasicSequenceTrace {
  CellKind kind = CellKind::kVanillaLstm;
  BasicCellState<Scalar> initial;
  MatrixT<Scalar> input;
  MatrixT<Scalar> forget;
  MatrixT<Scalar> output;
  MatrixT<Scalar> reset;
  MatrixT<Scalar> update;
  MatrixT<Scalar> candidate;
  MatrixT<Scalar> cell;
  MatrixT<Scalar> hidden;

  Index steps() const { return hidden.cols(); }
  BasicCellState<Scalar> state(Index t) const;
  BasicCellState<Scalar> final_state() const { return state(steps() - 1); }
  BasicGateTrace<Scalar> at(Index t) const;
};
using SequenceTrace = BasicSequenceTrace<double>;

/// Uniform [-scale, scale] weights; zero biases except the forget-gate bias
/// (+1); zero peepholes. Deterministic in seed.
CellParams init_params(const CellSpec& spec, std::uint64_t seed, double scale = 0.1);

/// One step of the architecture's equations.
template <typename Scalar>
std::pair<BasicCellState<Scalar>, BasicGateTrace<Scalar>> step(
    const BasicCellParams<Scalar>& params, const VectorT<Scalar>& x,
    const BasicCellState<Scalar>& prev);

/// Runs the cell over inputs (nI x T, column t is x_t) from `initial`.
template <typename Scalar>
BasicSequenceTrace<Scalar> run_sequence(const BasicCellParams<Scalar>& params,
                                        const MatrixT<Scalar>& inputs,
                                        const BasicCellState<Scalar>& initial);

template <typename Scalar>
BasicSequenceTrace<Scalar> run_sequence(const BasicCellParams<Scalar>& params,
                                        const MatrixT<Scalar>& inputs) {
  BasicCellState<Scalar> init;
  const Index n = params.spec().hidden_dim;
  init.hidden = VectorT<Scalar>::Zero(n);
  if (has_memory_cell(params.kind())) init.cell = VectorT<Scalar>::Zero(n);
  return run_sequence(params, inputs, init);
}

// Double-precision overloads; these also accept Eigen expressions such as
// Matrix::Ones(n, T) that template deduction would reject.
inline std::pair<CellState, GateTrace> step(const CellParams& params, const Vector& x,
                                            const CellState& prev) {
  return step<double>(params, x, prev);
}
inline SequenceTrace run_sequence(const CellParams& params, const Matrix& inputs,
                                  const CellState& initial) {
  return run_sequence<double>(params, inputs, initial);
}
inline SequenceTrace run_sequence(const CellParams& params, const Matrix& inputs) {
  return run_sequence<double>(params, inputs);
}

// Binary container: "GRNC" magic, u32 format version, u32 kind, u64 nI,
// u64 nH, then every tensor in flat order as float64 little-endian.
inline constexpr std::uint32_t kCellFormatVersion = 1;

void write_cell_params(std::ostream& out, const CellParams& params);
CellParams read_cell_params(std::istream& in);
void save_cell_params(const std::string& path, const CellParams& params);
CellParams load_cell_params(const std::string& path);

}  // namespace gatedrnn
