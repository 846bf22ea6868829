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

#include "gatedrnn/cells.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "gatedrnn/binary_io.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {

namespace {

template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  return a.unaryExpr([](Scalar x) { return logistic(x); });
}

template <typename Derived>
auto tanh_of(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  return a.unaryExpr([](Scalar x) { return std::tanh(x); });
}

std::size_t slot(GateRole role) { return static_cast<std::size_t>(role); }

// W X + b for every present gate, one column per step.
template <typename Scalar>
std::array<MatrixT<Scalar>, kGateRoleCount> input_projections(
    const BasicCellParams<Scalar>& params, const MatrixT<Scalar>& inputs) {
  std::array<MatrixT<Scalar>, kGateRoleCount> proj;
  for (std::size_t r = 0; r < kGateRoleCount; ++r) {
    const auto role = static_cast<GateRole>(r);
    if (!params.has(role)) continue;
    const auto& g = params.gate(role);
    proj[r].noalias() = g.input_weights * inputs;
    proj[r].colwise() += g.bias;
  }
  return proj;
}

template <typename Scalar>
void lstm_family_step(const BasicCellParams<Scalar>& params,
                      const std::array<MatrixT<Scalar>, kGateRoleCount>& proj, Index t,
                      const VectorT<Scalar>& h_prev, const VectorT<Scalar>& c_prev,
                      BasicSequenceTrace<Scalar>& tr) {
  using Vec = VectorT<Scalar>;
  const bool with_input = params.has(GateRole::kInput);
  const bool with_forget = params.has(GateRole::kForget);
  const bool with_output = params.has(GateRole::kOutput);

  auto gate_preactivation = [&](GateRole role, const Vec* peep_source) {
    const auto& g = params.gate(role);
    Vec a = proj[slot(role)].col(t);
    a.noalias() += g.recurrent_weights * h_prev;
    if (g.peephole && peep_source) a += g.peephole->cwiseProduct(*peep_source);
    return a;
  };

  if (with_input) tr.input.col(t) = sigmoid(gate_preactivation(GateRole::kInput, &c_prev));
  if (with_forget) tr.forget.col(t) = sigmoid(gate_preactivation(GateRole::kForget, &c_prev));
  tr.candidate.col(t) = tanh_of(gate_preactivation(GateRole::kCandidate, nullptr));

  Vec c = with_forget ? Vec(tr.forget.col(t).cwiseProduct(c_prev)) : c_prev;
  if (with_input)
    c += tr.input.col(t).cwiseProduct(tr.candidate.col(t));
  else
    c += tr.candidate.col(t);
  tr.cell.col(t) = c;

  if (with_output) {
    tr.output.col(t) = sigmoid(gate_preactivation(GateRole::kOutput, &c));
    tr.hidden.col(t) = tr.output.col(t).cwiseProduct(tanh_of(c));
  } else {
    tr.hidden.col(t) = tanh_of(c);
  }
}

template <typename Scalar>
void slstm_step(const BasicCellParams<Scalar>& params,
                const std::array<MatrixT<Scalar>, kGateRoleCount>& proj, Index t,
                const VectorT<Scalar>& h_prev, const VectorT<Scalar>& c_prev,
                BasicSequenceTrace<Scalar>& tr) {
  using Vec = VectorT<Scalar>;
  Vec af = proj[slot(GateRole::kForget)].col(t);
  af.noalias() += params.gate(GateRole::kForget).recurrent_weights * h_prev;
  Vec ac = proj[slot(GateRole::kCandidate)].col(t);
  ac.noalias() += params.gate(GateRole::kCandidate).recurrent_weights * h_prev;

  tr.forget.col(t) = sigmoid(af);
  tr.candidate.col(t) = tanh_of(ac);
  const auto f = tr.forget.col(t).array();
  tr.cell.col(t) = (f * c_prev.array() + (Scalar(1) - f) * tr.candidate.col(t).array()).matrix();
  tr.hidden.col(t) = tanh_of(tr.cell.col(t));
}

template <typename Scalar>
void gru_step(const BasicCellParams<Scalar>& params,
              const std::array<MatrixT<Scalar>, kGateRoleCount>& proj, Index t,
              const VectorT<Scalar>& h_prev, BasicSequenceTrace<Scalar>& tr) {
  using Vec = VectorT<Scalar>;
  Vec ar = proj[slot(GateRole::kReset)].col(t);
  ar.noalias() += params.gate(GateRole::kReset).recurrent_weights * h_prev;
  Vec az = proj[slot(GateRole::kUpdate)].col(t);
  az.noalias() += params.gate(GateRole::kUpdate).recurrent_weights * h_prev;
  tr.reset.col(t) = sigmoid(ar);
  tr.update.col(t) = sigmoid(az);

  Vec recurrent_candidate;
  recurrent_candidate.noalias() = params.gate(GateRole::kCandidate).recurrent_weights * h_prev;
  Vec ah = proj[slot(GateRole::kCandidate)].col(t) +
           tr.reset.col(t).cwiseProduct(recurrent_candidate);
  tr.candidate.col(t) = tanh_of(ah);

  const auto z = tr.update.col(t).array();
  tr.hidden.col(t) =
      (z * h_prev.array() + (Scalar(1) - z) * tr.candidate.col(t).array()).matrix();
}

template <typename Scalar>
void check_state(const CellSpec& spec, const BasicCellState<Scalar>& s) {
  require(s.hidden.size() == spec.hidden_dim, "state hidden size does not match spec");
  require(s.cell.has_value() == has_memory_cell(spec.kind),
          "state cell presence does not match the cell kind");
  if (s.cell) require(s.cell->size() == spec.hidden_dim, "state cell size does not match spec");
}

}  // namespace

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::kVanillaLstm: return "LSTM";
    case CellKind::kNig: return "NIG";
    case CellKind::kNog: return "NOG";
    case CellKind::kNfg: return "NFG";
    case CellKind::kNph: return "NPH";
    case CellKind::kGru: return "GRU";
    case CellKind::kSlstm: return "S-LSTM";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "lstm" || lower == "vanilla" || lower == "vanillalstm") return CellKind::kVanillaLstm;
  if (lower == "nig") return CellKind::kNig;
  if (lower == "nog") return CellKind::kNog;
  if (lower == "nfg") return CellKind::kNfg;
  if (lower == "nph") return CellKind::kNph;
  if (lower == "gru") return CellKind::kGru;
  if (lower == "s-lstm" || lower == "slstm") return CellKind::kSlstm;
  throw ValidationError("unknown cell kind '" + std::string(name) + "'");
}

std::string_view to_string(GateRole role) {
  switch (role) {
    case GateRole::kInput: return "input";
    case GateRole::kForget: return "forget";
    case GateRole::kCandidate: return "candidate";
    case GateRole::kOutput: return "output";
    case GateRole::kReset: return "reset";
    case GateRole::kUpdate: return "update";
  }
  return "?";
}

bool has_gate(CellKind kind, GateRole role) {
  switch (kind) {
    case CellKind::kVanillaLstm:
    case CellKind::kNph:
      return role == GateRole::kInput || role == GateRole::kForget ||
             role == GateRole::kCandidate || role == GateRole::kOutput;
    case CellKind::kNig:
      return role == GateRole::kForget || role == GateRole::kCandidate ||
             role == GateRole::kOutput;
    case CellKind::kNog:
      return role == GateRole::kInput || role == GateRole::kForget ||
             role == GateRole::kCandidate;
    case CellKind::kNfg:
      return role == GateRole::kInput || role == GateRole::kCandidate ||
             role == GateRole::kOutput;
    case CellKind::kGru:
      return role == GateRole::kReset || role == GateRole::kUpdate ||
             role == GateRole::kCandidate;
    case CellKind::kSlstm:
      return role == GateRole::kForget || role == GateRole::kCandidate;
  }
  return false;
}

bool has_peephole(CellKind kind, GateRole role) {
  switch (kind) {
    case CellKind::kVanillaLstm:
    case CellKind::kNig:
    case CellKind::kNog:
    case CellKind::kNfg:
      return role != GateRole::kCandidate && has_gate(kind, role);
    default:
      return false;
  }
}

bool has_memory_cell(CellKind kind) { return kind != CellKind::kGru; }

void CellSpec::validate() const {
  require(input_dim >= 1, "cell input_dim must be >= 1");
  require(hidden_dim >= 1, "cell hidden_dim must be >= 1");
  require(static_cast<std::uint8_t>(kind) <= static_cast<std::uint8_t>(CellKind::kSlstm),
          "invalid cell kind");
}

std::int64_t param_count(const CellSpec& spec) {
  spec.validate();
  const std::int64_t ni = spec.input_dim;
  const std::int64_t nh = spec.hidden_dim;
  const std::int64_t u = ni * nh + nh * nh + nh;
  switch (spec.kind) {
    case CellKind::kVanillaLstm: return 4 * u + 3 * nh;
    case CellKind::kNig:
    case CellKind::kNog:
    case CellKind::kNfg: return 3 * u + 2 * nh;
    case CellKind::kNph: return 4 * u;
    case CellKind::kGru: return 3 * u;
    case CellKind::kSlstm: return 2 * u;
  }
  return 0;
}

template <typename Scalar>
bool BasicGateParams<Scalar>::operator==(const BasicGateParams& other) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  if (peephole.has_value() != other.peephole.has_value()) return false;
  if (peephole && !same(*peephole, *other.peephole)) return false;
  return same(input_weights, other.input_weights) &&
         same(recurrent_weights, other.recurrent_weights) && same(bias, other.bias);
}

template <typename Scalar>
BasicCellParams<Scalar>::BasicCellParams(const CellSpec& spec) : spec_(spec) {
  spec.validate();
  const Index ni = spec.input_dim;
  const Index nh = spec.hidden_dim;
  for (std::size_t r = 0; r < kGateRoleCount; ++r) {
    const auto role = static_cast<GateRole>(r);
    if (!has_gate(spec.kind, role)) continue;
    BasicGateParams<Scalar> g;
    g.input_weights = MatrixT<Scalar>::Zero(nh, ni);
    g.recurrent_weights = MatrixT<Scalar>::Zero(nh, nh);
    if (has_peephole(spec.kind, role)) g.peephole = VectorT<Scalar>::Zero(nh);
    g.bias = VectorT<Scalar>::Zero(nh);
    gates_[r] = std::move(g);
  }
}

template <typename Scalar>
const BasicGateParams<Scalar>& BasicCellParams<Scalar>::gate(GateRole role) const {
  const auto& g = gates_[slot(role)];
  if (!g)
    throw ValidationError(std::string(to_string(spec_.kind)) + " has no " +
                          std::string(to_string(role)) + " gate");
  return *g;
}

template <typename Scalar>
BasicGateParams<Scalar>& BasicCellParams<Scalar>::gate(GateRole role) {
  return const_cast<BasicGateParams<Scalar>&>(std::as_const(*this).gate(role));
}

template <typename Scalar>
std::int64_t BasicCellParams<Scalar>::size() const {
  std::int64_t n = 0;
  for_each_tensor([&](std::span<const Scalar> s) { n += static_cast<std::int64_t>(s.size()); });
  return n;
}

template <typename Scalar>
BasicCellState<Scalar> BasicSequenceTrace<Scalar>::state(Index t) const {
  BasicCellState<Scalar> s;
  s.hidden = hidden.col(t);
  if (cell.size() > 0) s.cell = VectorT<Scalar>(cell.col(t));
  return s;
}

template <typename Scalar>
BasicGateTrace<Scalar> BasicSequenceTrace<Scalar>::at(Index t) const {
  BasicGateTrace<Scalar> g;
  auto col = [t](const MatrixT<Scalar>& m) -> std::optional<VectorT<Scalar>> {
    if (m.size() == 0) return std::nullopt;
    return VectorT<Scalar>(m.col(t));
  };
  g.input = col(input);
  g.forget = col(forget);
  g.output = col(output);
  g.reset = col(reset);
  g.update = col(update);
  g.candidate = candidate.col(t);
  g.cell = col(cell);
  g.hidden = hidden.col(t);
  return g;
}

CellState zero_state(const CellSpec& spec) {
  CellState s;
  s.hidden = Vector::Zero(spec.hidden_dim);
  if (has_memory_cell(spec.kind)) s.cell = Vector::Zero(spec.hidden_dim);
  return s;
}

CellParams init_params(const CellSpec& spec, std::uint64_t seed, double scale) {
  require(scale > 0.0 && std::isfinite(scale), "init scale must be positive");
  CellParams params(spec);
  Rng rng(seed);
  for (std::size_t r = 0; r < kGateRoleCount; ++r) {
    const auto role = static_cast<GateRole>(r);
    if (!params.has(role)) continue;
    auto& g = params.gate(role);
    for (Index i = 0; i < g.input_weights.size(); ++i)
      g.input_weights.data()[i] = rng.uniform(-scale, scale);
    for (Index i = 0; i < g.recurrent_weights.size(); ++i)
      g.recurrent_weights.data()[i] = rng.uniform(-scale, scale);
    if (role == GateRole::kForget) g.bias.setOnes();
  }
  return params;
}

template <typename Scalar>
BasicSequenceTrace<Scalar> run_sequence(const BasicCellParams<Scalar>& params,
                                        const MatrixT<Scalar>& inputs,
                                        const BasicCellState<Scalar>& initial) {
  const CellSpec& spec = params.spec();
  require(inputs.cols() >= 1, "run_sequence needs at least one step");
  require(inputs.rows() == spec.input_dim, "input frame size does not match cell input_dim");
  require(inputs.allFinite(), "non-finite cell input");
  check_state(spec, initial);

  const Index nh = spec.hidden_dim;
  const Index steps = inputs.cols();
  BasicSequenceTrace<Scalar> tr;
  tr.kind = spec.kind;
  tr.initial = initial;
  auto alloc = [&](MatrixT<Scalar>& m, bool present) {
    if (present) m.resize(nh, steps);
  };
  alloc(tr.input, params.has(GateRole::kInput));
  alloc(tr.forget, params.has(GateRole::kForget));
  alloc(tr.output, params.has(GateRole::kOutput));
  alloc(tr.reset, params.has(GateRole::kReset));
  alloc(tr.update, params.has(GateRole::kUpdate));
  alloc(tr.cell, has_memory_cell(spec.kind));
  tr.candidate.resize(nh, steps);
  tr.hidden.resize(nh, steps);

  const auto proj = input_projections(params, inputs);
  VectorT<Scalar> h_prev = initial.hidden;
  VectorT<Scalar> c_prev = initial.cell ? *initial.cell : VectorT<Scalar>();
  for (Index t = 0; t < steps; ++t) {
    switch (spec.kind) {
      case CellKind::kGru:
        gru_step(params, proj, t, h_prev, tr);
        break;
      case CellKind::kSlstm:
        slstm_step(params, proj, t, h_prev, c_prev, tr);
        break;
      default:
        lstm_family_step(params, proj, t, h_prev, c_prev, tr);
        break;
    }
    h_prev = tr.hidden.col(t);
    if (tr.cell.size() > 0) c_prev = tr.cell.col(t);
  }
  return tr;
}

template <typename Scalar>
std::pair<BasicCellState<Scalar>, BasicGateTrace<Scalar>> step(
    const BasicCellParams<Scalar>& params, const VectorT<Scalar>& x,
    const BasicCellState<Scalar>& prev) {
  require(x.size() == params.spec().input_dim, "input frame size does not match cell input_dim");
  const MatrixT<Scalar> one = x;
  const auto tr = run_sequence(params, one, prev);
  return {tr.state(0), tr.at(0)};
}

template struct BasicGateParams<double>;
template struct BasicGateParams<long double>;
template class BasicCellParams<double>;
template class BasicCellParams<long double>;
template struct BasicSequenceTrace<double>;
template struct BasicSequenceTrace<long double>;
template BasicSequenceTrace<double> run_sequence(const BasicCellParams<double>&, const Matrix&,
                                                 const BasicCellState<double>&);
template BasicSequenceTrace<long double> run_sequence(const BasicCellParams<long double>&,
                                                      const MatrixT<long double>&,
                                                      const BasicCellState<long double>&);
template std::pair<CellState, GateTrace> step(const CellParams&, const Vector&, const CellState&);
template std::pair<BasicCellState<long double>, BasicGateTrace<long double>> step(
    const BasicCellParams<long double>&, const VectorT<long double>&,
    const BasicCellState<long double>&);

namespace {
constexpr std::string_view kCellMagic = "GRNC";
}

void write_cell_params(std::ostream& out, const CellParams& params) {
  BinaryWriter w(out);
  w.magic(kCellMagic);
  w.u32(kCellFormatVersion);
  w.u32(static_cast<std::uint32_t>(params.kind()));
  w.u64(static_cast<std::uint64_t>(params.spec().input_dim));
  w.u64(static_cast<std::uint64_t>(params.spec().hidden_dim));
  params.for_each_tensor([&](std::span<const double> s) {
    w.values(s.data(), static_cast<Index>(s.size()));
  });
}

CellParams read_cell_params(std::istream& in) {
  BinaryReader r(in, "cell parameters");
  r.expect_magic(kCellMagic);
  const std::uint32_t version = r.u32();
  if (version != kCellFormatVersion)
    throw IoError("cell parameters: unsupported format version " + std::to_string(version));
  const std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(CellKind::kSlstm))
    throw IoError("cell parameters: unknown cell kind " + std::to_string(kind));
  CellSpec spec;
  spec.kind = static_cast<CellKind>(kind);
  spec.input_dim = static_cast<Index>(r.u64());
  spec.hidden_dim = static_cast<Index>(r.u64());
  if (spec.input_dim < 1 || spec.hidden_dim < 1 || spec.input_dim > (1 << 20) ||
      spec.hidden_dim > (1 << 20))
    throw IoError("cell parameters: implausible dimensions");
  CellParams params(spec);
  params.for_each_tensor([&](std::span<double> s) {
    r.values(s.data(), static_cast<Index>(s.size()));
  });
  return params;
}

void save_cell_params(const std::string& path, const CellParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  write_cell_params(out, params);
}

CellParams load_cell_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_cell_params(in);
}

}  // namespace gatedrnn
