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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gatedrnn/cells.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {
namespace {

std::int64_t unit_count(Index ni, Index nh) { return ni * nh + nh * nh + nh; }

Matrix random_inputs(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

CellParams random_params(const CellSpec& spec, std::uint64_t seed, double scale = 0.5) {
  CellParams p(spec);
  Rng rng(seed);
  p.for_each_tensor([&](std::span<double> s) {
    for (double& x : s) x = rng.uniform(-scale, scale);
  });
  return p;
}

TEST(ParamCount, MatchesPublishedTable) {
  EXPECT_EQ(param_count({CellKind::kVanillaLstm, 512, 256}), 788224);
  EXPECT_EQ(param_count({CellKind::kNig, 512, 256}), 591104);
  EXPECT_EQ(param_count({CellKind::kNog, 512, 256}), 591104);
  EXPECT_EQ(param_count({CellKind::kNfg, 512, 256}), 591104);
  EXPECT_EQ(param_count({CellKind::kNph, 512, 256}), 787456);
  EXPECT_EQ(param_count({CellKind::kGru, 512, 256}), 590592);
  EXPECT_EQ(param_count({CellKind::kSlstm, 512, 256}), 393728);
}

TEST(ParamCount, SmallestNig) { EXPECT_EQ(param_count({CellKind::kNig, 1, 1}), 11); }

TEST(ParamCount, ClosedFormRelations) {
  for (Index ni : {1, 3, 17}) {
    for (Index nh : {1, 2, 9}) {
      const auto u = unit_count(ni, nh);
      const auto count = [&](CellKind k) { return param_count({k, ni, nh}); };
      EXPECT_EQ(count(CellKind::kNph), count(CellKind::kVanillaLstm) - 3 * nh);
      EXPECT_EQ(count(CellKind::kSlstm), count(CellKind::kGru) - u);
      EXPECT_EQ(count(CellKind::kVanillaLstm), 4 * u + 3 * nh);
      EXPECT_EQ(count(CellKind::kGru), 3 * u);
    }
  }
}

TEST(ParamCount, EqualsStoredScalars) {
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, 5, 4};
    const CellParams p(spec);
    EXPECT_EQ(p.size(), param_count(spec)) << to_string(kind);
  }
}

TEST(CellKindNames, RoundTrip) {
  for (CellKind kind : kAllCellKinds) EXPECT_EQ(parse_cell_kind(to_string(kind)), kind);
  EXPECT_EQ(parse_cell_kind("slstm"), CellKind::kSlstm);
  EXPECT_EQ(parse_cell_kind("vanilla"), CellKind::kVanillaLstm);
  EXPECT_THROW(parse_cell_kind("rnn"), ValidationError);
}

TEST(CellSpec, RejectsEmptyDims) {
  EXPECT_THROW((CellSpec{CellKind::kGru, 0, 3}.validate()), ValidationError);
  EXPECT_THROW((CellSpec{CellKind::kGru, 3, 0}.validate()), ValidationError);
}

TEST(Structure, PeepholesOnlyWhereDefined) {
  for (CellKind kind : kAllCellKinds) {
    const CellParams p({kind, 3, 2});
    for (std::size_t r = 0; r < kGateRoleCount; ++r) {
      const auto role = static_cast<GateRole>(r);
      EXPECT_EQ(p.has(role), has_gate(kind, role));
      if (p.has(role)) EXPECT_EQ(p.gate(role).peephole.has_value(), has_peephole(kind, role));
    }
  }
  EXPECT_TRUE(has_peephole(CellKind::kVanillaLstm, GateRole::kOutput));
  EXPECT_FALSE(has_peephole(CellKind::kVanillaLstm, GateRole::kCandidate));
  EXPECT_FALSE(has_peephole(CellKind::kNph, GateRole::kInput));
  EXPECT_FALSE(has_gate(CellKind::kNfg, GateRole::kForget));
  EXPECT_FALSE(has_memory_cell(CellKind::kGru));
}

TEST(InitParams, DeterministicAndBounded) {
  const CellSpec spec{CellKind::kVanillaLstm, 6, 4};
  const CellParams a = init_params(spec, 42, 0.1);
  const CellParams b = init_params(spec, 42, 0.1);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == init_params(spec, 43, 0.1));
  EXPECT_TRUE(a.gate(GateRole::kForget).bias.isApprox(Vector::Ones(4)));
  EXPECT_TRUE(a.gate(GateRole::kInput).bias.isZero(0.0));
  EXPECT_TRUE(a.gate(GateRole::kOutput).peephole->isZero(0.0));
  EXPECT_LE(a.gate(GateRole::kCandidate).input_weights.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_THROW(init_params(spec, 1, 0.0), ValidationError);
}

TEST(InitParams, GruHasNoPeepholes) {
  const CellParams p = init_params({CellKind::kGru, 3, 3}, 7, 0.1);
  for (GateRole r : {GateRole::kReset, GateRole::kUpdate, GateRole::kCandidate})
    EXPECT_FALSE(p.gate(r).peephole.has_value());
}

TEST(Step, ZeroLstmFromZeroState) {
  const CellSpec spec{CellKind::kVanillaLstm, 3, 2};
  const CellParams p(spec);
  const auto [s, g] = step(p, Vector::Constant(3, 0.7), zero_state(spec));
  EXPECT_TRUE(g.input->isApproxToConstant(0.5));
  EXPECT_TRUE(g.forget->isApproxToConstant(0.5));
  EXPECT_TRUE(g.output->isApproxToConstant(0.5));
  EXPECT_TRUE(s.cell->isZero(0.0));
  EXPECT_TRUE(s.hidden.isZero(0.0));
}

TEST(Step, ScalarLstmHandValue) {
  const CellSpec spec{CellKind::kVanillaLstm, 1, 1};
  const CellParams p(spec);
  CellState prev{Vector::Zero(1), Vector::Ones(1)};
  const auto [s, g] = step(p, Vector::Zero(1), prev);
  EXPECT_DOUBLE_EQ((*s.cell)[0], 0.5);
  EXPECT_NEAR(s.hidden[0], 0.5 * std::tanh(0.5), 1e-15);
  EXPECT_NEAR(s.hidden[0], 0.231059, 1e-6);
}

TEST(Step, ScalarSlstmHandValue) {
  const CellSpec spec{CellKind::kSlstm, 1, 1};
  const CellParams p(spec);
  const auto [s, g] = step(p, Vector::Zero(1), CellState{Vector::Zero(1), Vector::Ones(1)});
  EXPECT_DOUBLE_EQ((*g.forget)[0], 0.5);
  EXPECT_DOUBLE_EQ((*s.cell)[0], 0.5);
  EXPECT_NEAR(s.hidden[0], 0.462117, 1e-6);
}

TEST(Step, ScalarGruHandValue) {
  const CellSpec spec{CellKind::kGru, 1, 1};
  const CellParams p(spec);
  const auto [s, g] = step(p, Vector::Zero(1), CellState{Vector::Ones(1), std::nullopt});
  EXPECT_DOUBLE_EQ((*g.reset)[0], 0.5);
  EXPECT_DOUBLE_EQ((*g.update)[0], 0.5);
  EXPECT_DOUBLE_EQ(g.candidate[0], 0.0);
  EXPECT_DOUBLE_EQ(s.hidden[0], 0.5);
  EXPECT_FALSE(s.cell.has_value());
}

TEST(Step, RejectsBadInputs) {
  const CellSpec spec{CellKind::kVanillaLstm, 2, 2};
  const CellParams p(spec);
  EXPECT_THROW(step(p, Vector::Zero(3), zero_state(spec)), ValidationError);
  Vector bad = Vector::Zero(2);
  bad[1] = std::nan("");
  EXPECT_THROW(step(p, bad, zero_state(spec)), ValidationError);
  EXPECT_THROW(step(p, Vector::Zero(2), CellState{Vector::Zero(2), std::nullopt}),
               ValidationError);
  const CellParams gru({CellKind::kGru, 2, 2});
  EXPECT_THROW(step(gru, Vector::Zero(2), zero_state(spec)), ValidationError);
}

TEST(Step, PureFunction) {
  const CellSpec spec{CellKind::kNph, 4, 3};
  const CellParams p = random_params(spec, 5);
  const Vector x = random_inputs(4, 1, 9).col(0);
  const auto a = step(p, x, zero_state(spec));
  const auto b = step(p, x, zero_state(spec));
  EXPECT_EQ(a.first.hidden, b.first.hidden);
  EXPECT_EQ(*a.first.cell, *b.first.cell);
}

TEST(RunSequence, SingleStepEqualsStep) {
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, 3, 4};
    const CellParams p = random_params(spec, 11);
    const Matrix x = random_inputs(3, 1, 12);
    const auto tr = run_sequence(p, x);
    const auto [s, g] = step(p, Vector(x.col(0)), zero_state(spec));
    EXPECT_TRUE(tr.hidden.col(0).isApprox(s.hidden, 1e-15)) << to_string(kind);
  }
}

TEST(RunSequence, EqualsManualStepLoop) {
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, 3, 4};
    const CellParams p = random_params(spec, 21);
    const Matrix x = random_inputs(3, 5, 22);
    CellState state = zero_state(spec);
    state.hidden.setConstant(0.1);
    if (state.cell) state.cell->setConstant(-0.2);
    const auto tr = run_sequence(p, x, state);
    for (Index t = 0; t < 5; ++t) {
      const auto [next, g] = step(p, Vector(x.col(t)), state);
      EXPECT_NEAR((tr.hidden.col(t) - next.hidden).cwiseAbs().maxCoeff(), 0.0, 1e-14)
          << to_string(kind) << " t=" << t;
      if (next.cell) {
        EXPECT_NEAR((tr.cell.col(t) - *next.cell).cwiseAbs().maxCoeff(), 0.0, 1e-14);
        EXPECT_TRUE(tr.state(t).cell->isApprox(*next.cell));
      }
      state = next;
    }
  }
}

TEST(RunSequence, NfgZeroParamsKeepsZeroCell) {
  const CellSpec spec{CellKind::kNfg, 1, 1};
  const CellParams p(spec);
  const auto tr = run_sequence(p, Matrix::Zero(1, 3));
  EXPECT_TRUE(tr.cell.isZero(0.0));
}

TEST(RunSequence, NfgCellIsPreservedWithoutCandidate) {
  const CellSpec spec{CellKind::kNfg, 2, 3};
  CellParams p = random_params(spec, 3);
  auto& cand = p.gate(GateRole::kCandidate);
  cand.input_weights.setZero();
  cand.recurrent_weights.setZero();
  cand.bias.setZero();
  CellState init{Vector::Zero(3), Vector(Vector::LinSpaced(3, -1.0, 2.0))};
  const auto tr = run_sequence(p, random_inputs(2, 6, 4), init);
  for (Index t = 0; t < 6; ++t) EXPECT_EQ(Vector(tr.cell.col(t)), *init.cell);
}

TEST(RunSequence, RejectsEmpty) {
  const CellParams p({CellKind::kGru, 2, 2});
  EXPECT_THROW(run_sequence(p, Matrix(2, 0)), ValidationError);
}

TEST(Invariants, GatesInsideOpenUnitInterval) {
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, 4, 5};
    const auto tr = run_sequence(random_params(spec, 31, 1.0), random_inputs(4, 10, 32, 3.0));
    for (const Matrix* m : {&tr.input, &tr.forget, &tr.output, &tr.reset, &tr.update}) {
      if (m->size() == 0) continue;
      EXPECT_GT(m->minCoeff(), 0.0) << to_string(kind);
      EXPECT_LT(m->maxCoeff(), 1.0) << to_string(kind);
    }
  }
}

TEST(Invariants, HiddenBoundedForTanhOutputs) {
  for (CellKind kind : {CellKind::kVanillaLstm, CellKind::kNig, CellKind::kNfg, CellKind::kNph,
                        CellKind::kSlstm}) {
    const CellSpec spec{kind, 4, 5};
    const auto tr = run_sequence(random_params(spec, 41, 2.0), random_inputs(4, 12, 42, 3.0));
    EXPECT_LE(tr.hidden.cwiseAbs().maxCoeff(), 1.0) << to_string(kind);
    EXPECT_TRUE(tr.hidden.allFinite());
  }
}

TEST(Invariants, SlstmCellIsConvexCombination) {
  const CellSpec spec{CellKind::kSlstm, 3, 4};
  const auto tr = run_sequence(random_params(spec, 51, 1.0), random_inputs(3, 8, 52));
  for (Index t = 0; t < 8; ++t) {
    const Vector prev = t ? Vector(tr.cell.col(t - 1)) : *tr.initial.cell;
    for (Index d = 0; d < 4; ++d) {
      const double lo = std::min(prev[d], tr.candidate(d, t));
      const double hi = std::max(prev[d], tr.candidate(d, t));
      EXPECT_GE(tr.cell(d, t), lo - 1e-15);
      EXPECT_LE(tr.cell(d, t), hi + 1e-15);
    }
  }
}

TEST(Invariants, GruHiddenIsConvexCombination) {
  const CellSpec spec{CellKind::kGru, 3, 4};
  const auto tr = run_sequence(random_params(spec, 61, 1.0), random_inputs(3, 8, 62));
  for (Index t = 0; t < 8; ++t) {
    const Vector prev = t ? Vector(tr.hidden.col(t - 1)) : tr.initial.hidden;
    for (Index d = 0; d < 4; ++d) {
      EXPECT_GE(tr.hidden(d, t), std::min(prev[d], tr.candidate(d, t)) - 1e-15);
      EXPECT_LE(tr.hidden(d, t), std::max(prev[d], tr.candidate(d, t)) + 1e-15);
    }
  }
}

TEST(Serialization, BinaryRoundTripIsBitExact) {
  for (CellKind kind : kAllCellKinds) {
    const CellParams p = random_params({kind, 3, 2}, 71);
    std::stringstream buf;
    write_cell_params(buf, p);
    const CellParams q = read_cell_params(buf);
    EXPECT_EQ(p, q) << to_string(kind);
  }
}

TEST(Serialization, RejectsCorruptHeaders) {
  const CellParams p = random_params({CellKind::kGru, 3, 2}, 81);
  std::stringstream buf;
  write_cell_params(buf, p);
  const std::string bytes = buf.str();

  std::stringstream bad_magic(std::string("XXXX") + bytes.substr(4));
  EXPECT_THROW(read_cell_params(bad_magic), IoError);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_cell_params(truncated), IoError);

  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  std::stringstream wv(wrong_version);
  EXPECT_THROW(read_cell_params(wv), IoError);
}

}  // namespace
}  // namespace gatedrnn
