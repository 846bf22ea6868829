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


#include <benchmark/benchmark.h>

#include "gatedrnn/backprop.hpp"
#include "gatedrnn/cells.hpp"
#include "gatedrnn/corpus.hpp"
#include "gatedrnn/network.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {
namespace {

Matrix random_inputs(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

// Args: kind index, hidden width. 200 steps.
void BM_CellForward(benchmark::State& state) {
  const CellKind kind = kAllCellKinds[static_cast<std::size_t>(state.range(0))];
  const Index nh = state.range(1);
  const CellParams p = init_params({kind, nh, nh}, 1);
  const Matrix x = random_inputs(nh, 200, 2);
  for (auto _ : state) benchmark::DoNotOptimize(run_sequence(p, x).hidden.data());
  state.SetLabel(std::string(to_string(kind)));
  state.SetItemsProcessed(state.iterations() * 200);
}

void BM_CellBackward(benchmark::State& state) {
  const CellKind kind = kAllCellKinds[static_cast<std::size_t>(state.range(0))];
  const Index nh = state.range(1);
  const CellParams p = init_params({kind, nh, nh}, 1);
  const Matrix x = random_inputs(nh, 200, 2);
  const SequenceTrace tr = run_sequence(p, x);
  const Matrix dh = random_inputs(nh, 200, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sequence_backward(p, x, tr, dh).inputs.data());
  state.SetLabel(std::string(to_string(kind)));
}

void cell_args(benchmark::internal::Benchmark* b) {
  for (int k = 0; k < static_cast<int>(kAllCellKinds.size()); ++k)
    for (int nh : {32, 256}) b->Args({k, nh});
}

BENCHMARK(BM_CellForward)->Apply(cell_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CellBackward)->Apply(cell_args)->Unit(benchmark::kMicrosecond);

// Full network at the desk size, one 300-frame utterance.
void BM_NetworkForward(benchmark::State& state) {
  const CellKind kind = kAllCellKinds[static_cast<std::size_t>(state.range(0))];
  const CorpusConfig cc;
  const NetworkConfig cfg{cc.linguistic_dim(), {64, 64, 64}, kind, 32, cc.layout.target_dim()};
  const Model m = init_model(cfg, 7);
  const Matrix x = random_inputs(300, cfg.linguistic_dim, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x).data());
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_NetworkForward)->DenseRange(0, 6)->Unit(benchmark::kMicrosecond);

void BM_LossAndGradient(benchmark::State& state) {
  const CellKind kind = kAllCellKinds[static_cast<std::size_t>(state.range(0))];
  const CorpusConfig cc;
  const NetworkConfig cfg{cc.linguistic_dim(), {64, 64, 64}, kind, 32, cc.layout.target_dim()};
  const Model m = init_model(cfg, 7);
  const Sequence s{"bench", random_inputs(300, cfg.linguistic_dim, 4), random_inputs(300, cfg.output_dim, 5)};
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(m.weights, s).loss);
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_LossAndGradient)->DenseRange(0, 6)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace gatedrnn
