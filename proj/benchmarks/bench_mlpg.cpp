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

#include "gatedrnn/mlpg.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {
namespace {

GenerationProblem random_problem(Index frames, Index dims) {
  Rng rng(11);
  GenerationProblem p;
  p.means.resize(frames, 3 * dims);
  p.variances.resize(frames, 3 * dims);
  for (Index i = 0; i < p.means.size(); ++i) {
    p.means.data()[i] = rng.uniform(-1.0, 1.0);
    p.variances.data()[i] = rng.uniform(0.1, 2.0);
  }
  return p;
}

// Args: frames, dims.
void BM_MlpgSolve(benchmark::State& state) {
  const GenerationProblem p = random_problem(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(mlpg_solve(p).data());
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_MlpgSolve)
    ->Args({100, 1})
    ->Args({1000, 1})
    ->Args({10000, 1})
    ->Args({500, 14})
    ->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace gatedrnn
