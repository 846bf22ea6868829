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

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gatedrnn/config.hpp"
#include "gatedrnn/corpus.hpp"
#include "gatedrnn/metrics.hpp"
#include "gatedrnn/network.hpp"

namespace gatedrnn {

/// Normalized training pairs plus the statistics needed to undo them.
struct PreparedData {
  DataNormalization norm;
  std::vector<Sequence> train;
  std::vector<Sequence> dev;
  std::vector<Sequence> test;
};

/// Fits min-max input and mean-variance output statistics on the training
/// split and applies them to every split. Global variances are the
/// per-dimension population variances of the raw training targets.
PreparedData prepare_data(const Corpus& corpus);

/// Objective measures of generated trajectories against the natural
/// targets. MCD skips coefficient 0.
MetricReport evaluate_generation(const Model& model, std::span<const Utterance> set);

struct SystemRun {
  CellKind kind = CellKind::kVanillaLstm;
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  TrainResult trained;  // model carries the normalization
  EvalReport test_mse;
  MetricReport test_metrics;
};

/// Trains one system with a fixed learning rate and evaluates it on test.
SystemRun run_system(const LabConfig& config, const PreparedData& data, const Corpus& corpus,
                     CellKind kind, std::uint64_t seed, double learning_rate);

struct AblationRow {
  CellKind kind = CellKind::kVanillaLstm;
  MetricReport median;  // per-metric median over seeds
  std::int64_t params = 0;
  double generation_seconds = 0.0;
};

struct AblationResult {
  std::vector<SystemRun> runs;  // kind-major, seed-minor
  std::map<CellKind, double> learning_rates;
  std::vector<AblationRow> rows;  // LSTM, NIG, NOG, NFG, NPH, GRU, S-LSTM
  std::vector<BenchRow> bench;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trains every kind for every seed with the same config. With more than
/// one candidate rate, each kind picks its rate by dev MSE on the first
/// seed. Generation time comes from the first seed's models on the test
/// set.
AblationResult run_ablation(const LabConfig& config, const Corpus& corpus,
                            const ProgressFn& progress = {});

/// system,mcd_db,bap_db,f0_rmse_hz,vuv_error_pct,params,gen_time_s
void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);
/// One row per trained system and seed.
void write_runs_csv(const std::string& path, const std::vector<SystemRun>& runs);
void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

/// <root>/<YYYYmmdd-HHMMSS>-seed<seed>, created. The root is
/// $GATEDRNN_RUN_ROOT when set, ./runs otherwise.
std::string make_run_dir(std::uint64_t seed);

struct RunManifest {
  std::string config_text;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> checkpoints;  // system/seed -> path
  std::vector<std::string> metric_csvs;
  std::string timing_csv;
  std::string tool_version;
};

/// Throws IoError when a referenced path does not exist.
void write_run_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace gatedrnn
