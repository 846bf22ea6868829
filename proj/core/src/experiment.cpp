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

#include "gatedrnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "gatedrnn/mlpg.hpp"

namespace gatedrnn {

namespace fs = std::filesystem;

namespace {

Matrix raw_targets(const Utterance& u, const AcousticLayout& layout) {
  return assemble_targets(layout, u.mcc, u.bap, u.log_f0, u.vuv);
}

std::vector<Sequence> normalize_split(const std::vector<Utterance>& split,
                                      const DataNormalization& norm) {
  std::vector<Sequence> out;
  out.reserve(split.size());
  for (const auto& u : split)
    out.push_back({u.id, norm.linguistic.apply(u.linguistic),
                   norm.acoustic.apply(raw_targets(u, norm.layout))});
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(10);
  return out;
}

}  // namespace

PreparedData prepare_data(const Corpus& corpus) {
  require(!corpus.train.empty(), "corpus has no training utterances");
  PreparedData data;
  DataNormalization& norm = data.norm;
  norm.layout = corpus.config.layout;

  std::vector<Matrix> ling;
  std::vector<Matrix> targets;
  for (const auto& u : corpus.train) {
    ling.push_back(u.linguistic);
    targets.push_back(raw_targets(u, norm.layout));
  }
  norm.linguistic = minmax_fit(ling);
  norm.acoustic = meanvar_fit(targets);
  norm.global_variances = Vector::Zero(norm.layout.target_dim());
  for (Index d = 0; d < norm.global_variances.size(); ++d) {
    if (!norm.acoustic.degenerate[static_cast<std::size_t>(d)])
      norm.global_variances[d] = norm.acoustic.stddev[d] * norm.acoustic.stddev[d];
  }

  data.train = normalize_split(corpus.train, norm);
  data.dev = normalize_split(corpus.dev, norm);
  data.test = normalize_split(corpus.test, norm);
  return data;
}

MetricReport evaluate_generation(const Model& model, std::span<const Utterance> set) {
  require(!set.empty(), "evaluation set is empty");
  MetricAccumulator acc;
  for (const auto& u : set) {
    const GeneratedUtterance g = pipeline_generate(model, u.linguistic);
    const Index m = u.mcc.cols();
    require(m >= 2, "MCD needs at least two cepstral coefficients");
    acc.add(u.mcc.rightCols(m - 1), g.mcc.rightCols(m - 1), u.bap, g.bap, u.f0_hz(), g.f0_hz,
            u.vuv, g.vuv);
  }
  return acc.report();
}

namespace {

SystemRun finish_system(const PreparedData& data, const Corpus& corpus, CellKind kind,
                        std::uint64_t seed, double learning_rate, TrainResult trained) {
  SystemRun run;
  run.kind = kind;
  run.seed = seed;
  run.learning_rate = learning_rate;
  run.trained = std::move(trained);
  run.trained.model.normalization = data.norm;
  run.test_mse = evaluate(run.trained.model, data.test, data.norm.layout);
  run.test_metrics = evaluate_generation(run.trained.model, corpus.test);
  return run;
}

}  // namespace

SystemRun run_system(const LabConfig& config, const PreparedData& data, const Corpus& corpus,
                     CellKind kind, std::uint64_t seed, double learning_rate) {
  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.learning_rate = learning_rate;
  return finish_system(data, corpus, kind, seed, learning_rate,
                       train(config.network(kind), tc, data.train, data.dev));
}

AblationResult run_ablation(const LabConfig& config, const Corpus& corpus,
                            const ProgressFn& progress) {
  config.validate();
  require(corpus.config.linguistic_dim() == config.corpus.linguistic_dim() &&
              corpus.config.layout == config.corpus.layout,
          "corpus shape does not match the config");
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  const PreparedData data = prepare_data(corpus);
  const auto& seeds = config.ablate.seeds;
  const auto& rates = config.ablate.learning_rates;

  AblationResult result;
  for (CellKind kind : kAllCellKinds) {
    const std::string name(to_string(kind));
    double lr = rates.front();
    // A search run with the full epoch budget is exactly the first seed's run.
    std::optional<TrainResult> reuse;
    if (rates.size() > 1) {
      TrainConfig tc = config.train;
      tc.seed = seeds.front();
      const bool full = config.ablate.search_epochs <= 0;
      if (!full) tc.max_epochs = config.ablate.search_epochs;
      LearningRateSearch search =
          select_learning_rate(config.network(kind), tc, rates, data.train, data.dev);
      lr = search.best_learning_rate;
      if (full) reuse = std::move(search.best);
      std::ostringstream os;
      os << name << ": learning rate " << lr << " selected";
      say(os.str());
    }
    result.learning_rates[kind] = lr;
    for (std::uint64_t seed : seeds) {
      SystemRun run;
      if (reuse && seed == seeds.front()) {
        run = finish_system(data, corpus, kind, seed, lr, std::move(*reuse));
        reuse.reset();
      } else {
        run = run_system(config, data, corpus, kind, seed, lr);
      }
      std::ostringstream os;
      os << name << " seed " << seed << ": best epoch " << run.trained.best_epoch
         << ", dev MSE " << run.trained.best_dev_mse << ", test MCD "
         << run.test_metrics.mcd_db << " dB";
      say(os.str());
      result.runs.push_back(std::move(run));
    }
  }

  std::vector<Model> models;
  std::vector<Matrix> inputs;
  for (const auto& run : result.runs)
    if (run.seed == seeds.front()) models.push_back(run.trained.model);
  for (const auto& s : data.test) inputs.push_back(s.inputs);
  result.bench = bench_generation(models, inputs, config.ablate.bench_repeats);

  for (std::size_t k = 0; k < kAllCellKinds.size(); ++k) {
    const CellKind kind = kAllCellKinds[k];
    std::vector<double> mcd, bap, f0, vuv;
    for (const auto& run : result.runs) {
      if (run.kind != kind) continue;
      mcd.push_back(run.test_metrics.mcd_db);
      bap.push_back(run.test_metrics.bap_db);
      f0.push_back(run.test_metrics.f0_rmse_hz);
      vuv.push_back(run.test_metrics.vuv_error_pct);
    }
    AblationRow row;
    row.kind = kind;
    row.median.mcd_db = median(mcd);
    row.median.bap_db = median(bap);
    row.median.f0_rmse_hz = median(f0);
    row.median.vuv_error_pct = median(vuv);
    row.params = param_count(config.network(kind).recurrent_spec());
    row.generation_seconds = result.bench[k].median_seconds;
    result.rows.push_back(row);
  }
  return result;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
  auto out = open_csv(path);
  out << "system,mcd_db,bap_db,f0_rmse_hz,vuv_error_pct,params,gen_time_s\n";
  for (const auto& r : rows)
    out << to_string(r.kind) << ',' << r.median.mcd_db << ',' << r.median.bap_db << ','
        << r.median.f0_rmse_hz << ',' << r.median.vuv_error_pct << ',' << r.params << ','
        << r.generation_seconds << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_runs_csv(const std::string& path, const std::vector<SystemRun>& runs) {
  auto out = open_csv(path);
  out << "system,seed,lr,best_epoch,dev_mse,test_mse,mcd_db,bap_db,f0_rmse_hz,vuv_error_pct\n";
  for (const auto& r : runs)
    out << to_string(r.kind) << ',' << r.seed << ',' << r.learning_rate << ','
        << r.trained.best_epoch << ',' << r.trained.best_dev_mse << ',' << r.test_mse.total
        << ',' << r.test_metrics.mcd_db << ',' << r.test_metrics.bap_db << ','
        << r.test_metrics.f0_rmse_hz << ',' << r.test_metrics.vuv_error_pct << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  auto out = open_csv(path);
  out << "system,params,median_s,ratio_to_lstm\n";
  for (const auto& r : rows)
    out << to_string(r.kind) << ',' << r.recurrent_params << ',' << r.median_seconds << ','
        << r.ratio_to_reference << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::string make_run_dir(std::uint64_t seed) {
  const char* env = std::getenv("GATEDRNN_RUN_ROOT");
  const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream name;
  name << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-seed" << seed;
  fs::path dir = root / name.str();
  for (int k = 2; fs::exists(dir); ++k) dir = root / (name.str() + "-" + std::to_string(k));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir.string();
}

void write_run_manifest(const std::string& path, const RunManifest& m) {
  auto check = [](const std::string& p) {
    if (!fs::exists(p)) throw IoError("run manifest references a missing file: " + p);
    return p;
  };
  nlohmann::ordered_json j;
  j["tool_version"] = m.tool_version;
  j["config"] = m.config_text;
  j["seeds"] = m.seeds;
  nlohmann::ordered_json ckpt = nlohmann::ordered_json::object();
  for (const auto& [name, p] : m.checkpoints) ckpt[name] = check(p);
  j["checkpoints"] = ckpt;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::array();
  for (const auto& p : m.metric_csvs) metrics.push_back(check(p));
  j["metric_csvs"] = metrics;
  j["timing_csv"] = m.timing_csv.empty() ? std::string() : check(m.timing_csv);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace gatedrnn
