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

// gatedrnn: command-line front end for corpus generation, training,
// generation, evaluation, analysis and benchmarking.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gatedrnn/analysis.hpp"
#include "gatedrnn/backprop.hpp"
#include "gatedrnn/config.hpp"
#include "gatedrnn/corpus.hpp"
#include "gatedrnn/experiment.hpp"
#include "gatedrnn/metrics.hpp"
#include "gatedrnn/mlpg.hpp"
#include "gatedrnn/network.hpp"
#include "gatedrnn/version.hpp"

namespace fs = std::filesystem;
using namespace gatedrnn;

namespace {

// Name of the step in progress, reported with any failure.
std::string g_stage = "startup";

void stage(std::string name) { g_stage = std::move(name); }

struct Common {
  std::string config_path;
  std::string corpus_dir;
};

LabConfig load_config(const Common& c) {
  stage("reading config");
  return c.config_path.empty() ? LabConfig{} : load_lab_config(c.config_path);
}

Corpus obtain_corpus(const Common& c, const LabConfig& cfg) {
  if (!c.corpus_dir.empty()) {
    stage("loading corpus");
    return load_corpus(c.corpus_dir);
  }
  stage("generating corpus");
  return gen_corpus(cfg.corpus);
}

const std::vector<Utterance>& pick_split(const Corpus& corpus, const std::string& split) {
  if (split == "train") return corpus.train;
  if (split == "dev") return corpus.dev;
  if (split == "test") return corpus.test;
  throw ValidationError("unknown split '" + split + "' (train, dev or test)");
}

const Utterance& find_utterance(const Corpus& corpus, const std::string& id) {
  for (const auto* split : {&corpus.train, &corpus.dev, &corpus.test})
    for (const auto& u : *split)
      if (u.id == id) return u;
  throw ValidationError("no utterance named '" + id + "' in the corpus");
}

GateRole parse_gate(const std::string& name) {
  for (std::size_t r = 0; r < kGateRoleCount; ++r) {
    const auto role = static_cast<GateRole>(r);
    if (name == to_string(role)) return role;
  }
  throw ValidationError("unknown gate '" + name + "'");
}

void print_metric_row(std::ostream& os, const std::string& name, const MetricReport& m) {
  os << std::setprecision(10) << name << ',' << m.mcd_db << ',' << m.bap_db << ','
     << m.f0_rmse_hz << ',' << m.vuv_error_pct << ',' << m.mcd_frames << '\n';
}

// ---- subcommands ---------------------------------------------------------

int cmd_gen_corpus(const Common& c, const std::string& out, std::optional<std::uint64_t> seed) {
  LabConfig cfg = load_config(c);
  if (seed) cfg.corpus.seed = *seed;
  cfg.corpus.validate();
  stage("generating corpus");
  const Corpus corpus = gen_corpus(cfg.corpus);
  stage("writing corpus");
  save_corpus(corpus, out);
  std::cout << "wrote " << corpus.train.size() << '/' << corpus.dev.size() << '/'
            << corpus.test.size() << " utterances to " << out << '\n';
  return 0;
}

struct TrainArgs {
  std::string cell = "lstm";
  std::string out;
  std::string history;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  bool search = false;
};

int cmd_train(const Common& c, const TrainArgs& a) {
  LabConfig cfg = load_config(c);
  if (a.lr) cfg.train.learning_rate = *a.lr;
  if (a.epochs) cfg.train.max_epochs = *a.epochs;
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.validate();
  const CellKind kind = parse_cell_kind(a.cell);
  const Corpus corpus = obtain_corpus(c, cfg);
  stage("normalizing data");
  const PreparedData data = prepare_data(corpus);
  const NetworkConfig net = cfg.network(kind);

  stage("training");
  TrainResult result;
  if (a.search) {
    LearningRateSearch s =
        select_learning_rate(net, cfg.train, cfg.ablate.learning_rates, data.train, data.dev);
    for (const auto& [lr, mse] : s.dev_mse_by_rate)
      std::cout << "lr " << lr << ": dev MSE " << mse << '\n';
    result = std::move(s.best);
  } else {
    result = train(net, cfg.train, data.train, data.dev);
  }
  result.model.normalization = data.norm;
  std::cout << to_string(kind) << ": best epoch " << result.best_epoch << ", dev MSE "
            << result.best_dev_mse << '\n';

  stage("writing checkpoint");
  save_model(a.out, result.model);
  if (!a.history.empty()) write_history_csv(a.history, result.history);
  return 0;
}

int cmd_synth(const Common& c, const std::string& model_path, const std::string& split,
              const std::string& out) {
  LabConfig cfg = load_config(c);
  stage("loading model");
  const Model model = load_model(model_path);
  const Corpus corpus = obtain_corpus(c, cfg);
  stage("generating");
  fs::create_directories(out);
  for (const auto& u : pick_split(corpus, split)) {
    const GeneratedUtterance g = pipeline_generate(model, u.linguistic);
    const std::string base = (fs::path(out) / u.id).string();
    write_feature_file(base + ".mcc.bin", g.mcc);
    write_feature_file(base + ".bap.bin", g.bap);
    Matrix f0(g.f0_hz.size(), 2);
    f0.col(0) = g.f0_hz;
    for (Index t = 0; t < f0.rows(); ++t) f0(t, 1) = g.vuv[static_cast<std::size_t>(t)];
    write_feature_file(base + ".f0.bin", f0);
    write_feature_sidecar(base + ".f0.bin", f0.rows(), 2, {{"f0_hz", 0, 1}, {"vuv", 1, 1}});
  }
  std::cout << "generated " << pick_split(corpus, split).size() << " utterances into " << out
            << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::vector<std::string>& model_paths,
             const std::string& split) {
  LabConfig cfg = load_config(c);
  const Corpus corpus = obtain_corpus(c, cfg);
  const auto& set = pick_split(corpus, split);
  std::cout << "model,mcd_db,bap_db,f0_rmse_hz,vuv_pct,frames\n";
  for (const auto& path : model_paths) {
    stage("loading model " + path);
    const Model model = load_model(path);
    stage("evaluating " + path);
    print_metric_row(std::cout, std::filesystem::path(path).stem().string(),
                     evaluate_generation(model, set));
  }
  return 0;
}

struct GradArgs {
  bool all = false;
  std::string cell = "lstm";
  int instances = 3;
  Index input = 4;
  Index hidden = 5;
  int steps = 6;
};

int cmd_gradcheck(const GradArgs& a) {
  stage("gradient check");
  std::vector<CellKind> kinds;
  if (a.all) kinds.assign(kAllCellKinds.begin(), kAllCellKinds.end());
  else kinds.push_back(parse_cell_kind(a.cell));
  require(a.instances >= 1, "--instances must be >= 1");
  bool ok = true;
  for (CellKind kind : kinds) {
    double worst = 0.0;
    for (int s = 1; s <= a.instances; ++s)
      worst = std::max(worst, grad_check({kind, a.input, a.hidden}, static_cast<std::uint64_t>(s),
                                         1e-5, a.steps));
    const bool pass = worst < kGradCheckThreshold;
    ok = ok && pass;
    std::cout << std::left << std::setw(8) << to_string(kind) << std::scientific
              << std::setprecision(3) << worst << (pass ? "  ok" : "  FAIL") << '\n';
  }
  if (!ok) throw NumericalError("relative error above " + std::to_string(kGradCheckThreshold));
  return 0;
}

int cmd_params(Index in, Index hidden) {
  stage("counting parameters");
  for (CellKind kind : kAllCellKinds) {
    const CellSpec spec{kind, in, hidden};
    spec.validate();
    std::cout << std::left << std::setw(8) << to_string(kind) << param_count(spec) << '\n';
  }
  return 0;
}

struct TraceArgs {
  std::string model;
  std::string utterance;
  std::string gate = "forget";
  std::string out = ".";
  bool correlate = false;
  Index target_dim = 0;
};

int cmd_trace(const Common& c, const TraceArgs& a) {
  LabConfig cfg = load_config(c);
  stage("loading model");
  const Model model = load_model(a.model);
  require(model.normalization.has_value(), "model has no stored normalization statistics");
  const Corpus corpus = obtain_corpus(c, cfg);
  const Utterance& u = find_utterance(corpus, a.utterance);
  const DataNormalization& n = *model.normalization;

  stage("tracing");
  const ForwardTrace fw = forward_traced(model.weights, n.linguistic.apply(u.linguistic));
  fs::create_directories(a.out);
  const std::string stem = (fs::path(a.out) / (u.id + "." + a.gate)).string();
  const GateSeries series =
      mean_gate_activation(fw.recurrent, parse_gate(a.gate), u.id, u.boundaries);
  emit_gate_plot(series, stem);
  const BoundaryAlignment al = boundary_alignment(series);
  std::cout << "boundary mean " << al.boundary_mean << ", interior mean " << al.interior_mean
            << ", difference " << al.difference << ", peaks " << al.peaks.size()
            << (series.pinned ? " (gate pinned at 1)" : "") << '\n';

  if (a.correlate) {
    stage("correlating");
    require(has_memory_cell(model.config.cell_kind), "cell kind has no memory cell");
    const Matrix targets =
        n.acoustic.apply(assemble_targets(n.layout, u.mcc, u.bap, u.log_f0, u.vuv));
    require(a.target_dim >= 0 && a.target_dim < targets.cols(), "--target-dim out of range");
    const Matrix cells = fw.recurrent.cell.transpose();
    const CorrelationTable table = cell_target_correlation(cells, targets.col(a.target_dim));
    const std::string cstem =
        (fs::path(a.out) / (u.id + ".corr" + std::to_string(a.target_dim))).string();
    write_correlation_csv(table, cstem + ".table.csv");
    emit_correlation_plot(cells.col(table.argmax), targets.col(a.target_dim), table.argmax,
                          table.max_value, cstem);
    std::cout << "unit " << table.argmax << " r = " << table.max_value << '\n';
  }
  return 0;
}

struct BenchArgs {
  std::string scale = "full";
  int repeats = 3;
  int utterances = 8;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_bench(const Common& c, const BenchArgs& a) {
  LabConfig cfg = load_config(c);
  if (a.seed) cfg.train.seed = *a.seed;
  const Corpus corpus = obtain_corpus(c, cfg);
  stage("building models");
  require(a.utterances >= 1, "--utterances must be >= 1");
  const PreparedData data = prepare_data(corpus);
  std::vector<Matrix> inputs;
  for (const auto* split : {&data.test, &data.dev, &data.train})
    for (const auto& s : *split)
      if (static_cast<int>(inputs.size()) < a.utterances) inputs.push_back(s.inputs);

  std::vector<Model> models;
  for (CellKind kind : kAllCellKinds) {
    NetworkConfig net;
    if (a.scale == "full")
      net = NetworkConfig::full(cfg.corpus.linguistic_dim(), cfg.corpus.layout.target_dim(), kind);
    else if (a.scale == "desk")
      net = cfg.network(kind);
    else
      throw ValidationError("--scale must be full or desk");
    models.push_back(init_model(net, cfg.train.seed, cfg.train.init_scale));
  }
  stage("timing");
  const auto rows = bench_generation(models, inputs, a.repeats);
  std::cout << "system   params    median_s   ratio\n";
  for (const auto& r : rows)
    std::cout << std::left << std::setw(9) << to_string(r.kind) << std::setw(10)
              << r.recurrent_params << std::setw(11) << std::setprecision(4) << r.median_seconds
              << r.ratio_to_reference << '\n';
  if (!a.out.empty()) write_bench_csv(a.out, rows);
  return 0;
}

int cmd_ablate(const Common& c, std::optional<std::uint64_t> seed) {
  LabConfig cfg = load_config(c);
  if (seed) cfg.ablate.seeds = {*seed};
  cfg.validate();
  const Corpus corpus = obtain_corpus(c, cfg);
  stage("creating run directory");
  const std::string dir = make_run_dir(cfg.ablate.seeds.front());
  std::cout << "run directory " << dir << '\n';

  stage("ablation");
  const AblationResult res =
      run_ablation(cfg, corpus, [](const std::string& msg) { std::cout << msg << std::endl; });

  stage("writing results");
  RunManifest manifest;
  manifest.tool_version = kVersion;
  std::ostringstream cfg_text;
  write_lab_config(cfg_text, cfg);
  manifest.config_text = cfg_text.str();
  {
    std::ofstream echo(fs::path(dir) / "config.ini");
    echo << manifest.config_text;
  }
  manifest.seeds = cfg.ablate.seeds;
  fs::create_directories(fs::path(dir) / "models");
  for (const auto& run : res.runs) {
    const std::string name = std::string(to_string(run.kind)) + "_seed" + std::to_string(run.seed);
    const std::string ckpt = (fs::path(dir) / "models" / (name + ".grnm")).string();
    save_model(ckpt, run.trained.model);
    write_history_csv((fs::path(dir) / "models" / (name + ".history.csv")).string(),
                      run.trained.history);
    manifest.checkpoints[name] = ckpt;
  }
  const std::string table = (fs::path(dir) / "ablation.csv").string();
  const std::string runs = (fs::path(dir) / "runs.csv").string();
  const std::string timing = (fs::path(dir) / "timing.csv").string();
  write_ablation_csv(table, res.rows);
  write_runs_csv(runs, res.runs);
  write_bench_csv(timing, res.bench);
  manifest.metric_csvs = {table, runs};
  manifest.timing_csv = timing;
  write_run_manifest((fs::path(dir) / "manifest.json").string(), manifest);

  std::ifstream in(table);
  std::cout << in.rdbuf();
  return 0;
}

int cmd_mlpg(const std::string& in, const std::string& out) {
  stage("reading MLPG input");
  const Matrix m = read_feature_file(in);
  require(m.cols() % 6 == 0 && m.cols() > 0,
          "MLPG input needs 6D columns: 3D means followed by 3D variances");
  const Index w = m.cols() / 2;
  GenerationProblem p{m.leftCols(w), m.rightCols(w)};
  stage("solving MLPG");
  const Matrix traj = mlpg_solve(p);
  stage("writing trajectory");
  write_feature_file(out, traj);
  std::cout << "wrote " << traj.rows() << " x " << traj.cols() << " trajectory to " << out
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated recurrent cell lab: train, ablate and analyze LSTM variants"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool corpus = true) {
    sub->add_option("--config", common.config_path, "INI config file")->check(CLI::ExistingFile);
    if (corpus)
      sub->add_option("--corpus", common.corpus_dir,
                      "corpus directory (generated from the config when omitted)");
  };
  std::function<int()> run;

  auto* gen = app.add_subcommand("gen-corpus", "generate and save the synthetic corpus");
  add_common(gen, false);
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->callback([&] { run = [&] { return cmd_gen_corpus(common, gen_out, gen_seed); }; });

  auto* tr = app.add_subcommand("train", "train one system");
  add_common(tr);
  TrainArgs targs;
  tr->add_option("--cell", targs.cell, "LSTM, NIG, NOG, NFG, NPH, GRU or S-LSTM");
  tr->add_option("--out", targs.out, "checkpoint path")->required();
  tr->add_option("--history", targs.history, "training history CSV");
  tr->add_option("--lr", targs.lr, "learning rate");
  tr->add_option("--epochs", targs.epochs, "maximum epochs");
  tr->add_option("--seed", targs.seed, "training seed");
  tr->add_flag("--search", targs.search, "pick the learning rate from the config grid");
  tr->callback([&] { run = [&] { return cmd_train(common, targs); }; });

  auto* sy = app.add_subcommand("synth", "generate acoustic features with a trained model");
  add_common(sy);
  std::string sy_model, sy_split = "test", sy_out;
  sy->add_option("--model", sy_model, "checkpoint")->required();
  sy->add_option("--split", sy_split, "train, dev or test");
  sy->add_option("--out", sy_out, "output directory")->required();
  sy->callback([&] { run = [&] { return cmd_synth(common, sy_model, sy_split, sy_out); }; });

  auto* ev = app.add_subcommand("eval", "objective measures of a trained model");
  add_common(ev);
  std::vector<std::string> ev_models;
  std::string ev_split = "test";
  ev->add_option("--model", ev_models, "checkpoints, one CSV row each")->required();
  ev->add_option("--split", ev_split, "train, dev or test");
  ev->callback([&] { run = [&] { return cmd_eval(common, ev_models, ev_split); }; });

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every cell's BPTT");
  GradArgs gargs;
  gc->add_flag("--all", gargs.all, "check all seven kinds");
  gc->add_option("--cell", gargs.cell, "kind to check");
  gc->add_option("--instances", gargs.instances, "random instances per kind");
  gc->add_option("--input", gargs.input, "input width");
  gc->add_option("--hidden", gargs.hidden, "hidden units");
  gc->add_option("--steps", gargs.steps, "sequence length");
  gc->callback([&] { run = [&] { return cmd_gradcheck(gargs); }; });

  auto* pc = app.add_subcommand("params", "recurrent-layer parameter counts");
  Index p_in = 512, p_hidden = 256;
  pc->add_option("--in", p_in, "input width");
  pc->add_option("--hidden", p_hidden, "hidden units");
  pc->callback([&] { run = [&] { return cmd_params(p_in, p_hidden); }; });

  auto* tc = app.add_subcommand("trace", "gate activations and cell-state correlation");
  add_common(tc);
  TraceArgs trargs;
  tc->add_option("--model", trargs.model, "checkpoint")->required();
  tc->add_option("--utterance", trargs.utterance, "utterance id")->required();
  tc->add_option("--gate", trargs.gate, "input, forget, output, reset or update");
  tc->add_option("--out", trargs.out, "output directory");
  tc->add_flag("--correlate", trargs.correlate, "also correlate cell states with a target");
  tc->add_option("--target-dim", trargs.target_dim, "target column (normalized layout)");
  tc->callback([&] { run = [&] { return cmd_trace(common, trargs); }; });

  auto* bc = app.add_subcommand("bench", "forward-pass timing of all seven kinds");
  add_common(bc);
  BenchArgs bargs;
  bc->add_option("--scale", bargs.scale, "full (512-unit) or desk layer sizes");
  bc->add_option("--repeats", bargs.repeats, "timed repeats (>= 3)");
  bc->add_option("--utterances", bargs.utterances, "utterances per repeat");
  bc->add_option("--seed", bargs.seed, "weight seed");
  bc->add_option("--out", bargs.out, "timing CSV");
  bc->callback([&] { run = [&] { return cmd_bench(common, bargs); }; });

  auto* ab = app.add_subcommand("ablate", "train, evaluate and time all seven systems");
  add_common(ab);
  std::optional<std::uint64_t> ab_seed;
  ab->add_option("--seed", ab_seed, "single training seed instead of the config list");
  ab->callback([&] { run = [&] { return cmd_ablate(common, ab_seed); }; });

  auto* ml = app.add_subcommand("mlpg", "smooth a means/variances feature file");
  std::string ml_in, ml_out;
  ml->add_option("--in", ml_in, "feature file, T x 6D")->required();
  ml->add_option("--out", ml_out, "trajectory feature file")->required();
  ml->callback([&] { run = [&] { return cmd_mlpg(ml_in, ml_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return run();
  } catch (const ValidationError& e) {
    std::cerr << "gatedrnn: " << g_stage << ": " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "gatedrnn: " << g_stage << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gatedrnn: " << g_stage << ": " << e.what() << '\n';
    return 1;
  }
}
