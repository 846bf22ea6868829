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

#include "gatedrnn/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "gatedrnn/backprop.hpp"
#include "gatedrnn/binary_io.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {

namespace {

std::vector<std::span<double>> tensors(NetworkWeights& w) {
  std::vector<std::span<double>> out;
  w.for_each_tensor([&](std::span<double> s) { out.push_back(s); });
  return out;
}

std::vector<std::span<const double>> tensors(const NetworkWeights& w) {
  std::vector<std::span<const double>> out;
  w.for_each_tensor([&](std::span<const double> s) { out.push_back(s); });
  return out;
}

template <typename Scalar>
void check_input_shape(const BasicNetworkWeights<Scalar>& w, const MatrixT<Scalar>& inputs) {
  require(!w.feature_layers.empty(), "network has no feature layers");
  require(inputs.rows() >= 1, "network input needs at least one frame");
  require(inputs.cols() == w.feature_layers.front().weights.cols(),
          "network input width does not match linguistic_dim");
}

}  // namespace

CellSpec NetworkConfig::recurrent_spec() const {
  require(!ff_layer_sizes.empty(), "network needs at least one feature layer");
  return {cell_kind, ff_layer_sizes.back(), hidden_dim};
}

void NetworkConfig::validate() const {
  require(linguistic_dim >= 1, "network linguistic_dim must be >= 1");
  require(output_dim >= 1, "network output_dim must be >= 1");
  require(!ff_layer_sizes.empty(), "network needs at least one feature layer");
  for (Index s : ff_layer_sizes) require(s >= 1, "feature layer sizes must be >= 1");
  recurrent_spec().validate();
}

NetworkConfig NetworkConfig::desk(Index linguistic_dim, Index output_dim, CellKind kind) {
  return {linguistic_dim, {64, 64, 64}, kind, 32, output_dim};
}

NetworkConfig NetworkConfig::full(Index linguistic_dim, Index output_dim, CellKind kind) {
  return {linguistic_dim, {512, 512, 512}, kind, 256, output_dim};
}

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          "learning_rate must be finite and non-negative");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(!grad_clip_norm || *grad_clip_norm > 0.0, "grad_clip_norm must be positive");
  require(init_scale > 0.0, "init_scale must be positive");
}

NetworkWeights zero_weights(const NetworkConfig& config) {
  config.validate();
  NetworkWeights w;
  Index in = config.linguistic_dim;
  for (Index size : config.ff_layer_sizes) {
    w.feature_layers.push_back({Matrix::Zero(size, in), Vector::Zero(size)});
    in = size;
  }
  w.recurrent = CellParams(config.recurrent_spec());
  w.output = {Matrix::Zero(config.output_dim, config.hidden_dim), Vector::Zero(config.output_dim)};
  return w;
}

Model init_model(const NetworkConfig& config, std::uint64_t seed, double scale) {
  require(scale > 0.0, "init scale must be positive");
  Model m;
  m.config = config;
  m.weights = zero_weights(config);
  Rng rng(seed);
  auto fill = [&](Matrix& w) {
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-scale, scale);
  };
  for (auto& l : m.weights.feature_layers) fill(l.weights);
  m.weights.recurrent = init_params(config.recurrent_spec(), rng.fork(), scale);
  fill(m.weights.output.weights);
  return m;
}

template <typename Scalar>
MatrixT<Scalar> forward(const BasicNetworkWeights<Scalar>& weights, const MatrixT<Scalar>& inputs) {
  check_input_shape(weights, inputs);
  MatrixT<Scalar> a = inputs.transpose();
  for (const auto& l : weights.feature_layers) {
    MatrixT<Scalar> z = l.weights * a;
    z.colwise() += l.bias;
    a = z.array().tanh().matrix();
  }
  const auto tr = run_sequence(weights.recurrent, a);
  MatrixT<Scalar> y = weights.output.weights * tr.hidden;
  y.colwise() += weights.output.bias;
  return y.transpose();
}

template MatrixT<double> forward(const BasicNetworkWeights<double>&, const MatrixT<double>&);
template MatrixT<long double> forward(const BasicNetworkWeights<long double>&,
                                      const MatrixT<long double>&);

Matrix forward(const Model& model, const Matrix& inputs) { return forward(model.weights, inputs); }

ForwardTrace forward_traced(const NetworkWeights& weights, const Matrix& inputs) {
  check_input_shape(weights, inputs);
  ForwardTrace out;
  Matrix a = inputs.transpose();
  for (const auto& l : weights.feature_layers) {
    Matrix z;
    z.noalias() = l.weights * a;
    z.colwise() += l.bias;
    a = z.array().tanh().matrix();
    out.feature_activations.push_back(a);
  }
  out.recurrent = run_sequence(weights.recurrent, a);
  Matrix y;
  y.noalias() = weights.output.weights * out.recurrent.hidden;
  y.colwise() += weights.output.bias;
  out.predictions = y.transpose();
  return out;
}

template <typename Scalar>
Scalar sequence_loss(const BasicNetworkWeights<Scalar>& weights, const MatrixT<Scalar>& inputs,
                     const MatrixT<Scalar>& targets) {
  const MatrixT<Scalar> y = forward(weights, inputs);
  require(targets.rows() == y.rows() && targets.cols() == y.cols(),
          "targets do not match the network output shape");
  return Scalar(0.5) * (y - targets).squaredNorm() / static_cast<Scalar>(y.rows());
}

template double sequence_loss(const BasicNetworkWeights<double>&, const MatrixT<double>&,
                              const MatrixT<double>&);
template long double sequence_loss(const BasicNetworkWeights<long double>&,
                                   const MatrixT<long double>&, const MatrixT<long double>&);

LossGradient loss_and_gradient(const NetworkWeights& weights, const Sequence& sequence) {
  const ForwardTrace fw = forward_traced(weights, sequence.inputs);
  require(sequence.targets.rows() == fw.predictions.rows() &&
              sequence.targets.cols() == fw.predictions.cols(),
          "targets do not match the network output shape");
  const Index steps = sequence.inputs.rows();
  const double inv_t = 1.0 / static_cast<double>(steps);

  LossGradient out;
  const Matrix residual = (fw.predictions - sequence.targets).transpose();  // O x T
  out.squared_error = residual.squaredNorm();
  out.loss = 0.5 * out.squared_error * inv_t;

  NetworkWeights& g = out.gradient;
  const Matrix dy = residual * inv_t;
  g.output.weights.noalias() = dy * fw.recurrent.hidden.transpose();
  g.output.bias = dy.rowwise().sum();

  const Matrix dh = weights.output.weights.transpose() * dy;
  const Matrix& rec_in = fw.feature_activations.back();
  CellGradients cg = sequence_backward(weights.recurrent, rec_in, fw.recurrent, dh);
  g.recurrent = std::move(cg.params);

  const std::size_t layers = weights.feature_layers.size();
  g.feature_layers.resize(layers);
  Matrix da = std::move(cg.inputs);
  const Matrix inputs_t = sequence.inputs.transpose();
  for (std::size_t k = layers; k-- > 0;) {
    const Matrix& act = fw.feature_activations[k];
    const Matrix dz = (da.array() * (1.0 - act.array().square())).matrix();
    const Matrix& below = k == 0 ? inputs_t : fw.feature_activations[k - 1];
    g.feature_layers[k].weights.noalias() = dz * below.transpose();
    g.feature_layers[k].bias = dz.rowwise().sum();
    if (k > 0) da.noalias() = weights.feature_layers[k].weights.transpose() * dz;
  }
  return out;
}

void sgd_momentum_update(NetworkWeights& weights, NetworkWeights& velocity,
                         const NetworkWeights& gradient, double learning_rate, double momentum) {
  auto w = tensors(weights);
  auto v = tensors(velocity);
  const auto g = tensors(gradient);
  require(w.size() == v.size() && w.size() == g.size(), "optimizer state shape mismatch");
  for (std::size_t k = 0; k < w.size(); ++k) {
    require(w[k].size() == v[k].size() && w[k].size() == g[k].size(),
            "optimizer state shape mismatch");
    for (std::size_t i = 0; i < w[k].size(); ++i) {
      v[k][i] = momentum * v[k][i] - learning_rate * g[k][i];
      w[k][i] += v[k][i];
    }
  }
}

double clip_gradient(NetworkWeights& gradient, double max_norm) {
  double sq = 0.0;
  gradient.for_each_tensor([&](std::span<const double> s) {
    for (double x : s) sq += x * x;
  });
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    gradient.for_each_tensor([&](std::span<double> s) {
      for (double& x : s) x *= scale;
    });
  }
  return norm;
}

double mean_squared_error(const NetworkWeights& weights, std::span<const Sequence> set) {
  require(!set.empty(), "evaluation set is empty");
  double sse = 0.0;
  double count = 0.0;
  for (const auto& s : set) {
    const Matrix y = forward(weights, s.inputs);
    require(s.targets.rows() == y.rows() && s.targets.cols() == y.cols(),
            "targets do not match the network output shape");
    sse += (y - s.targets).squaredNorm();
    count += static_cast<double>(y.size());
  }
  return sse / count;
}

TrainResult train(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                  std::span<const Sequence> train_set, std::span<const Sequence> dev_set) {
  net_cfg.validate();
  train_cfg.validate();
  require(!train_set.empty(), "training set is empty");
  require(!dev_set.empty(), "development set is empty");

  TrainResult result;
  result.model = init_model(net_cfg, train_cfg.seed, train_cfg.init_scale);
  NetworkWeights& weights = result.model.weights;
  NetworkWeights velocity = zero_weights(net_cfg);
  NetworkWeights best = weights;
  result.best_dev_mse = std::numeric_limits<double>::infinity();

  Rng rng(train_cfg.seed ^ 0x5deece66dULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto diverged = [&](int epoch) {
    std::ostringstream os;
    os << "training diverged at epoch " << epoch << " (learning rate "
       << train_cfg.learning_rate << ", cell " << to_string(net_cfg.cell_kind) << ")";
    return NumericalError(os.str());
  };

  int since_best = 0;
  for (int epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[rng.below(k)]);

    double sse = 0.0;
    double count = 0.0;
    for (std::size_t idx : order) {
      LossGradient lg = loss_and_gradient(weights, train_set[idx]);
      if (!std::isfinite(lg.loss)) throw diverged(epoch);
      sse += lg.squared_error;
      count += static_cast<double>(train_set[idx].targets.size());
      if (train_cfg.grad_clip_norm) clip_gradient(lg.gradient, *train_cfg.grad_clip_norm);
      sgd_momentum_update(weights, velocity, lg.gradient, train_cfg.learning_rate,
                          train_cfg.momentum);
    }
    const double dev = mean_squared_error(weights, dev_set);
    if (!std::isfinite(dev)) throw diverged(epoch);
    result.history.push_back({epoch, sse / count, dev, train_cfg.learning_rate});

    if (dev < result.best_dev_mse) {
      result.best_dev_mse = dev;
      result.best_epoch = epoch;
      best = weights;
      since_best = 0;
    } else if (++since_best >= train_cfg.patience) {
      break;
    }
  }
  weights = std::move(best);
  return result;
}

LearningRateSearch select_learning_rate(const NetworkConfig& net_cfg, TrainConfig train_cfg,
                                        std::span<const double> grid,
                                        std::span<const Sequence> train_set,
                                        std::span<const Sequence> dev_set) {
  require(!grid.empty(), "learning-rate grid is empty");
  LearningRateSearch search;
  double best = std::numeric_limits<double>::infinity();
  for (double lr : grid) {
    train_cfg.learning_rate = lr;
    try {
      TrainResult r = train(net_cfg, train_cfg, train_set, dev_set);
      search.dev_mse_by_rate.emplace_back(lr, r.best_dev_mse);
      if (r.best_dev_mse < best) {
        best = r.best_dev_mse;
        search.best_learning_rate = lr;
        search.best = std::move(r);
      }
    } catch (const NumericalError&) {
      search.dev_mse_by_rate.emplace_back(lr, std::numeric_limits<double>::infinity());
    }
  }
  if (!std::isfinite(best))
    throw NumericalError("every learning rate in the grid diverged for " +
                         std::string(to_string(net_cfg.cell_kind)));
  return search;
}

EvalReport mse_report(std::span<const Matrix> predictions, std::span<const Matrix> targets,
                      const AcousticLayout& layout) {
  require(predictions.size() == targets.size() && !predictions.empty(),
          "mse_report needs matching, non-empty prediction and target lists");
  const Index mcc_w = 3 * layout.mcc_dim;
  const Index bap_w = 3 * layout.bap_dim;
  double mcc = 0, bap = 0, lf0 = 0, vuv = 0, total = 0;
  Index frames = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const Matrix& p = predictions[k];
    const Matrix& t = targets[k];
    require(p.rows() == t.rows() && p.cols() == t.cols() && p.cols() == layout.target_dim(),
            "prediction/target shape mismatch");
    const Matrix sq = (p - t).array().square().matrix();
    mcc += sq.middleCols(layout.mcc_offset(), mcc_w).sum();
    bap += sq.middleCols(layout.bap_offset(), bap_w).sum();
    lf0 += sq.middleCols(layout.lf0_offset(), 3).sum();
    vuv += sq.col(layout.vuv_offset()).sum();
    total += sq.sum();
    frames += p.rows();
  }
  const double n = static_cast<double>(frames);
  EvalReport r;
  r.mcc = mcc / (n * static_cast<double>(mcc_w));
  r.bap = bap / (n * static_cast<double>(bap_w));
  r.lf0 = lf0 / (n * 3.0);
  r.vuv = vuv / n;
  r.total = total / (n * static_cast<double>(layout.target_dim()));
  r.frames = frames;
  return r;
}

EvalReport evaluate(const Model& model, std::span<const Sequence> set,
                    const AcousticLayout& layout) {
  require(!set.empty(), "evaluation set is empty");
  std::vector<Matrix> preds;
  std::vector<Matrix> targets;
  for (const auto& s : set) {
    preds.push_back(forward(model, s.inputs));
    targets.push_back(s.targets);
  }
  return mse_report(preds, targets, layout);
}

std::vector<BenchRow> bench_generation(std::span<const Model> models,
                                       std::span<const Matrix> inputs, int repeats) {
  require(models.size() >= 2, "bench_generation needs at least two models");
  require(!inputs.empty(), "bench_generation needs at least one utterance");
  require(repeats >= 3, "bench_generation needs at least three repeats");
  using Clock = std::chrono::steady_clock;

  std::vector<BenchRow> rows(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    rows[m].kind = models[m].config.cell_kind;
    rows[m].recurrent_params = param_count(models[m].config.recurrent_spec());
  }
  double sink = 0.0;
  // Warm-up pass so the first timed model does not pay for cold caches.
  for (const auto& model : models) sink += forward(model, inputs.front())(0, 0);
  for (int r = 0; r < repeats; ++r) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto start = Clock::now();
      for (const auto& x : inputs) sink += forward(models[m], x)(0, 0);
      rows[m].runs.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
  }
  for (auto& row : rows) {
    std::vector<double> sorted = row.runs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    row.median_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  std::size_t ref = 0;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (rows[m].kind == CellKind::kVanillaLstm) {
      ref = m;
      break;
    }
  }
  for (auto& row : rows) row.ratio_to_reference = row.median_seconds / rows[ref].median_seconds;
  if (!std::isfinite(sink)) rows.front().runs.push_back(sink);
  return rows;
}

namespace {

constexpr std::string_view kModelMagic = "GRNM";

void write_dense(BinaryWriter& w, const DenseLayer& l) {
  w.matrix(l.weights);
  w.vector(l.bias);
}

DenseLayer read_dense(BinaryReader& r, Index rows, Index cols) {
  DenseLayer l{r.matrix(), r.vector()};
  if (l.weights.rows() != rows || l.weights.cols() != cols || l.bias.size() != rows)
    throw IoError("model checkpoint: layer shape disagrees with the config");
  return l;
}

void write_flags(BinaryWriter& w, const std::vector<std::uint8_t>& flags) {
  w.u64(flags.size());
  for (auto f : flags) w.u32(f);
}

std::vector<std::uint8_t> read_flags(BinaryReader& r) {
  const std::uint64_t n = r.u64();
  if (n > (1u << 24)) throw IoError("model checkpoint: implausible flag count");
  std::vector<std::uint8_t> flags(n);
  for (auto& f : flags) f = static_cast<std::uint8_t>(r.u32());
  return flags;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const NetworkConfig& c = model.config;
  BinaryWriter w(out);
  w.magic(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u64(static_cast<std::uint64_t>(c.linguistic_dim));
  w.u64(c.ff_layer_sizes.size());
  for (Index s : c.ff_layer_sizes) w.u64(static_cast<std::uint64_t>(s));
  w.u32(static_cast<std::uint32_t>(c.cell_kind));
  w.u64(static_cast<std::uint64_t>(c.hidden_dim));
  w.u64(static_cast<std::uint64_t>(c.output_dim));
  for (const auto& l : model.weights.feature_layers) write_dense(w, l);
  write_cell_params(out, model.weights.recurrent);
  write_dense(w, model.weights.output);

  w.u32(model.normalization ? 1 : 0);
  if (model.normalization) {
    const DataNormalization& n = *model.normalization;
    w.vector(n.linguistic.min);
    w.vector(n.linguistic.max);
    w.f64(n.linguistic.lo);
    w.f64(n.linguistic.hi);
    w.vector(n.acoustic.mean);
    w.vector(n.acoustic.stddev);
    write_flags(w, n.acoustic.degenerate);
    w.vector(n.global_variances);
    w.u64(static_cast<std::uint64_t>(n.layout.mcc_dim));
    w.u64(static_cast<std::uint64_t>(n.layout.bap_dim));
  }
}

Model read_model(std::istream& in) {
  BinaryReader r(in, "model checkpoint");
  r.expect_magic(kModelMagic);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw IoError("model checkpoint: unsupported format version " + std::to_string(version));
  Model m;
  NetworkConfig& c = m.config;
  c.linguistic_dim = static_cast<Index>(r.u64());
  const std::uint64_t layers = r.u64();
  if (layers == 0 || layers > 64) throw IoError("model checkpoint: implausible layer count");
  c.ff_layer_sizes.clear();
  for (std::uint64_t k = 0; k < layers; ++k) c.ff_layer_sizes.push_back(static_cast<Index>(r.u64()));
  const std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(CellKind::kSlstm))
    throw IoError("model checkpoint: unknown cell kind");
  c.cell_kind = static_cast<CellKind>(kind);
  c.hidden_dim = static_cast<Index>(r.u64());
  c.output_dim = static_cast<Index>(r.u64());
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw IoError(std::string("model checkpoint: ") + e.what());
  }

  Index in_dim = c.linguistic_dim;
  for (Index size : c.ff_layer_sizes) {
    m.weights.feature_layers.push_back(read_dense(r, size, in_dim));
    in_dim = size;
  }
  m.weights.recurrent = read_cell_params(in);
  if (!(m.weights.recurrent.spec() == c.recurrent_spec()))
    throw IoError("model checkpoint: recurrent layer disagrees with the config");
  m.weights.output = read_dense(r, c.output_dim, c.hidden_dim);

  if (r.u32() != 0) {
    DataNormalization n;
    n.linguistic.min = r.vector();
    n.linguistic.max = r.vector();
    n.linguistic.lo = r.f64();
    n.linguistic.hi = r.f64();
    n.acoustic.mean = r.vector();
    n.acoustic.stddev = r.vector();
    n.acoustic.degenerate = read_flags(r);
    n.global_variances = r.vector();
    n.layout.mcc_dim = static_cast<Index>(r.u64());
    n.layout.bap_dim = static_cast<Index>(r.u64());
    m.normalization = std::move(n);
  }
  return m;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  write_model(out, model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_model(in);
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,train_mse,dev_mse,lr\n" << std::setprecision(17);
  for (const auto& e : history)
    out << e.epoch << ',' << e.train_mse << ',' << e.dev_mse << ',' << e.learning_rate << '\n';
}

}  // namespace gatedrnn
