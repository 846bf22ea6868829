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
#include <utility>
#include <vector>

#include "gatedrnn/cells.hpp"
#include "gatedrnn/common.hpp"
#include "gatedrnn/features.hpp"

namespace gatedrnn {

/// Feed-forward tanh feature layers, one gated recurrent layer and an affine
/// output layer.
struct NetworkConfig {
  Index linguistic_dim = 1;
  std::vector<Index> ff_layer_sizes{512, 512, 512};
  CellKind cell_kind = CellKind::kVanillaLstm;
  Index hidden_dim = 256;
  Index output_dim = 1;

  CellSpec recurrent_spec() const;
  void validate() const;

  /// ff [64, 64, 64], 32 recurrent units.
  static NetworkConfig desk(Index linguistic_dim, Index output_dim, CellKind kind);
  /// ff [512, 512, 512], 256 recurrent units.
  static NetworkConfig full(Index linguistic_dim, Index output_dim, CellKind kind);

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 3e-3;
  double momentum = 0.9;
  int max_epochs = 30;
  int patience = 5;
  std::optional<double> grad_clip_norm = 5.0;
  std::uint64_t seed = 1;
  double init_scale = 0.1;

  void validate() const;
};

template <typename Scalar>
struct BasicDenseLayer {
  MatrixT<Scalar> weights;  // out x in
  VectorT<Scalar> bias;
};

template <typename Scalar>
struct BasicNetworkWeights {
  std::vector<BasicDenseLayer<Scalar>> feature_layers;
  BasicCellParams<Scalar> recurrent;
  BasicDenseLayer<Scalar> output;

  /// fn(std::span<Scalar>) per tensor: feature layers (W, b) bottom-up, the
  /// recurrent layer in its flat order, then the output layer (W, b).
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& l : feature_layers) {
      fn(std::span<Scalar>(l.weights.data(), l.weights.size()));
      fn(std::span<Scalar>(l.bias.data(), l.bias.size()));
    }
    recurrent.for_each_tensor(fn);
    fn(std::span<Scalar>(output.weights.data(), output.weights.size()));
    fn(std::span<Scalar>(output.bias.data(), output.bias.size()));
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    for (const auto& l : feature_layers) {
      fn(std::span<const Scalar>(l.weights.data(), l.weights.size()));
      fn(std::span<const Scalar>(l.bias.data(), l.bias.size()));
    }
    recurrent.for_each_tensor(fn);
    fn(std::span<const Scalar>(output.weights.data(), output.weights.size()));
    fn(std::span<const Scalar>(output.bias.data(), output.bias.size()));
  }

  template <typename Other>
  BasicNetworkWeights<Other> cast() const {
    BasicNetworkWeights<Other> out;
    for (const auto& l : feature_layers)
      out.feature_layers.push_back(
          {l.weights.template cast<Other>(), l.bias.template cast<Other>()});
    out.recurrent = recurrent.template cast<Other>();
    out.output = {output.weights.template cast<Other>(), output.bias.template cast<Other>()};
    return out;
  }

  std::int64_t size() const {
    std::int64_t n = 0;
    for_each_tensor([&](auto s) { n += static_cast<std::int64_t>(s.size()); });
    return n;
  }
};

using DenseLayer = BasicDenseLayer<double>;
using NetworkWeights = BasicNetworkWeights<double>;

/// Zero-filled weights shaped by the config.
NetworkWeights zero_weights(const NetworkConfig& config);

/// Statistics captured from the training set, needed to generate.
struct DataNormalization {
  MinMaxStats linguistic;
  MeanVarStats acoustic;
  Vector global_variances;  // per target dimension, unnormalized scale
  AcousticLayout layout;
};

struct Model {
  NetworkConfig config;
  NetworkWeights weights;
  std::optional<DataNormalization> normalization;
};

/// Uniform [-scale, scale] weights for every layer, zero biases except the
/// recurrent forget-gate bias (+1).
Model init_model(const NetworkConfig& config, std::uint64_t seed, double scale = 0.1);

/// Predictions (T x output_dim) for normalized inputs (T x linguistic_dim),
/// starting from a zero recurrent state.
Matrix forward(const Model& model, const Matrix& inputs);

template <typename Scalar>
MatrixT<Scalar> forward(const BasicNetworkWeights<Scalar>& weights, const MatrixT<Scalar>& inputs);

/// Everything the backward pass and the analyses need from one forward pass.
struct ForwardTrace {
  std::vector<Matrix> feature_activations;  // per ff layer, units x T
  SequenceTrace recurrent;
  Matrix predictions;  // T x output_dim
};

ForwardTrace forward_traced(const NetworkWeights& weights, const Matrix& inputs);

/// One normalized training pair.
struct Sequence {
  std::string id;
  Matrix inputs;   // T x linguistic_dim
  Matrix targets;  // T x output_dim
};

/// Per-utterance training loss (1/T) * sum_t 0.5 * |y_t - target_t|^2 and
/// its gradient with respect to every weight.
struct LossGradient {
  double loss = 0.0;
  double squared_error = 0.0;  // sum over frames and dims
  NetworkWeights gradient;
};

LossGradient loss_and_gradient(const NetworkWeights& weights, const Sequence& sequence);

template <typename Scalar>
Scalar sequence_loss(const BasicNetworkWeights<Scalar>& weights, const MatrixT<Scalar>& inputs,
                     const MatrixT<Scalar>& targets);

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double dev_mse = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  Model model;  // weights from the epoch with the best dev MSE
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_dev_mse = 0.0;
};

/// SGD with momentum, one utterance per update, shuffled each epoch.
/// Early-stops after `patience` epochs without dev improvement. Throws
/// NumericalError naming the epoch and learning rate on divergence.
TrainResult train(const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                  std::span<const Sequence> train_set, std::span<const Sequence> dev_set);

/// Applies one momentum update in place: v = mu * v - lr * g; w += v.
void sgd_momentum_update(NetworkWeights& weights, NetworkWeights& velocity,
                         const NetworkWeights& gradient, double learning_rate, double momentum);

/// Rescales the gradient so its global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradient(NetworkWeights& gradient, double max_norm);

struct LearningRateSearch {
  double best_learning_rate = 0.0;
  std::vector<std::pair<double, double>> dev_mse_by_rate;  // +inf when diverged
  TrainResult best;
};

/// Trains once per rate and keeps the lowest dev MSE.
LearningRateSearch select_learning_rate(const NetworkConfig& net_cfg, TrainConfig train_cfg,
                                        std::span<const double> grid,
                                        std::span<const Sequence> train_set,
                                        std::span<const Sequence> dev_set);

inline constexpr std::array<double, 4> kLearningRateGrid = {1e-2, 3e-3, 1e-3, 3e-4};

/// Frame-weighted MSE in normalized space per acoustic stream.
struct EvalReport {
  double mcc = 0.0;
  double bap = 0.0;
  double lf0 = 0.0;
  double vuv = 0.0;
  double total = 0.0;
  Index frames = 0;
};

EvalReport mse_report(std::span<const Matrix> predictions, std::span<const Matrix> targets,
                      const AcousticLayout& layout);
EvalReport evaluate(const Model& model, std::span<const Sequence> set,
                    const AcousticLayout& layout);
/// Total MSE only; works for any output layout.
double mean_squared_error(const NetworkWeights& weights, std::span<const Sequence> set);

struct BenchRow {
  CellKind kind = CellKind::kVanillaLstm;
  std::int64_t recurrent_params = 0;
  double median_seconds = 0.0;
  double ratio_to_reference = 1.0;
  std::vector<double> runs;
};

/// Wall-clock forward time over `inputs` per model, repeated and
/// interleaved across models; median per model. The reference is the first
/// VanillaLSTM model in the list (the first model if there is none).
std::vector<BenchRow> bench_generation(std::span<const Model> models,
                                       std::span<const Matrix> inputs, int repeats = 3);

// Model checkpoint: "GRNM", u32 version, network config, feature layers,
// the cell container of cells.hpp, output layer, optional normalization.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

/// CSV with header epoch,train_mse,dev_mse,lr.
void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace gatedrnn
