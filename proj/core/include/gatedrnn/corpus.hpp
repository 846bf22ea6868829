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
#include <string>
#include <vector>

#include "gatedrnn/common.hpp"
#include "gatedrnn/features.hpp"

namespace gatedrnn {

/// Synthetic stand-in for a speech corpus: phone sequences with fixed
/// per-phone acoustic targets, smoothed across boundaries, plus noise.
struct CorpusConfig {
  int phone_inventory_size = 20;
  int train_utterances = 240;
  int dev_utterances = 7;
  int test_utterances = 8;
  int min_segment_frames = 5;
  int max_segment_frames = 30;
  int min_phones = 6;
  int max_phones = 14;
  AcousticLayout layout;
  /// Moving-average width in frames (odd); 1 disables smoothing.
  int smoothing_window = 7;
  /// Noise standard deviation relative to each dimension's target spread.
  double noise_std = 0.05;
  double voiced_fraction = 0.7;
  std::uint64_t seed = 1;

  void validate() const;
  /// 3 one-hot blocks (previous/current/next phone, plus an "edge" symbol)
  /// and 3 positional features.
  Index linguistic_dim() const { return 3 * (phone_inventory_size + 1) + 3; }

  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

struct Utterance {
  std::string id;
  Matrix linguistic;  // T x linguistic_dim, raw (not normalized)
  Matrix mcc;         // T x mcc_dim
  Matrix bap;         // T x bap_dim
  Vector log_f0;      // T, interpolated through unvoiced regions
  VoicingFlags vuv;   // T
  std::vector<Index> boundaries;  // segment start frames, first is 0
  std::vector<int> phones;        // one per segment

  Index frames() const { return linguistic.rows(); }
  /// Linear-scale F0 with zeros on unvoiced frames.
  Vector f0_hz() const;

  bool operator==(const Utterance& other) const;
};

struct Corpus {
  CorpusConfig config;
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;

  bool operator==(const Corpus& other) const = default;
};

Corpus gen_corpus(const CorpusConfig& config);

/// Directory layout:
///   manifest.json                 ids, frame counts, stream dims, CRC-32s,
///                                 boundaries, config echo and seed
///   <split>/<id>.<stream>.bin     one feature file per utterance per stream
///                                 (streams: ling, mcc, bap, lf0, vuv)
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

inline constexpr int kCorpusFormatVersion = 1;

}  // namespace gatedrnn
