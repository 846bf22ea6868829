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
#include <iosfwd>
#include <string>
#include <vector>

#include "gatedrnn/common.hpp"
#include "gatedrnn/corpus.hpp"
#include "gatedrnn/network.hpp"

namespace gatedrnn {

struct AblateConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// One entry means a fixed rate; more means a per-system search on the
  /// first seed.
  std::vector<double> learning_rates{kLearningRateGrid.begin(), kLearningRateGrid.end()};
  /// Epoch budget of each search run; 0 uses train.max_epochs.
  int search_epochs = 0;
  int bench_repeats = 3;

  void validate() const;
};

/// Everything a run needs. Read from an INI-style file with sections
/// [corpus], [network], [train] and [ablate]; `#` and `;` start comments.
struct LabConfig {
  CorpusConfig corpus;
  std::vector<Index> ff_layer_sizes{64, 64, 64};
  Index hidden_dim = 32;
  TrainConfig train;
  AblateConfig ablate;

  void validate() const;
  NetworkConfig network(CellKind kind) const;
};

/// Unknown sections or keys and malformed values raise ValidationError.
LabConfig parse_lab_config(std::istream& in);
LabConfig load_lab_config(const std::string& path);

/// Writes the config back in the same format.
void write_lab_config(std::ostream& out, const LabConfig& config);

/// Comma-separated lists as used in the config file.
std::vector<double> parse_real_list(const std::string& text);
std::vector<Index> parse_size_list(const std::string& text);

}  // namespace gatedrnn
