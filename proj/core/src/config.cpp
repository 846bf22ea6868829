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

#include "gatedrnn/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace gatedrnn {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  std::istringstream is(text);
  T v{};
  is >> v;
  if (text.empty() || !is || !is.eof())
    throw ValidationError("config: bad value for " + key + ": '" + raw + "'");
  return v;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text)) out.push_back(parse_number<double>("list", item));
  if (out.empty()) throw ValidationError("config: empty list");
  return out;
}

std::vector<Index> parse_size_list(const std::string& text) {
  std::vector<Index> out;
  for (const auto& item : split(text)) {
    out.push_back(parse_number<Index>("list", item));
    if (out.back() < 0) throw ValidationError("config: negative entry in list '" + text + "'");
  }
  if (out.empty()) throw ValidationError("config: empty list");
  return out;
}

void AblateConfig::validate() const {
  require(!seeds.empty(), "ablate.seeds must not be empty");
  require(!learning_rates.empty(), "ablate.learning_rates must not be empty");
  for (double lr : learning_rates)
    require(lr > 0.0 && std::isfinite(lr), "ablate.learning_rates must be positive");
  require(search_epochs >= 0, "ablate.search_epochs must be >= 0");
  require(bench_repeats >= 3, "ablate.bench_repeats must be >= 3");
}

void LabConfig::validate() const {
  corpus.validate();
  train.validate();
  ablate.validate();
  network(CellKind::kVanillaLstm).validate();
}

NetworkConfig LabConfig::network(CellKind kind) const {
  return {corpus.linguistic_dim(), ff_layer_sizes, kind, hidden_dim,
          corpus.layout.target_dim()};
}

LabConfig parse_lab_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.message() + " at line " +
                          std::to_string(e.line()));
  }

  LabConfig c;
  using Setter = void (*)(LabConfig&, const std::string&, const std::string&);
  static const std::map<std::string, Setter> setters = {
      {"corpus.phones", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.phone_inventory_size = parse_number<int>(k, v); }},
      {"corpus.train", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.train_utterances = parse_number<int>(k, v); }},
      {"corpus.dev", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.dev_utterances = parse_number<int>(k, v); }},
      {"corpus.test", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.test_utterances = parse_number<int>(k, v); }},
      {"corpus.min_segment", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.min_segment_frames = parse_number<int>(k, v); }},
      {"corpus.max_segment", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.max_segment_frames = parse_number<int>(k, v); }},
      {"corpus.min_phones", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.min_phones = parse_number<int>(k, v); }},
      {"corpus.max_phones", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.max_phones = parse_number<int>(k, v); }},
      {"corpus.mcc_dim", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.layout.mcc_dim = parse_number<Index>(k, v); }},
      {"corpus.bap_dim", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.layout.bap_dim = parse_number<Index>(k, v); }},
      {"corpus.smoothing_window", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.smoothing_window = parse_number<int>(k, v); }},
      {"corpus.noise_std", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.noise_std = parse_number<double>(k, v); }},
      {"corpus.voiced_fraction", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.voiced_fraction = parse_number<double>(k, v); }},
      {"corpus.seed", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.corpus.seed = parse_number<std::uint64_t>(k, v); }},
      {"network.ff_layers", [](LabConfig& c, const std::string&, const std::string& v) {
         c.ff_layer_sizes = parse_size_list(v); }},
      {"network.hidden", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.hidden_dim = parse_number<Index>(k, v); }},
      {"train.learning_rate", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.train.learning_rate = parse_number<double>(k, v); }},
      {"train.momentum", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.train.momentum = parse_number<double>(k, v); }},
      {"train.max_epochs", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.train.max_epochs = parse_number<int>(k, v); }},
      {"train.patience", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.train.patience = parse_number<int>(k, v); }},
      {"train.grad_clip", [](LabConfig& c, const std::string& k, const std::string& v) {
         if (trim(v) == "none") c.train.grad_clip_norm.reset();
         else c.train.grad_clip_norm = parse_number<double>(k, v); }},
      {"train.seed", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.train.seed = parse_number<std::uint64_t>(k, v); }},
      {"train.init_scale", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.train.init_scale = parse_number<double>(k, v); }},
      {"ablate.seeds", [](LabConfig& c, const std::string&, const std::string& v) {
         c.ablate.seeds.clear();
         for (Index s : parse_size_list(v)) c.ablate.seeds.push_back(static_cast<std::uint64_t>(s));
       }},
      {"ablate.learning_rates", [](LabConfig& c, const std::string&, const std::string& v) {
         c.ablate.learning_rates = parse_real_list(v); }},
      {"ablate.search_epochs", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.ablate.search_epochs = parse_number<int>(k, v); }},
      {"ablate.bench_repeats", [](LabConfig& c, const std::string& k, const std::string& v) {
         c.ablate.bench_repeats = parse_number<int>(k, v); }},
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ValidationError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) throw ValidationError("config: unknown key " + full);
      it->second(c, full, value.data());
    }
  }
  c.validate();
  return c;
}

LabConfig load_lab_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read " + path);
  return parse_lab_config(in);
}

void write_lab_config(std::ostream& out, const LabConfig& c) {
  out << std::setprecision(17);
  out << "[corpus]\n"
      << "phones = " << c.corpus.phone_inventory_size << '\n'
      << "train = " << c.corpus.train_utterances << '\n'
      << "dev = " << c.corpus.dev_utterances << '\n'
      << "test = " << c.corpus.test_utterances << '\n'
      << "min_segment = " << c.corpus.min_segment_frames << '\n'
      << "max_segment = " << c.corpus.max_segment_frames << '\n'
      << "min_phones = " << c.corpus.min_phones << '\n'
      << "max_phones = " << c.corpus.max_phones << '\n'
      << "mcc_dim = " << c.corpus.layout.mcc_dim << '\n'
      << "bap_dim = " << c.corpus.layout.bap_dim << '\n'
      << "smoothing_window = " << c.corpus.smoothing_window << '\n'
      << "noise_std = " << c.corpus.noise_std << '\n'
      << "voiced_fraction = " << c.corpus.voiced_fraction << '\n'
      << "seed = " << c.corpus.seed << "\n\n";
  out << "[network]\n"
      << "ff_layers = " << join(c.ff_layer_sizes) << '\n'
      << "hidden = " << c.hidden_dim << "\n\n";
  out << "[train]\n"
      << "learning_rate = " << c.train.learning_rate << '\n'
      << "momentum = " << c.train.momentum << '\n'
      << "max_epochs = " << c.train.max_epochs << '\n'
      << "patience = " << c.train.patience << '\n'
      << "grad_clip = ";
  if (c.train.grad_clip_norm) out << *c.train.grad_clip_norm;
  else out << "none";
  out << '\n'
      << "seed = " << c.train.seed << '\n'
      << "init_scale = " << c.train.init_scale << "\n\n";
  out << "[ablate]\n"
      << "seeds = " << join(c.ablate.seeds) << '\n'
      << "learning_rates = " << join(c.ablate.learning_rates) << '\n'
      << "search_epochs = " << c.ablate.search_epochs << '\n'
      << "bench_repeats = " << c.ablate.bench_repeats << '\n';
}

}  // namespace gatedrnn
