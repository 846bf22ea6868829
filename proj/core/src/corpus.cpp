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

#include "gatedrnn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "gatedrnn/binary_io.hpp"
#include "gatedrnn/rng.hpp"

namespace gatedrnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBaseLogF0 = 4.787;  // log(120 Hz)
constexpr double kLogF0Spread = 0.15;
constexpr double kBapSpread = 0.5;

struct PhoneTargets {
  Matrix mcc;       // P x mcc_dim
  Matrix bap;       // P x bap_dim
  Vector log_f0;    // P
  VoicingFlags voiced;
  Vector mcc_spread;  // per-dimension scale of the targets
};

PhoneTargets draw_phone_targets(const CorpusConfig& cfg, Rng& rng) {
  const int p = cfg.phone_inventory_size;
  const Index dm = cfg.layout.mcc_dim;
  const Index db = cfg.layout.bap_dim;
  PhoneTargets t;
  t.mcc_spread.resize(dm);
  // Higher cepstral coefficients vary less, as in real spectra.
  for (Index d = 0; d < dm; ++d) t.mcc_spread[d] = 1.0 / (1.0 + 0.25 * static_cast<double>(d));
  t.mcc.resize(p, dm);
  t.bap.resize(p, db);
  t.log_f0.resize(p);
  for (int k = 0; k < p; ++k) {
    for (Index d = 0; d < dm; ++d) t.mcc(k, d) = t.mcc_spread[d] * rng.normal();
    for (Index d = 0; d < db; ++d) t.bap(k, d) = kBapSpread * rng.normal();
    t.log_f0[k] = kBaseLogF0 + kLogF0Spread * rng.normal();
  }
  // Voicing class per phone; keep at least one of each.
  const int n_voiced =
      std::clamp(static_cast<int>(std::lround(cfg.voiced_fraction * p)), 1, std::max(1, p - 1));
  t.voiced.assign(static_cast<std::size_t>(p), 0);
  std::vector<int> order(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) order[static_cast<std::size_t>(k)] = k;
  for (int k = p - 1; k > 0; --k)
    std::swap(order[static_cast<std::size_t>(k)],
              order[rng.below(static_cast<std::uint64_t>(k + 1))]);
  for (int k = 0; k < n_voiced; ++k) t.voiced[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  return t;
}

// Centered moving average with edge replication.
Matrix smooth(const Matrix& x, int window) {
  if (window <= 1) return x;
  const Index steps = x.rows();
  const Index half = window / 2;
  Matrix out(steps, x.cols());
  for (Index t = 0; t < steps; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
    for (Index k = -half; k <= half; ++k) acc += x.row(std::clamp<Index>(t + k, 0, steps - 1));
    out.row(t) = acc / static_cast<double>(2 * half + 1);
  }
  return out;
}

Utterance make_utterance(const CorpusConfig& cfg, const PhoneTargets& targets, Rng& rng,
                         std::string id) {
  const int p = cfg.phone_inventory_size;
  const int edge = p;  // one-hot slot for "no neighbour"

  std::vector<int> phones;
  bool any_voiced = false;
  while (!any_voiced) {
    phones.clear();
    const int n = cfg.min_phones + static_cast<int>(rng.below(
                                       static_cast<std::uint64_t>(cfg.max_phones - cfg.min_phones + 1)));
    for (int k = 0; k < n; ++k) {
      int ph = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
      // No immediate repeats, so every boundary is a change of identity.
      while (!phones.empty() && ph == phones.back() && p > 1)
        ph = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
      phones.push_back(ph);
      any_voiced = any_voiced || targets.voiced[static_cast<std::size_t>(ph)];
    }
  }

  std::vector<int> durations;
  Index total = 0;
  for (std::size_t k = 0; k < phones.size(); ++k) {
    const int d = cfg.min_segment_frames +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(
                      cfg.max_segment_frames - cfg.min_segment_frames + 1)));
    durations.push_back(d);
    total += d;
  }

  Utterance u;
  u.id = std::move(id);
  u.phones = phones;
  const Index ling = cfg.linguistic_dim();
  const Index block = p + 1;
  u.linguistic = Matrix::Zero(total, ling);
  Matrix mcc(total, cfg.layout.mcc_dim);
  Matrix bap(total, cfg.layout.bap_dim);
  Matrix lf0(total, 1);
  VoicingFlags voiced(static_cast<std::size_t>(total));

  Index t = 0;
  for (std::size_t k = 0; k < phones.size(); ++k) {
    u.boundaries.push_back(t);
    const int prev = k > 0 ? phones[k - 1] : edge;
    const int next = k + 1 < phones.size() ? phones[k + 1] : edge;
    const int dur = durations[k];
    for (int f = 0; f < dur; ++f, ++t) {
      u.linguistic(t, prev) = 1.0;
      u.linguistic(t, block + phones[k]) = 1.0;
      u.linguistic(t, 2 * block + next) = 1.0;
      const double forward = (static_cast<double>(f) + 0.5) / static_cast<double>(dur);
      u.linguistic(t, 3 * block) = forward;
      u.linguistic(t, 3 * block + 1) = 1.0 - forward;
      u.linguistic(t, 3 * block + 2) =
          static_cast<double>(dur) / static_cast<double>(cfg.max_segment_frames);
      mcc.row(t) = targets.mcc.row(phones[k]);
      bap.row(t) = targets.bap.row(phones[k]);
      lf0(t, 0) = targets.log_f0[phones[k]];
      voiced[static_cast<std::size_t>(t)] = targets.voiced[static_cast<std::size_t>(phones[k])];
    }
  }

  mcc = smooth(mcc, cfg.smoothing_window);
  bap = smooth(bap, cfg.smoothing_window);
  lf0 = smooth(lf0, cfg.smoothing_window);
  if (cfg.noise_std > 0.0) {
    for (Index i = 0; i < total; ++i) {
      for (Index d = 0; d < mcc.cols(); ++d)
        mcc(i, d) += cfg.noise_std * targets.mcc_spread[d] * rng.normal();
      for (Index d = 0; d < bap.cols(); ++d) bap(i, d) += cfg.noise_std * kBapSpread * rng.normal();
      lf0(i, 0) += cfg.noise_std * kLogF0Spread * rng.normal();
    }
  }

  Vector f0(total);
  for (Index i = 0; i < total; ++i)
    f0[i] = voiced[static_cast<std::size_t>(i)] ? std::exp(lf0(i, 0)) : 0.0;
  F0Track track = interpolate_f0(f0);
  u.mcc = std::move(mcc);
  u.bap = std::move(bap);
  u.log_f0 = std::move(track.log_f0);
  u.vuv = std::move(track.vuv);
  return u;
}

std::string utterance_id(const std::string& split, int k) {
  std::ostringstream os;
  os << split << '_' << std::setw(4) << std::setfill('0') << k;
  return os.str();
}

json config_to_json(const CorpusConfig& c) {
  return {{"phone_inventory_size", c.phone_inventory_size},
          {"train_utterances", c.train_utterances},
          {"dev_utterances", c.dev_utterances},
          {"test_utterances", c.test_utterances},
          {"min_segment_frames", c.min_segment_frames},
          {"max_segment_frames", c.max_segment_frames},
          {"min_phones", c.min_phones},
          {"max_phones", c.max_phones},
          {"mcc_dim", c.layout.mcc_dim},
          {"bap_dim", c.layout.bap_dim},
          {"smoothing_window", c.smoothing_window},
          {"noise_std", c.noise_std},
          {"voiced_fraction", c.voiced_fraction},
          {"seed", c.seed}};
}

CorpusConfig config_from_json(const json& j) {
  CorpusConfig c;
  c.phone_inventory_size = j.at("phone_inventory_size").get<int>();
  c.train_utterances = j.at("train_utterances").get<int>();
  c.dev_utterances = j.at("dev_utterances").get<int>();
  c.test_utterances = j.at("test_utterances").get<int>();
  c.min_segment_frames = j.at("min_segment_frames").get<int>();
  c.max_segment_frames = j.at("max_segment_frames").get<int>();
  c.min_phones = j.at("min_phones").get<int>();
  c.max_phones = j.at("max_phones").get<int>();
  c.layout.mcc_dim = j.at("mcc_dim").get<Index>();
  c.layout.bap_dim = j.at("bap_dim").get<Index>();
  c.smoothing_window = j.at("smoothing_window").get<int>();
  c.noise_std = j.at("noise_std").get<double>();
  c.voiced_fraction = j.at("voiced_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Matrix flags_to_matrix(const VoicingFlags& v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Index>(i), 0) = v[i];
  return m;
}

}  // namespace

void CorpusConfig::validate() const {
  require(phone_inventory_size >= 2, "corpus: phone_inventory_size must be >= 2");
  require(train_utterances >= 1 && dev_utterances >= 1 && test_utterances >= 1,
          "corpus: every split needs at least one utterance");
  require(min_segment_frames >= 1 && max_segment_frames >= min_segment_frames,
          "corpus: invalid segment duration range");
  require(min_phones >= 1 && max_phones >= min_phones, "corpus: invalid phones-per-utterance range");
  require(layout.mcc_dim >= 2 && layout.bap_dim >= 1, "corpus: invalid stream widths");
  require(smoothing_window >= 1 && smoothing_window % 2 == 1,
          "corpus: smoothing_window must be a positive odd number");
  require(noise_std >= 0.0, "corpus: noise_std must be non-negative");
  require(voiced_fraction > 0.0 && voiced_fraction <= 1.0, "corpus: voiced_fraction out of range");
}

Vector Utterance::f0_hz() const {
  Vector out(log_f0.size());
  for (Index t = 0; t < log_f0.size(); ++t)
    out[t] = vuv[static_cast<std::size_t>(t)] ? std::exp(log_f0[t]) : 0.0;
  return out;
}

bool Utterance::operator==(const Utterance& o) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return id == o.id && same(linguistic, o.linguistic) && same(mcc, o.mcc) && same(bap, o.bap) &&
         same(log_f0, o.log_f0) && vuv == o.vuv && boundaries == o.boundaries &&
         phones == o.phones;
}

Corpus gen_corpus(const CorpusConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const PhoneTargets targets = draw_phone_targets(config, rng);
  Corpus c;
  c.config = config;
  auto fill = [&](std::vector<Utterance>& split, const std::string& name, int count) {
    Rng split_rng(rng.fork());
    for (int k = 0; k < count; ++k)
      split.push_back(make_utterance(config, targets, split_rng, utterance_id(name, k)));
  };
  fill(c.train, "train", config.train_utterances);
  fill(c.dev, "dev", config.dev_utterances);
  fill(c.test, "test", config.test_utterances);
  return c;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  json manifest;
  manifest["format_version"] = kCorpusFormatVersion;
  manifest["seed"] = corpus.config.seed;
  manifest["config"] = config_to_json(corpus.config);
  manifest["streams"] = {{"ling", corpus.config.linguistic_dim()},
                         {"mcc", corpus.config.layout.mcc_dim},
                         {"bap", corpus.config.layout.bap_dim},
                         {"lf0", 1},
                         {"vuv", 1}};
  const std::vector<std::pair<std::string, const std::vector<Utterance>*>> splits = {
      {"train", &corpus.train}, {"dev", &corpus.dev}, {"test", &corpus.test}};
  for (const auto& [name, utts] : splits) {
    fs::create_directories(fs::path(dir) / name);
    json list = json::array();
    for (const auto& u : *utts) {
      json files;
      auto put = [&](const std::string& stream, const Matrix& m) {
        const std::string rel = name + "/" + u.id + "." + stream + ".bin";
        const std::string path = (fs::path(dir) / rel).string();
        write_feature_file(path, m);
        files[stream] = {{"file", rel}, {"dims", m.cols()}, {"crc32", file_crc32(path)}};
      };
      put("ling", u.linguistic);
      put("mcc", u.mcc);
      put("bap", u.bap);
      put("lf0", Matrix(u.log_f0));
      put("vuv", flags_to_matrix(u.vuv));
      list.push_back({{"id", u.id},
                      {"frames", u.frames()},
                      {"boundaries", u.boundaries},
                      {"phones", u.phones},
                      {"files", files}});
    }
    manifest["counts"][name] = utts->size();
    manifest["utterances"][name] = list;
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << manifest.dump(1) << '\n';
}

Corpus load_corpus(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("corpus manifest missing: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("corpus manifest is corrupt: " + std::string(e.what()));
  }

  Corpus c;
  try {
    if (manifest.at("format_version").get<int>() != kCorpusFormatVersion)
      throw IoError("corpus manifest: unsupported format version");
    c.config = config_from_json(manifest.at("config"));
    const std::vector<std::pair<std::string, std::vector<Utterance>*>> splits = {
        {"train", &c.train}, {"dev", &c.dev}, {"test", &c.test}};
    for (const auto& [name, utts] : splits) {
      const auto& list = manifest.at("utterances").at(name);
      const auto count = manifest.at("counts").at(name).get<std::size_t>();
      if (list.size() != count)
        throw IoError("corpus manifest: split '" + name + "' lists " +
                      std::to_string(list.size()) + " utterances but counts " +
                      std::to_string(count));
      for (const auto& entry : list) {
        Utterance u;
        u.id = entry.at("id").get<std::string>();
        const Index frames = entry.at("frames").get<Index>();
        auto get = [&](const std::string& stream) {
          const auto& f = entry.at("files").at(stream);
          const std::string path = (fs::path(dir) / f.at("file").get<std::string>()).string();
          Matrix m;
          try {
            m = read_feature_file(path);
          } catch (const IoError& e) {
            throw IoError("utterance " + u.id + ": " + e.what());
          }
          if (file_crc32(path) != f.at("crc32").get<std::uint32_t>())
            throw IoError("utterance " + u.id + ": checksum mismatch in " + stream);
          if (m.rows() != frames || m.cols() != f.at("dims").get<Index>())
            throw IoError("utterance " + u.id + ": " + stream + " shape disagrees with manifest");
          return m;
        };
        u.linguistic = get("ling");
        u.mcc = get("mcc");
        u.bap = get("bap");
        u.log_f0 = get("lf0").col(0);
        const Matrix vuv = get("vuv");
        u.vuv.resize(static_cast<std::size_t>(frames));
        for (Index t = 0; t < frames; ++t) u.vuv[static_cast<std::size_t>(t)] = vuv(t, 0) != 0.0;
        u.boundaries = entry.at("boundaries").get<std::vector<Index>>();
        u.phones = entry.at("phones").get<std::vector<int>>();
        utts->push_back(std::move(u));
      }
    }
  } catch (const json::exception& e) {
    throw IoError("corpus manifest is malformed: " + std::string(e.what()));
  }
  return c;
}

}  // namespace gatedrnn
