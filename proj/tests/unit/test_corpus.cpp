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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>

#include "gatedrnn/corpus.hpp"

namespace gatedrnn {
namespace {

namespace fs = std::filesystem;

CorpusConfig small() {
  CorpusConfig c;
  c.phone_inventory_size = 6;
  c.train_utterances = 4;
  c.dev_utterances = 2;
  c.test_utterances = 2;
  c.min_phones = 3;
  c.max_phones = 6;
  c.seed = 42;
  return c;
}

std::vector<const Utterance*> all(const Corpus& c) {
  std::vector<const Utterance*> out;
  for (const auto* s : {&c.train, &c.dev, &c.test})
    for (const auto& u : *s) out.push_back(&u);
  return out;
}

TEST(GenCorpus, Deterministic) {
  EXPECT_EQ(gen_corpus(small()), gen_corpus(small()));
  CorpusConfig other = small();
  other.seed = 43;
  EXPECT_FALSE(gen_corpus(small()) == gen_corpus(other));
}

TEST(GenCorpus, SplitSizesAndIds) {
  const Corpus c = gen_corpus(small());
  EXPECT_EQ(c.train.size(), 4u);
  EXPECT_EQ(c.dev.size(), 2u);
  EXPECT_EQ(c.test.size(), 2u);
  std::map<std::string, int> seen;
  for (const auto* u : all(c)) ++seen[u->id];
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 1) << id;
}

TEST(GenCorpus, StructuralInvariants) {
  const CorpusConfig cfg = small();
  const Corpus c = gen_corpus(cfg);
  const Index block = cfg.phone_inventory_size + 1;
  for (const auto* u : all(c)) {
    ASSERT_FALSE(u->boundaries.empty());
    EXPECT_EQ(u->boundaries.front(), 0);
    for (std::size_t k = 1; k < u->boundaries.size(); ++k)
      EXPECT_LT(u->boundaries[k - 1], u->boundaries[k]);
    EXPECT_EQ(u->boundaries.size(), u->phones.size());
    EXPECT_EQ(u->linguistic.cols(), cfg.linguistic_dim());
    for (Index t = 0; t < u->frames(); ++t)
      for (int b = 0; b < 3; ++b) EXPECT_EQ(u->linguistic.row(t).segment(b * block, block).sum(), 1.0);
    EXPECT_EQ(u->mcc.rows(), u->frames());
    EXPECT_EQ(static_cast<Index>(u->vuv.size()), u->frames());
    EXPECT_TRUE(u->log_f0.allFinite());
  }
}

TEST(GenCorpus, BoundariesRecoverableFromOneHot) {
  const CorpusConfig cfg = small();
  const Corpus c = gen_corpus(cfg);
  const Index block = cfg.phone_inventory_size + 1;
  for (const auto* u : all(c)) {
    std::vector<Index> found{0};
    Index prev = -1;
    for (Index t = 0; t < u->frames(); ++t) {
      Index cur;
      u->linguistic.row(t).segment(block, block).maxCoeff(&cur);
      if (t > 0 && cur != prev) found.push_back(t);
      prev = cur;
    }
    EXPECT_EQ(found, u->boundaries) << u->id;
  }
}

TEST(GenCorpus, PositionResetsAtBoundaries) {
  const CorpusConfig cfg = small();
  const Corpus c = gen_corpus(cfg);
  const Index pos = 3 * (cfg.phone_inventory_size + 1);
  for (const auto* u : all(c)) {
    for (Index b : u->boundaries) {
      if (b == 0) continue;
      EXPECT_LT(u->linguistic(b, pos), u->linguistic(b - 1, pos));
    }
  }
}

TEST(GenCorpus, NoSmoothingNoNoiseGivesPhoneTargets) {
  CorpusConfig cfg = small();
  cfg.smoothing_window = 1;
  cfg.noise_std = 0.0;
  const Corpus c = gen_corpus(cfg);
  std::map<int, Eigen::RowVectorXd> target;
  for (const auto* u : all(c)) {
    for (std::size_t k = 0; k < u->phones.size(); ++k) {
      const Index start = u->boundaries[k];
      const Index end = k + 1 < u->boundaries.size() ? u->boundaries[k + 1] : u->frames();
      const Eigen::RowVectorXd first = u->mcc.row(start);
      auto [it, fresh] = target.emplace(u->phones[k], first);
      if (!fresh) EXPECT_EQ(it->second, first);
      for (Index t = start; t < end; ++t) EXPECT_EQ(u->mcc.row(t), first);
    }
  }
}

TEST(GenCorpus, SmoothedJumpsBoundedByTargetGaps) {
  CorpusConfig flat = small();
  flat.smoothing_window = 1;
  flat.noise_std = 0.0;
  CorpusConfig smooth = flat;
  smooth.smoothing_window = 7;
  const Corpus a = gen_corpus(flat);
  const Corpus b = gen_corpus(smooth);

  Eigen::RowVectorXd lo = a.train[0].mcc.row(0), hi = lo;
  for (const auto* u : all(a)) {
    lo = lo.cwiseMin(u->mcc.colwise().minCoeff());
    hi = hi.cwiseMax(u->mcc.colwise().maxCoeff());
  }
  const Eigen::RowVectorXd gap = hi - lo;
  for (const auto* u : all(b))
    for (Index t = 1; t < u->frames(); ++t)
      for (Index d = 0; d < gap.size(); ++d)
        EXPECT_LE(std::abs(u->mcc(t, d) - u->mcc(t - 1, d)), gap[d] + 1e-12);
}

TEST(GenCorpus, RejectsInvalidConfig) {
  CorpusConfig c = small();
  c.train_utterances = 0;
  EXPECT_THROW(gen_corpus(c), ValidationError);
  c = small();
  c.smoothing_window = 4;
  EXPECT_THROW(gen_corpus(c), ValidationError);
  c = small();
  c.min_segment_frames = 10;
  c.max_segment_frames = 5;
  EXPECT_THROW(gen_corpus(c), ValidationError);
}

class CorpusFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gatedrnn_corpus_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    corpus_ = gen_corpus(small());
    save_corpus(corpus_, dir_.string());
  }
  void TearDown() override { fs::remove_all(dir_); }

  nlohmann::json manifest() const {
    std::ifstream in(dir_ / "manifest.json");
    return nlohmann::json::parse(in);
  }
  void write_manifest(const nlohmann::json& j) const {
    std::ofstream out(dir_ / "manifest.json", std::ios::trunc);
    out << j.dump(1);
  }

  fs::path dir_;
  Corpus corpus_;
};

TEST_F(CorpusFiles, RoundTripIsBitExact) {
  const Corpus back = load_corpus(dir_.string());
  EXPECT_EQ(back, corpus_);
  EXPECT_TRUE(back.config == corpus_.config);
}

TEST_F(CorpusFiles, MissingManifest) {
  fs::remove(dir_ / "manifest.json");
  EXPECT_THROW(load_corpus(dir_.string()), IoError);
}

TEST_F(CorpusFiles, CorruptManifest) {
  std::ofstream(dir_ / "manifest.json", std::ios::trunc) << "{ not json";
  EXPECT_THROW(load_corpus(dir_.string()), IoError);
}

TEST_F(CorpusFiles, CountMismatch) {
  auto j = manifest();
  j["counts"]["dev"] = 3;
  write_manifest(j);
  EXPECT_THROW(load_corpus(dir_.string()), IoError);
}

TEST_F(CorpusFiles, TruncatedFileNamesUtterance) {
  const Utterance& u = corpus_.test[1];
  const fs::path f = dir_ / "test" / (u.id + ".mcc.bin");
  fs::resize_file(f, fs::file_size(f) - 5);
  try {
    load_corpus(dir_.string());
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(u.id), std::string::npos) << e.what();
  }
}

TEST_F(CorpusFiles, ChecksumMismatch) {
  const Utterance& u = corpus_.train[0];
  const fs::path f = dir_ / "train" / (u.id + ".bap.bin");
  std::fstream io(f, std::ios::in | std::ios::out | std::ios::binary);
  io.seekp(-1, std::ios::end);
  io.put('\x7f');
  io.close();
  try {
    load_corpus(dir_.string());
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(u.id), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace gatedrnn
