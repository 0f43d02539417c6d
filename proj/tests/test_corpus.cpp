// tests/test_corpus.cpp

// Copyright 2026  MDE Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>

#include "doctest.h"
#include "mde/corpus.hpp"
#include "mde/ctc.hpp"
#include "mde/io.hpp"

using namespace mde;

namespace {

std::string temp_dir(const std::string &tag) {
  auto dir = std::filesystem::temp_directory_path() / ("mde_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("error-free configuration reproduces the prompt") {
  SynthConfig cfg = SynthConfig::make_default(8, 8);
  cfg.clear_errors();
  Rng rng(4);
  const auto &inv = cfg.inventory;
  const std::vector<int> prompt = inv.parse_phone_sequence("b a l");
  const Utterance utt = synthesize_utterance(cfg, prompt, "u0", rng);
  CHECK(utt.realized == prompt);
  for (const auto &a : utt.annotation) CHECK(a.kind == PositionLabel::kCorrect);
  validate_utterance(utt, inv);
}

TEST_CASE("forced deletion marks exactly the deleted position") {
  SynthConfig cfg = SynthConfig::make_default(8, 8);
  cfg.clear_errors();
  const auto &inv = cfg.inventory;
  cfg.deletion_prob[inv.index_of("a") - inv.first_phone()] = 1.0;
  Rng rng(4);
  const std::vector<int> prompt = inv.parse_phone_sequence("b a l");
  const Utterance utt = synthesize_utterance(cfg, prompt, "u0", rng);
  CHECK(utt.realized == inv.parse_phone_sequence("b l"));
  CHECK(utt.annotation[0].kind == PositionLabel::kCorrect);
  CHECK(utt.annotation[1].kind == PositionLabel::kDeleted);
  CHECK(utt.annotation[2].kind == PositionLabel::kCorrect);
  validate_utterance(utt, inv);
}

TEST_CASE("forced substitution records the drawn phone") {
  SynthConfig cfg = SynthConfig::make_default(8, 8);
  cfg.clear_errors();
  const auto &inv = cfg.inventory;
  const int b = inv.index_of("b") - inv.first_phone();
  const int d = inv.index_of("d") - inv.first_phone();
  for (int q = 0; q < cfg.num_phones(); ++q) cfg.confusion.at(b, q) = 0.0;
  cfg.confusion.at(b, d) = 1.0;
  Rng rng(4);
  const std::vector<int> prompt = inv.parse_phone_sequence("b a l");
  const Utterance utt = synthesize_utterance(cfg, prompt, "u0", rng);
  CHECK(utt.annotation[0].kind == PositionLabel::kSubstituted);
  CHECK(utt.annotation[0].substituted_with == inv.index_of("d"));
  CHECK(utt.realized[0] == inv.index_of("d"));
  validate_utterance(utt, inv);
}

TEST_CASE("unknown prompt phone is rejected") {
  SynthConfig cfg = SynthConfig::make_default(4, 4);
  Rng rng(4);
  const std::vector<int> bad{PhoneInventory::kBlank};
  CHECK_THROWS_AS(synthesize_utterance(cfg, bad, "u0", rng), ValidationError);
}

TEST_CASE("build_splits is deterministic in the seed") {
  SynthConfig cfg = SynthConfig::make_default(4, 4);
  cfg.seed = 7;
  SplitSpec spec;
  spec.n_train = 12;
  spec.n_dev = 4;
  spec.n_test = 5;
  const CorpusSplit a = build_splits(cfg, spec);
  const CorpusSplit b = build_splits(cfg, spec);

  const std::string da = temp_dir("corpus_a");
  const std::string db = temp_dir("corpus_b");
  save_corpus(da, a, cfg.inventory);
  save_corpus(db, b, cfg.inventory);
  for (const char *name : {"train.tsv", "dev.tsv", "test.tsv",
                           "inventory.txt", "duration_stats.tsv"}) {
    CHECK(read_text_file(da + "/" + name) == read_text_file(db + "/" + name));
  }
  CHECK(a.train[3].features.data == b.train[3].features.data);
}

TEST_CASE("error rate zero yields no mispronunciations") {
  SynthConfig cfg = SynthConfig::make_default(4, 4);
  SplitSpec spec;
  spec.n_train = 10;
  spec.n_dev = 5;
  spec.n_test = 5;
  spec.error_rate = 0.0;
  const CorpusSplit corpus = build_splits(cfg, spec);
  for (const auto *split : {&corpus.train, &corpus.dev, &corpus.test})
    for (const auto &utt : *split)
      for (const auto &a : utt.annotation) CHECK(!a.mispronounced());
}

TEST_CASE("injected error mass concentrates at the configured rate") {
  SynthConfig cfg = SynthConfig::make_default(6, 6);
  cfg.seed = 123;
  SplitSpec spec;
  spec.n_train = 1100;
  spec.n_dev = 80;
  spec.n_test = 80;
  spec.prompt_len_min = 8;
  spec.prompt_len_max = 8;
  spec.error_rate = 0.2;
  spec.l1_fraction = 0.0;
  const CorpusSplit corpus = build_splits(cfg, spec);
  long positions = 0, errors = 0;
  for (const auto *split : {&corpus.train, &corpus.dev, &corpus.test}) {
    for (const auto &utt : *split) {
      positions += static_cast<long>(utt.annotation.size());
      for (const auto &a : utt.annotation)
        if (a.mispronounced()) ++errors;
    }
  }
  REQUIRE(positions >= 10000);
  const double rate = static_cast<double>(errors) / positions;
  CHECK(rate > 0.18);
  CHECK(rate < 0.22);
}

TEST_CASE("generated utterances satisfy their structural invariants") {
  SynthConfig cfg = SynthConfig::make_default(5, 3);
  cfg.seed = 31;
  SplitSpec spec;
  spec.n_train = 30;
  spec.n_dev = 8;
  spec.n_test = 8;
  spec.error_rate = 0.3;
  const CorpusSplit corpus = build_splits(cfg, spec);
  for (const auto *split : {&corpus.train, &corpus.dev, &corpus.test}) {
    for (const auto &utt : *split) {
      validate_utterance(utt, cfg.inventory);
      CHECK(apply_annotation(utt.prompt, utt.annotation) == utt.realized);
    }
  }
}

TEST_CASE("duration statistics and fallback") {
  const PhoneInventory inv = PhoneInventory::make_default(3);
  const int a = inv.index_of("a");
  const int b = inv.index_of("b");
  Utterance u1, u2;
  u1.realized = {a, b};
  u1.realized_durations = {2, 3};
  u2.realized = {a};
  u2.realized_durations = {4};
  const DurationStats stats = duration_stats({u1, u2});
  CHECK(stats.mean_for(a) == doctest::Approx(3.0));
  CHECK(stats.mean_for(b) == doctest::Approx(3.0));
  // never-seen phone falls back to the global mean
  CHECK(stats.mean_for(inv.index_of("d")) == doctest::Approx(3.0));

  Utterance u3;
  u3.realized = {a, b};
  u3.realized_durations = {2, 3};
  const DurationStats s2 = duration_stats({u3});
  CHECK(s2.global_mean == doctest::Approx(2.5));
  CHECK(s2.mean_for(inv.index_of("d")) == doctest::Approx(2.5));

  CHECK_THROWS_AS(duration_stats({}), ValidationError);
}

TEST_CASE("corpus round-trips through the on-disk formats") {
  SynthConfig cfg = SynthConfig::make_default(4, 5);
  cfg.seed = 77;
  SplitSpec spec;
  spec.n_train = 6;
  spec.n_dev = 3;
  spec.n_test = 3;
  spec.error_rate = 0.4;
  const CorpusSplit corpus = build_splits(cfg, spec);
  const std::string dir = temp_dir("roundtrip");
  save_corpus(dir, corpus, cfg.inventory);

  const LoadedCorpus loaded = load_corpus(dir);
  CHECK(loaded.inventory.hash() == cfg.inventory.hash());
  CHECK(loaded.split("train").size() == corpus.train.size());
  for (size_t i = 0; i < corpus.train.size(); ++i) {
    const auto &orig = corpus.train[i];
    const auto &entry = loaded.split("train")[i];
    CHECK(entry.id == orig.id);
    CHECK(entry.prompt == orig.prompt);
    CHECK(entry.realized(loaded.inventory) == orig.realized);
    CHECK(loaded.features_for(entry.id).data == orig.features.data);
  }
  CHECK(loaded.duration_stats.global_mean ==
        doctest::Approx(corpus.duration_stats.global_mean));
}

TEST_CASE("inventory file validation") {
  const std::string dir = temp_dir("inventory");
  write_text_file(dir + "/good.txt", "<blk>\n<sos>\n<eos>\na\nb\n");
  const PhoneInventory inv = PhoneInventory::load(dir + "/good.txt");
  CHECK(inv.num_phones() == 2);
  CHECK(inv.index_of("b") == 4);
  CHECK(inv.symbol(0) == "<blk>");

  write_text_file(dir + "/bad.txt", "<sos>\n<blk>\n<eos>\na\n");
  CHECK_THROWS_AS(PhoneInventory::load(dir + "/bad.txt"), IoError);
  write_text_file(dir + "/dup.txt", "<blk>\n<sos>\n<eos>\na\na\n");
  CHECK_THROWS_AS(PhoneInventory::load(dir + "/dup.txt"), IoError);
  CHECK_THROWS_AS(PhoneInventory({"a", "b:c"}), ValidationError);
}

TEST_CASE("feature file round trip and magic check") {
  const std::string dir = temp_dir("features");
  Mat m(3, 2);
  for (size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = 0.125 * static_cast<double>(i) - 0.3;
  write_features(dir + "/x.bin", m);
  const Mat back = read_features(dir + "/x.bin");
  CHECK(back.rows == 3);
  CHECK(back.cols == 2);
  CHECK(back.data == m.data);
  CHECK_THROWS_AS(read_posteriorgram(dir + "/x.bin"), IoError);
}

TEST_CASE("annotation tokens round trip") {
  const PhoneInventory inv = PhoneInventory::make_default(4);
  std::vector<PositionLabel> ann(3);
  ann[0].kind = PositionLabel::kCorrect;
  ann[1].kind = PositionLabel::kSubstituted;
  ann[1].substituted_with = inv.index_of("d");
  ann[2].kind = PositionLabel::kDeleted;
  const std::string text = format_annotation(ann, inv);
  CHECK(text == "C S:d D");
  CHECK(parse_annotation(text, inv) == ann);
  CHECK_THROWS_AS(parse_annotation("C X", inv), IoError);
}
