// tests/test_joint.cpp

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

#include <cmath>

#include "doctest.h"
#include "mde/joint_decoder.hpp"
#include "oracles.hpp"

using namespace mde;

namespace {

struct TinySetup {
  PhoneInventory inv = PhoneInventory::make_default(3);  // 6 symbols total
  ModelParams params;
  Mat features;
  EncodedMemory memory;
  Posteriorgram post;

  explicit TinySetup(uint64_t seed, int frames = 5) {
    ModelShape shape;
    shape.feature_dim = 3;
    shape.n_symbols = inv.num_symbols();
    shape.hidden = 8;
    shape.attn_dim = 6;
    shape.conv_filters = 2;
    shape.conv_width = 3;
    params = init_model(shape, AugmentMode::kNone, 1.0, inv.hash(), seed);
    Rng rng(seed + 1);
    features = Mat(frames, 3);
    for (double &v : features.data) v = rng.normal();
    memory = encode_acoustic(params, features);
    post = acoustic_posteriorgram(params, memory);
  }
};

// Teacher-forced attention log-probability of `symbols` followed by eos.
double attention_sequence_score(const ModelParams &params,
                                const PhoneInventory &inv,
                                const EncodedMemory &memory,
                                const std::vector<int> &symbols) {
  DecoderState state =
      decoder_init(params, memory.length(), 0, PhoneInventory::kSos);
  double total = 0.0;
  std::vector<int> with_eos = symbols;
  with_eos.push_back(inv.eos());
  for (int sym : with_eos) {
    const AttentionWeights aw = attention_step(params, memory.vectors, state,
                                               AttentionKind::kAcoustic);
    auto [logdist, next] =
        decoder_step(params, state, aw, nullptr, inv.blank(), inv.sos());
    total += logdist[sym];
    state = std::move(next);
    state.prev_symbol = sym;
  }
  return total;
}

// Exhaustive attention-only argmax over phone sequences up to max_len.
std::vector<int> attention_best_sequence(const ModelParams &params,
                                         const PhoneInventory &inv,
                                         const EncodedMemory &memory,
                                         int max_len) {
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> current;
  auto walk = [&](auto &&self) -> void {
    const double score =
        attention_sequence_score(params, inv, memory, current);
    if (score > best_score) {
      best_score = score;
      best = current;
    }
    if (static_cast<int>(current.size()) == max_len) return;
    for (int c = inv.first_phone(); c < inv.num_symbols(); ++c) {
      current.push_back(c);
      self(self);
      current.pop_back();
    }
  };
  walk(walk);
  return best;
}

// CTC prefix score of a whole sequence, closed at eos.
double ctc_sequence_score(const Posteriorgram &post,
                          const std::vector<int> &symbols, int blank) {
  CtcPrefixState state = ctc_prefix_init(post, blank);
  double total = 0.0;
  for (int sym : symbols) {
    auto [inc, next] = ctc_prefix_advance(post, state, sym, blank);
    total += inc;
    state = std::move(next);
  }
  return total + ctc_prefix_close(state);
}

}  // namespace

TEST_CASE("joint score interpolates its components linearly") {
  const TinySetup setup(17);
  for (double lambda : {0.0, 0.25, 0.6, 1.0}) {
    JointConfig cfg;
    cfg.lambda = lambda;
    cfg.beam_width = 6;
    cfg.max_output_len = 5;
    const Hypothesis hyp = joint_beam_search(setup.params, setup.post,
                                             setup.memory, nullptr, cfg,
                                             setup.inv);
    double mixed = 0.0;
    if (lambda > 0.0) mixed += lambda * hyp.ctc_score;
    if (lambda < 1.0) mixed += (1.0 - lambda) * hyp.att_score;
    CHECK(hyp.score == doctest::Approx(mixed).epsilon(1e-12));

    // components must equal independent rescoring of the winner
    CHECK(hyp.ctc_score ==
          doctest::Approx(
              ctc_sequence_score(setup.post, hyp.symbols, setup.inv.blank()))
              .epsilon(1e-9));
    CHECK(hyp.att_score ==
          doctest::Approx(attention_sequence_score(setup.params, setup.inv,
                                                   setup.memory, hyp.symbols))
              .epsilon(1e-9));
  }
}

TEST_CASE("lambda one reduces to pure CTC decoding") {
  for (uint64_t seed : {4u, 9u, 23u}) {
    const TinySetup setup(seed, 5);
    JointConfig cfg;
    cfg.lambda = 1.0;
    cfg.beam_width = 100000;
    cfg.max_output_len = 5;
    const Hypothesis joint = joint_beam_search(setup.params, setup.post,
                                               setup.memory, nullptr, cfg,
                                               setup.inv);
    std::vector<int> phones;
    for (int c = setup.inv.first_phone(); c < setup.inv.num_symbols(); ++c)
      phones.push_back(c);
    const Hypothesis pure =
        ctc_beam_decode(setup.post, 100000, setup.inv.blank(), phones);
    CHECK(joint.symbols == pure.symbols);
  }
}

TEST_CASE("lambda zero reduces to exhaustive attention decoding") {
  for (uint64_t seed : {5u, 12u}) {
    const TinySetup setup(seed, 4);
    JointConfig cfg;
    cfg.lambda = 0.0;
    cfg.beam_width = 100000;
    cfg.max_output_len = 3;
    const Hypothesis joint = joint_beam_search(setup.params, setup.post,
                                               setup.memory, nullptr, cfg,
                                               setup.inv);
    const auto best =
        attention_best_sequence(setup.params, setup.inv, setup.memory, 3);
    CHECK(joint.symbols == best);
  }
}

TEST_CASE("best scores never degrade as the beam widens") {
  for (uint64_t seed : {3u, 31u, 77u}) {
    const TinySetup setup(seed, 6);
    JointConfig cfg;
    cfg.lambda = 0.3;
    cfg.max_output_len = 6;
    double prev = -std::numeric_limits<double>::infinity();
    for (int width : {1, 2, 4, 16, 512}) {
      cfg.beam_width = width;
      const Hypothesis hyp = joint_beam_search(setup.params, setup.post,
                                               setup.memory, nullptr, cfg,
                                               setup.inv);
      CHECK(hyp.score >= prev - 1e-12);
      prev = hyp.score;
    }
  }
}

TEST_CASE("step records carry a ranked candidate list led by the emission") {
  const TinySetup setup(41, 6);
  JointConfig cfg;
  cfg.lambda = 0.4;
  cfg.beam_width = 4;
  cfg.max_output_len = 6;
  cfg.nbest_per_step = 3;
  const Hypothesis hyp = joint_beam_search(setup.params, setup.post,
                                           setup.memory, nullptr, cfg,
                                           setup.inv);
  REQUIRE(hyp.steps.size() == hyp.symbols.size());
  for (size_t i = 0; i < hyp.steps.size(); ++i) {
    const auto &step = hyp.steps[i];
    CHECK(step.symbol == hyp.symbols[i]);
    REQUIRE(!step.alternatives.empty());
    CHECK(step.alternatives.size() <= 3);
    CHECK(step.alternatives.front().first == step.symbol);
    for (size_t k = 2; k < step.alternatives.size(); ++k)
      CHECK(step.alternatives[k - 1].second >=
            step.alternatives[k].second - 1e-12);
    CHECK(step.peak_frame >= 0);
    CHECK(step.peak_frame < setup.post.frames());
  }
}

TEST_CASE("step_nbest slices the stored ranking") {
  Hypothesis hyp;
  hyp.symbols = {4};
  StepRecord rec;
  rec.symbol = 4;
  rec.score = -0.5;
  rec.alternatives = {{4, -0.5}, {5, -0.9}, {3, -1.4}};
  hyp.steps.push_back(rec);

  CHECK(step_nbest(hyp, 0, 1) == std::vector<int>{4});
  CHECK(step_nbest(hyp, 0, 2) == std::vector<int>{4, 5});
  CHECK(step_nbest(hyp, 0, 3) == std::vector<int>{4, 5, 3});
  CHECK_THROWS_AS(step_nbest(hyp, 0, 4), ValidationError);
  CHECK_THROWS_AS(step_nbest(hyp, 1, 1), ValidationError);
  CHECK_THROWS_AS(step_nbest(hyp, 0, 0), ValidationError);
}

TEST_CASE("augmentation contract at decode time") {
  const TinySetup setup(8);
  JointConfig cfg;
  const PhoneInventory inv = setup.inv;
  ModelShape shape = setup.params.shape;
  const ModelParams aug = init_model(shape, AugmentMode::kPs, 1.0, inv.hash(), 3);
  CHECK_THROWS_AS(joint_beam_search(aug, setup.post, setup.memory, nullptr,
                                    cfg, inv),
                  ValidationError);
  const PromptEncoding pe = encode_prompt(aug, std::vector<int>{3, 4});
  CHECK_THROWS_AS(joint_beam_search(setup.params, setup.post, setup.memory,
                                    &pe, cfg, inv),
                  ValidationError);
  // and the well-formed augmented call runs
  const Hypothesis hyp =
      joint_beam_search(aug, setup.post, setup.memory, &pe, cfg, inv);
  CHECK(hyp.steps.size() == hyp.symbols.size());
}

TEST_CASE("hypothesis dump round-trips what detection needs") {
  const TinySetup setup(52, 6);
  JointConfig cfg;
  cfg.lambda = 0.3;
  cfg.beam_width = 4;
  Hypothesis hyp = joint_beam_search(setup.params, setup.post, setup.memory,
                                     nullptr, cfg, setup.inv);
  hyp.id = "utt-7";
  const std::string line = format_hypothesis_line(hyp, setup.inv);
  const Hypothesis back = parse_hypothesis_line(line, setup.inv);
  CHECK(back.id == hyp.id);
  CHECK(back.symbols == hyp.symbols);
  CHECK(back.score == hyp.score);
  REQUIRE(back.steps.size() == hyp.steps.size());
  for (size_t i = 0; i < back.steps.size(); ++i) {
    CHECK(back.steps[i].symbol == hyp.steps[i].symbol);
    CHECK(back.steps[i].alternatives == hyp.steps[i].alternatives);
  }
}
