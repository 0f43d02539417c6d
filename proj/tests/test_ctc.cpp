// tests/test_ctc.cpp

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
#include "mde/ctc.hpp"
#include "oracles.hpp"

using namespace mde;

namespace {

constexpr int kBlank = 0;

Posteriorgram make_post(int frames, int symbols,
                        const std::vector<double> &rowmajor) {
  Posteriorgram post;
  post.probs = Mat(frames, symbols);
  post.probs.data = rowmajor;
  return post;
}

}  // namespace

TEST_CASE("single-frame loss is the plain negative log") {
  const auto post = make_post(1, 2, {0.4, 0.6});
  const std::vector<int> target{1};
  CHECK(ctc_loss(post, target, kBlank) ==
        doctest::Approx(-std::log(0.6)).epsilon(1e-12));
}

TEST_CASE("two-frame loss enumerates the three alignments") {
  // paths for target [a]: (a,a), (blk,a), (a,blk)
  const auto post = make_post(2, 2, {0.3, 0.7, 0.2, 0.8});
  const double expected = 0.7 * 0.8 + 0.3 * 0.8 + 0.7 * 0.2;
  const std::vector<int> target{1};
  CHECK(ctc_loss(post, target, kBlank) ==
        doctest::Approx(-std::log(expected)).epsilon(1e-12));
}

TEST_CASE("loss matches brute-force path enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int T = rng.uniform_int(1, 6);
    const int V = rng.uniform_int(2, 4);
    const auto post = oracle::random_posteriorgram(T, V, rng);
    const auto target = oracle::random_feasible_target(T, V, 3, kBlank, rng);
    const double mine = ctc_loss(post, target, kBlank);
    const double ref = oracle::ctc_loss(post, target, kBlank);
    CHECK(std::abs(mine - ref) < 1e-10);
  }
}

TEST_CASE("infeasible targets error; zero-probability targets do not") {
  const auto post = make_post(2, 2, {0.5, 0.5, 0.5, 0.5});
  const std::vector<int> too_long{1, 1};  // needs 3 frames (repeat separator)
  CHECK_THROWS_AS(ctc_loss(post, too_long, kBlank), ValidationError);
  CHECK_THROWS_AS(ctc_loss(post, std::vector<int>{0}, kBlank),
                  ValidationError);  // blank in target

  const auto zero = make_post(1, 2, {1.0, 0.0});
  CHECK(ctc_loss(zero, std::vector<int>{1}, kBlank) ==
        std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(ctc_grad(zero, std::vector<int>{1}, kBlank),
                  ValidationError);
}

TEST_CASE("gradient passes finite differences and occupancy sums to one") {
  Rng rng(5150);
  for (int trial = 0; trial < 12; ++trial) {
    const int T = rng.uniform_int(2, 5);
    const int V = rng.uniform_int(2, 4);
    const auto target = oracle::random_feasible_target(T, V, 3, kBlank, rng);

    Mat logits(T, V);
    for (double &v : logits.data) v = 2.0 * (rng.uniform() - 0.5);
    auto post_of = [&](const Mat &l) {
      Posteriorgram p;
      p.probs = Mat(l.rows, l.cols);
      for (int t = 0; t < l.rows; ++t)
        sharpened_softmax(l.row(t), 1.0, p.probs.row(t));
      return p;
    };

    const Posteriorgram post = post_of(logits);
    double loss = 0.0;
    const Mat grad = ctc_grad(post, target, kBlank, &loss);
    CHECK(loss == doctest::Approx(ctc_loss(post, target, kBlank)));

    // occupancy = softmax - grad must be a distribution per frame
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      for (int k = 0; k < V; ++k) sum += post.probs.at(t, k) - grad.at(t, k);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    auto f = [&](std::span<const double> flat) {
      Mat l(T, V);
      std::copy(flat.begin(), flat.end(), l.data.begin());
      return ctc_loss(post_of(l), target, kBlank);
    };
    const double err = finite_diff_check(f, logits.data, grad.data, 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("a certain target has zero gradient") {
  const auto post = make_post(3, 2, {0.0, 1.0, 0.0, 1.0, 0.0, 1.0});
  const std::vector<int> target{1};
  const Mat grad = ctc_grad(post, target, kBlank);
  for (double v : grad.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("prefix scores telescope to the full loss") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int T = rng.uniform_int(1, 7);
    const int V = rng.uniform_int(2, 4);
    const auto post = oracle::random_posteriorgram(T, V, rng);
    const auto target = oracle::random_feasible_target(T, V, 3, kBlank, rng);

    CtcPrefixState state = ctc_prefix_init(post, kBlank);
    double sum = 0.0;
    for (int sym : target) {
      auto [inc, next] = ctc_prefix_advance(post, state, sym, kBlank);
      sum += inc;
      state = std::move(next);
    }
    sum += ctc_prefix_close(state);
    CHECK(std::abs(sum - (-ctc_loss(post, target, kBlank))) < 1e-9);
  }
}

TEST_CASE("prefix probabilities match brute-force prefix mass") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = rng.uniform_int(1, 5);
    const int V = rng.uniform_int(2, 3);
    const auto post = oracle::random_posteriorgram(T, V, rng);
    const auto prefix = oracle::random_feasible_target(T, V, 2, kBlank, rng);
    if (prefix.empty()) continue;

    CtcPrefixState state = ctc_prefix_init(post, kBlank);
    for (int sym : prefix) {
      auto [inc, next] = ctc_prefix_advance(post, state, sym, kBlank);
      (void)inc;
      state = std::move(next);
    }
    const double ref = oracle::ctc_prefix_prob(post, prefix, kBlank);
    CHECK(state.log_psi == doctest::Approx(std::log(ref)).epsilon(1e-9));
  }
}

TEST_CASE("empty prefix closes to the all-blank run") {
  const auto post = make_post(3, 2, {0.6, 0.4, 0.9, 0.1, 0.5, 0.5});
  const CtcPrefixState state = ctc_prefix_init(post, kBlank);
  CHECK(ctc_prefix_close(state) ==
        doctest::Approx(std::log(0.6 * 0.9 * 0.5)).epsilon(1e-12));
}

TEST_CASE("advancing with an impossible symbol yields -inf") {
  const auto post = make_post(2, 3, {0.5, 0.5, 0.0, 0.5, 0.5, 0.0});
  const CtcPrefixState state = ctc_prefix_init(post, kBlank);
  auto [inc, next] = ctc_prefix_advance(post, state, 2, kBlank);
  CHECK(inc == kNegInf);
  (void)next;
  CHECK_THROWS_AS(ctc_prefix_advance(post, state, kBlank, kBlank),
                  ValidationError);
}

TEST_CASE("beam decoding trivial cases") {
  const std::vector<int> phones{1, 2};
  {
    const auto post = make_post(3, 3, {1, 0, 0, 1, 0, 0, 1, 0, 0});
    const Hypothesis hyp = ctc_beam_decode(post, 4, kBlank, phones);
    CHECK(hyp.symbols.empty());
  }
  {
    // one-hot "a a blk b" collapses to [a, b]
    const auto post =
        make_post(4, 3, {0, 1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1});
    const Hypothesis hyp = ctc_beam_decode(post, 8, kBlank, phones);
    CHECK(hyp.symbols == std::vector<int>{1, 2});
    CHECK(hyp.steps.size() == 2);
    CHECK(hyp.steps[0].alternatives.front().first == 1);
  }
}

TEST_CASE("full-width beam equals the exhaustive MAP sequence") {
  Rng rng(31337);
  for (int trial = 0; trial < 25; ++trial) {
    const int T = rng.uniform_int(2, 5);
    const auto post = oracle::random_posteriorgram(T, 4, rng);
    const std::vector<int> phones{1, 2, 3};
    const Hypothesis hyp = ctc_beam_decode(post, 100000, kBlank, phones);
    CHECK(hyp.symbols == oracle::ctc_map_sequence(post, kBlank));
  }
}

TEST_CASE("beam score is monotone in the width") {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = rng.uniform_int(3, 6);
    const auto post = oracle::random_posteriorgram(T, 4, rng);
    const std::vector<int> phones{1, 2, 3};
    double prev = -std::numeric_limits<double>::infinity();
    for (int width : {1, 2, 4, 8, 1000}) {
      const Hypothesis hyp = ctc_beam_decode(post, width, kBlank, phones);
      CHECK(hyp.score >= prev - 1e-12);
      prev = hyp.score;
    }
  }
}

TEST_CASE("position posteriors on a one-hot spelling") {
  // frames spell exactly "a b"
  const auto post = make_post(2, 3, {0, 1, 0, 0, 0, 1});
  const std::vector<int> prompt{1, 2};
  const auto pp = prompt_position_posterior(post, prompt, kBlank);
  REQUIRE(pp.feasible);
  REQUIRE(pp.p.size() == 2);
  CHECK(pp.p[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pp.p[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a zero-probability prompt phone scores zero") {
  const auto post = make_post(3, 3,
                              {0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0});
  const std::vector<int> prompt{1, 2};
  const auto pp = prompt_position_posterior(post, prompt, kBlank);
  CHECK(pp.p[1] == 0.0);
}

TEST_CASE("position posteriors match the brute-force occupancy") {
  Rng rng(808);
  for (int trial = 0; trial < 25; ++trial) {
    const int T = rng.uniform_int(1, 6);
    const int V = rng.uniform_int(2, 4);
    const auto post = oracle::random_posteriorgram(T, V, rng);
    auto prompt = oracle::random_feasible_target(T, V, 3, kBlank, rng);
    if (prompt.empty()) prompt.push_back(1);
    if (ctc_min_frames(prompt) > T) continue;

    const auto pp = prompt_position_posterior(post, prompt, kBlank);
    REQUIRE(pp.feasible);
    const Mat occ = oracle::alignment_occupancy(post, prompt, kBlank);
    for (size_t i = 0; i < prompt.size(); ++i) {
      double best = 0.0;
      for (int t = 0; t < T; ++t)
        best = std::max(best, occ.at(t, static_cast<int>(2 * i + 1)));
      CHECK(pp.p[i] == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("infeasible prompts report zero posteriors with a flag") {
  const auto post = make_post(1, 3, {0.4, 0.3, 0.3});
  const std::vector<int> prompt{1, 2};
  const auto pp = prompt_position_posterior(post, prompt, kBlank);
  CHECK(!pp.feasible);
  CHECK(pp.p == std::vector<double>{0.0, 0.0});
}

TEST_CASE("posteriorgram validation accepts rows summing to one") {
  auto post = make_post(1, 2, {0.25, 0.75});
  post.validate();
  post.probs.at(0, 0) = 0.5;
  CHECK_THROWS_AS(post.validate(), ValidationError);
}
