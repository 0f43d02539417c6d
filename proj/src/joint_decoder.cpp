// mde/joint_decoder.cpp

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

#include "mde/joint_decoder.hpp"

#include <algorithm>
#include <cmath>

namespace mde {

void JointConfig::validate() const {
  require(lambda >= 0.0 && lambda <= 1.0, "joint: lambda outside [0,1]");
  require(beam_width >= 1, "joint: beam_width must be >= 1");
  require(max_output_len >= 0, "joint: max_output_len must be >= 0");
  require(nbest_per_step >= 1 && nbest_per_step <= 5,
          "joint: nbest_per_step outside [1,5]");
}

namespace {

struct BeamItem {
  std::vector<int> symbols;
  CtcPrefixState ctc;
  DecoderState dec;
  double ctc_score = 0.0;  // log prefix probability
  double att_score = 0.0;  // accumulated attention log probability
  std::vector<StepRecord> steps;
};

struct Candidate {
  int parent = -1;
  int symbol = -1;
  double joint = kNegInf;
  double ctc = kNegInf;
  double att = kNegInf;
  bool is_eos = false;
  CtcPrefixState advanced;  // phones only
};

}  // namespace

Hypothesis joint_beam_search(const ModelParams &params,
                             const Posteriorgram &post,
                             const EncodedMemory &memory,
                             const PromptEncoding *prompt_mem,
                             const JointConfig &cfg,
                             const PhoneInventory &inv) {
  cfg.validate();
  require(post.frames() == memory.length(),
          "joint: posteriorgram and memory disagree on frame count");
  require(post.symbols() == inv.num_symbols(),
          "joint: posteriorgram width does not match the inventory");
  require(params.augmented() == (prompt_mem != nullptr),
          params.augmented()
              ? "joint: augmented model requires an encoded prompt"
              : "joint: prompt encoding given to a plain model");

  const int blank = inv.blank();
  const int sos = inv.sos();
  const int eos = inv.eos();
  const double lambda = cfg.lambda;
  const int max_len =
      cfg.max_output_len > 0 ? cfg.max_output_len : post.frames();

  BeamItem root;
  root.ctc = ctc_prefix_init(post, blank);
  root.dec = decoder_init(params, memory.length(),
                          prompt_mem ? prompt_mem->length() : 0, sos);
  std::vector<BeamItem> live;
  live.push_back(std::move(root));

  Hypothesis best_finished;
  bool have_finished = false;

  auto joint_of = [lambda](double ctc, double att) {
    // Guard 0 * -inf: a zero weight must erase its term entirely.
    double j = 0.0;
    if (lambda > 0.0) j += lambda * ctc;
    if (lambda < 1.0) j += (1.0 - lambda) * att;
    return j;
  };

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> pool;
    std::vector<std::vector<std::pair<int, double>>> rankings(live.size());
    std::vector<DecoderState> advanced_state(live.size());
    std::vector<int> peaks(live.size());

    for (size_t bi = 0; bi < live.size(); ++bi) {
      BeamItem &item = live[bi];
      AttentionWeights aw = attention_step(params, memory.vectors, item.dec,
                                           AttentionKind::kAcoustic);
      AttentionWeights pw;
      const AttentionWeights *pwp = nullptr;
      if (prompt_mem) {
        pw = attention_step(params, prompt_mem->vectors, item.dec,
                            AttentionKind::kPrompt);
        pwp = &pw;
      }
      auto [logdist, next_state] =
          decoder_step(params, item.dec, aw, pwp, blank, sos);
      advanced_state[bi] = std::move(next_state);
      peaks[bi] = aw.peak();

      std::vector<Candidate> local;
      for (int c = inv.first_phone(); c < inv.num_symbols(); ++c) {
        auto [inc, st] = ctc_prefix_advance(post, item.ctc, c, blank);
        Candidate cand;
        cand.parent = static_cast<int>(bi);
        cand.symbol = c;
        cand.ctc = item.ctc.log_psi + inc;
        cand.att = item.att_score + logdist[c];
        cand.joint = joint_of(cand.ctc, cand.att);
        cand.advanced = std::move(st);
        local.push_back(std::move(cand));
      }
      {
        Candidate cand;
        cand.parent = static_cast<int>(bi);
        cand.symbol = eos;
        cand.is_eos = true;
        cand.ctc = item.ctc.log_psi + ctc_prefix_close(item.ctc);
        cand.att = item.att_score + logdist[eos];
        cand.joint = joint_of(cand.ctc, cand.att);
        local.push_back(std::move(cand));
      }
      std::stable_sort(local.begin(), local.end(),
                       [](const Candidate &a, const Candidate &b) {
                         if (a.joint != b.joint) return a.joint > b.joint;
                         return a.symbol < b.symbol;
                       });
      for (const Candidate &c : local) {
        if (!c.is_eos) rankings[bi].emplace_back(c.symbol, c.joint);
      }
      for (Candidate &c : local) pool.push_back(std::move(c));
    }

    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate &a, const Candidate &b) {
                       if (a.joint != b.joint) return a.joint > b.joint;
                       if (a.symbol != b.symbol) return a.symbol < b.symbol;
                       return a.parent < b.parent;
                     });

    std::vector<BeamItem> next_live;
    int taken = 0;
    for (Candidate &cand : pool) {
      if (taken >= cfg.beam_width) break;
      ++taken;
      const BeamItem &parent = live[cand.parent];
      if (cand.is_eos) {
        if (!have_finished || cand.joint > best_finished.score) {
          Hypothesis hyp;
          hyp.symbols = parent.symbols;
          hyp.steps = parent.steps;
          hyp.score = cand.joint;
          hyp.ctc_score = cand.ctc;
          hyp.att_score = cand.att;
          best_finished = std::move(hyp);
          have_finished = true;
        }
        continue;
      }
      BeamItem item;
      item.symbols = parent.symbols;
      item.symbols.push_back(cand.symbol);
      item.ctc = std::move(cand.advanced);
      item.dec = advanced_state[cand.parent];
      item.dec.prev_symbol = cand.symbol;
      item.ctc_score = cand.ctc;
      item.att_score = cand.att;
      item.steps = parent.steps;

      StepRecord rec;
      rec.symbol = cand.symbol;
      rec.score = cand.joint;
      rec.alternatives = rankings[cand.parent];
      auto self = std::find_if(
          rec.alternatives.begin(), rec.alternatives.end(),
          [&](const auto &p) { return p.first == cand.symbol; });
      std::rotate(rec.alternatives.begin(), self, self + 1);
      if (static_cast<int>(rec.alternatives.size()) > cfg.nbest_per_step)
        rec.alternatives.resize(cfg.nbest_per_step);
      rec.peak_frame = peaks[cand.parent];
      item.steps.push_back(std::move(rec));

      next_live.push_back(std::move(item));
    }
    live = std::move(next_live);
  }

  if (have_finished) return best_finished;

  // Nothing reached eos within the cap: return the best truncated beam.
  require(!live.empty(), "joint: search produced no hypotheses");
  const BeamItem *best = &live.front();
  double best_score = joint_of(best->ctc_score, best->att_score);
  for (const BeamItem &item : live) {
    double s = joint_of(item.ctc_score, item.att_score);
    if (s > best_score) {
      best = &item;
      best_score = s;
    }
  }
  Hypothesis hyp;
  hyp.symbols = best->symbols;
  hyp.steps = best->steps;
  hyp.score = best_score;
  hyp.ctc_score = best->ctc_score;
  hyp.att_score = best->att_score;
  return hyp;
}

std::vector<int> step_nbest(const Hypothesis &hyp, int position, int n) {
  require(position >= 0 && position < static_cast<int>(hyp.steps.size()),
          "step_nbest: position out of range");
  const auto &alts = hyp.steps[position].alternatives;
  require(n >= 1 && n <= static_cast<int>(alts.size()),
          "step_nbest: n outside the stored alternatives count");
  std::vector<int> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(alts[i].first);
  return out;
}

}  // namespace mde
