// mde/md_decision.cpp

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

#include "mde/md_decision.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mde/io.hpp"
#include "mde/joint_decoder.hpp"

namespace mde {

std::vector<AlignmentOp> align(std::span<const int> prompt,
                               std::span<const int> hyp) {
  require(!prompt.empty(), "align: empty prompt");
  const int L = static_cast<int>(prompt.size());
  const int M = static_cast<int>(hyp.size());
  Mat d(L + 1, M + 1);
  for (int i = 0; i <= L; ++i) d.at(i, 0) = i;
  for (int j = 0; j <= M; ++j) d.at(0, j) = j;
  for (int i = 1; i <= L; ++i) {
    for (int j = 1; j <= M; ++j) {
      const double diag =
          d.at(i - 1, j - 1) + (prompt[i - 1] == hyp[j - 1] ? 0.0 : 1.0);
      d.at(i, j) = std::min({diag, d.at(i - 1, j) + 1.0, d.at(i, j - 1) + 1.0});
    }
  }

  std::vector<AlignmentOp> ops;
  int i = L, j = M;
  while (i > 0 || j > 0) {
    AlignmentOp op;
    if (i > 0 && j > 0 && prompt[i - 1] == hyp[j - 1] &&
        d.at(i, j) == d.at(i - 1, j - 1)) {
      op.kind = AlignmentOp::kMatch;
      op.prompt_index = --i;
      op.hyp_index = --j;
      op.prompt_phone = prompt[i];
      op.hyp_phone = hyp[j];
    } else if (i > 0 && j > 0 && d.at(i, j) == d.at(i - 1, j - 1) + 1.0 &&
               prompt[i - 1] != hyp[j - 1]) {
      op.kind = AlignmentOp::kSubstitute;
      op.prompt_index = --i;
      op.hyp_index = --j;
      op.prompt_phone = prompt[i];
      op.hyp_phone = hyp[j];
    } else if (i > 0 && d.at(i, j) == d.at(i - 1, j) + 1.0) {
      op.kind = AlignmentOp::kDelete;
      op.prompt_index = --i;
      op.prompt_phone = prompt[i];
    } else {
      op.kind = AlignmentOp::kInsert;
      op.hyp_index = --j;
      op.hyp_phone = hyp[j];
    }
    ops.push_back(op);
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

int alignment_cost(std::span<const AlignmentOp> ops) {
  int cost = 0;
  for (const auto &op : ops)
    if (op.kind != AlignmentOp::kMatch) ++cost;
  return cost;
}

std::vector<MDVerdict> decide_sr(std::span<const int> prompt,
                                 const Hypothesis &hyp, int n) {
  require(n >= 1, "decide_sr: n must be >= 1");
  const auto ops = align(prompt, hyp.symbols);
  std::vector<MDVerdict> verdicts;
  verdicts.reserve(prompt.size());
  for (const auto &op : ops) {
    switch (op.kind) {
      case AlignmentOp::kMatch: {
        MDVerdict v;
        v.prompt_index = op.prompt_index;
        verdicts.push_back(v);
        break;
      }
      case AlignmentOp::kSubstitute: {
        MDVerdict v;
        v.prompt_index = op.prompt_index;
        const auto &alts = hyp.steps[op.hyp_index].alternatives;
        const int eff_n = std::min(n, static_cast<int>(alts.size()));
        const auto nbest = step_nbest(hyp, op.hyp_index, eff_n);
        if (std::find(nbest.begin(), nbest.end(), op.prompt_phone) ==
            nbest.end()) {
          v.mispronounced = true;
          v.cause = MDVerdict::kSubstitution;
          v.hyp_phone = op.hyp_phone;
        }
        verdicts.push_back(v);
        break;
      }
      case AlignmentOp::kDelete: {
        MDVerdict v;
        v.prompt_index = op.prompt_index;
        v.mispronounced = true;
        v.cause = MDVerdict::kDeletion;
        verdicts.push_back(v);
        break;
      }
      case AlignmentOp::kInsert:
        break;  // out of scope for MD
    }
  }
  require(verdicts.size() == prompt.size(),
          "decide_sr: verdict count differs from prompt length");
  return verdicts;
}

double confidence_D(double p) {
  require(p >= 0.0 && p <= 1.0,
          "confidence_D: posterior outside [0,1]: " + std::to_string(p));
  return 1.0 / (1.0 + std::exp(p));
}

namespace {

struct SweepOutcome {
  double f1 = -1.0;
  double recall = -1.0;
};

SweepOutcome evaluate_threshold(std::span<const ScoredPosition> dev,
                                double tau, bool flag_below) {
  long flagged = 0, truth = 0, both = 0;
  for (const auto &s : dev) {
    const bool flag = flag_below ? (s.score < tau) : (s.score >= tau);
    if (flag) ++flagged;
    if (s.mispronounced) ++truth;
    if (flag && s.mispronounced) ++both;
  }
  const double precision = flagged ? static_cast<double>(both) / flagged : 0.0;
  const double recall = truth ? static_cast<double>(both) / truth : 0.0;
  SweepOutcome out;
  out.recall = recall;
  out.f1 = (precision + recall) > 0.0
               ? 2.0 * precision * recall / (precision + recall)
               : 0.0;
  return out;
}

}  // namespace

ConfidenceCalibration calibrate_tau(std::span<const ScoredPosition> dev) {
  require(!dev.empty(), "calibrate_tau: empty development set");
  bool has_pos = false, has_neg = false;
  std::set<double> distinct;
  for (const auto &s : dev) {
    (s.mispronounced ? has_pos : has_neg) = true;
    distinct.insert(s.score);
  }
  require(has_pos && has_neg,
          "calibrate_tau: development set must contain both classes");

  std::vector<double> sorted(distinct.begin(), distinct.end());
  std::vector<double> taus;
  taus.push_back(sorted.front() - 1.0);
  for (size_t i = 1; i < sorted.size(); ++i)
    taus.push_back(0.5 * (sorted[i - 1] + sorted[i]));
  taus.push_back(sorted.back() + 1.0);

  ConfidenceCalibration best;
  best.dev_f1 = -1.0;
  double best_recall = -1.0;
  for (bool flag_below : {true, false}) {
    for (double tau : taus) {
      const auto out = evaluate_threshold(dev, tau, flag_below);
      if (out.f1 > best.dev_f1 ||
          (out.f1 == best.dev_f1 && out.recall > best_recall)) {
        best.tau = tau;
        best.flag_below = flag_below;
        best.dev_f1 = out.f1;
        best_recall = out.recall;
      }
    }
  }
  best.grid_size = static_cast<int>(taus.size()) * 2;
  return best;
}

std::vector<MDVerdict> decide_confidence(std::span<const int> prompt,
                                         std::span<const double> posteriors,
                                         const ConfidenceCalibration &cal) {
  require(prompt.size() == posteriors.size(),
          "decide_confidence: posterior count differs from prompt length");
  std::vector<MDVerdict> verdicts;
  verdicts.reserve(prompt.size());
  for (size_t i = 0; i < prompt.size(); ++i) {
    const double d = confidence_D(posteriors[i]);
    MDVerdict v;
    v.prompt_index = static_cast<int>(i);
    v.score = d;
    const bool flagged = cal.flag_below ? (d < cal.tau) : (d >= cal.tau);
    if (flagged) {
      v.mispronounced = true;
      v.cause = MDVerdict::kLowConfidence;
    }
    verdicts.push_back(v);
  }
  return verdicts;
}

namespace {

std::string cause_token(const MDVerdict &v, const PhoneInventory &inv) {
  switch (v.cause) {
    case MDVerdict::kNone:
      return "-";
    case MDVerdict::kSubstitution:
      return "substitution:" + inv.symbol(v.hyp_phone);
    case MDVerdict::kDeletion:
      return "deletion";
    case MDVerdict::kLowConfidence:
      return "low_confidence";
  }
  return "-";
}

}  // namespace

std::string format_verdicts(const std::vector<UtteranceVerdicts> &all,
                            const PhoneInventory &inv) {
  std::string out;
  for (const auto &uv : all) {
    require(uv.verdicts.size() == uv.prompt.size(),
            "verdicts: count differs from prompt length for " + uv.id);
    for (size_t i = 0; i < uv.verdicts.size(); ++i) {
      const MDVerdict &v = uv.verdicts[i];
      require(v.prompt_index == static_cast<int>(i),
              "verdicts: positions out of order for " + uv.id);
      out += uv.id;
      out += '\t';
      out += std::to_string(i);
      out += '\t';
      out += inv.symbol(uv.prompt[i]);
      out += '\t';
      out += v.mispronounced ? "mispronounced" : "correct";
      out += '\t';
      out += cause_token(v, inv);
      out += '\t';
      out += v.score ? format_double(*v.score) : "-";
      out += '\n';
    }
  }
  return out;
}

std::vector<UtteranceVerdicts> parse_verdicts(const std::string &text,
                                              const PhoneInventory &inv) {
  std::vector<UtteranceVerdicts> all;
  for (const auto &line : split_lines(text)) {
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 6) throw IoError("verdict line: expected 6 fields");
    const std::string &id = fields[0];
    if (all.empty() || all.back().id != id) {
      all.push_back(UtteranceVerdicts{id, {}, {}});
    }
    UtteranceVerdicts &uv = all.back();
    MDVerdict v;
    v.prompt_index = static_cast<int>(parse_long(fields[1], "verdict position"));
    if (v.prompt_index != static_cast<int>(uv.verdicts.size()))
      throw IoError("verdict file: positions out of order for " + id);
    uv.prompt.push_back(inv.index_of(fields[2]));
    if (fields[3] == "mispronounced") {
      v.mispronounced = true;
    } else if (fields[3] != "correct") {
      throw IoError("verdict file: bad verdict \"" + fields[3] + "\"");
    }
    const std::string &cause = fields[4];
    if (cause == "-") {
      v.cause = MDVerdict::kNone;
    } else if (cause == "deletion") {
      v.cause = MDVerdict::kDeletion;
    } else if (cause == "low_confidence") {
      v.cause = MDVerdict::kLowConfidence;
    } else if (cause.rfind("substitution:", 0) == 0) {
      v.cause = MDVerdict::kSubstitution;
      v.hyp_phone = inv.index_of(cause.substr(13));
    } else {
      throw IoError("verdict file: bad cause \"" + cause + "\"");
    }
    if (fields[5] != "-")
      v.score = parse_double(fields[5], "verdict score");
    uv.verdicts.push_back(v);
  }
  return all;
}

void write_verdicts(const std::string &path,
                    const std::vector<UtteranceVerdicts> &all,
                    const PhoneInventory &inv) {
  write_text_file(path, format_verdicts(all, inv));
}

std::vector<UtteranceVerdicts> read_verdicts(const std::string &path,
                                             const PhoneInventory &inv) {
  return parse_verdicts(read_text_file(path), inv);
}

}  // namespace mde
