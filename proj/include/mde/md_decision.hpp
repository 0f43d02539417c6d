// mde/md_decision.hpp

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

#ifndef MDE_MD_DECISION_HPP_
#define MDE_MD_DECISION_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mde/hypothesis.hpp"
#include "mde/inventory.hpp"

namespace mde {

struct AlignmentOp {
  enum Kind { kMatch, kSubstitute, kDelete, kInsert } kind = kMatch;
  int prompt_index = -1;  // match/substitute/delete
  int hyp_index = -1;     // match/substitute/insert
  int prompt_phone = -1;
  int hyp_phone = -1;
};

// Minimal-edit-distance alignment (unit substitution/deletion/insertion
// costs) with deterministic tie-breaking: match > substitute > delete >
// insert. Total cost equals the Levenshtein distance.
std::vector<AlignmentOp> align(std::span<const int> prompt,
                               std::span<const int> hyp);

int alignment_cost(std::span<const AlignmentOp> ops);

struct MDVerdict {
  enum Cause { kNone, kSubstitution, kDeletion, kLowConfidence };

  int prompt_index = -1;
  bool mispronounced = false;
  Cause cause = kNone;
  int hyp_phone = -1;           // substitution verdicts
  std::optional<double> score;  // decision-function value, confidence mode
};

// Recognition-result decision: align the decoded phones with the prompt,
// flag substituted positions unless the prompt phone appears among the top-n
// candidates of the aligned step, flag deleted positions, ignore insertions.
// n is clamped to the alternatives actually stored per step.
std::vector<MDVerdict> decide_sr(std::span<const int> prompt,
                                 const Hypothesis &hyp, int n);

// Decision function over a position posterior, exactly as defined:
// D(p) = 1 / (1 + exp(p)), strictly decreasing on [0,1].
double confidence_D(double p);

struct ScoredPosition {
  double score = 0.0;
  bool mispronounced = false;  // ground truth
};

struct ConfidenceCalibration {
  double tau = 0.0;
  bool flag_below = true;  // flag when D < tau; otherwise when D >= tau
  double dev_f1 = 0.0;
  int grid_size = 0;
};

// Exhaustive ROC-style sweep on development scores: every midpoint between
// consecutive distinct scores plus both boundaries, both polarities. Returns
// the calibration maximizing F1 of the mispronounced class, ties broken
// toward higher recall. The polarity flag absorbs the direction of D.
ConfidenceCalibration calibrate_tau(std::span<const ScoredPosition> dev);

std::vector<MDVerdict> decide_confidence(std::span<const int> prompt,
                                         std::span<const double> posteriors,
                                         const ConfidenceCalibration &cal);

// Verdict file: one line per (utterance, position):
// id \t position \t prompt_phone \t verdict \t cause \t score
// verdict is "correct" or "mispronounced"; cause is "-", "substitution:<ph>",
// "deletion" or "low_confidence"; score is "-" when absent.
struct UtteranceVerdicts {
  std::string id;
  std::vector<int> prompt;
  std::vector<MDVerdict> verdicts;
};

std::string format_verdicts(const std::vector<UtteranceVerdicts> &all,
                            const PhoneInventory &inv);
std::vector<UtteranceVerdicts> parse_verdicts(const std::string &text,
                                              const PhoneInventory &inv);
void write_verdicts(const std::string &path,
                    const std::vector<UtteranceVerdicts> &all,
                    const PhoneInventory &inv);
std::vector<UtteranceVerdicts> read_verdicts(const std::string &path,
                                             const PhoneInventory &inv);

}  // namespace mde

#endif  // MDE_MD_DECISION_HPP_
