// mde/hypothesis.hpp

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

#ifndef MDE_HYPOTHESIS_HPP_
#define MDE_HYPOTHESIS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "mde/inventory.hpp"

namespace mde {

// One decoding step of the winning beam. `alternatives` is the ranked
// candidate list at this step, scores descending, with the emitted symbol at
// rank 1.
struct StepRecord {
  int symbol = -1;
  double score = 0.0;
  std::vector<std::pair<int, double>> alternatives;
  int peak_frame = -1;
};

struct Hypothesis {
  std::string id;
  std::vector<int> symbols;
  double score = 0.0;
  // Interpolation components of `score` (score == lambda*ctc + (1-lambda)*att
  // for the joint decoder; ctc only for pure CTC decoding).
  double ctc_score = 0.0;
  double att_score = 0.0;
  std::vector<StepRecord> steps;
};

// Hypothesis dump: one line per utterance, tab-separated: id, decoded phones
// (space-separated), total score, then one field per step formatted
// "symbol:score|alt1:score|...". Peak frames and score components are
// in-memory diagnostics and are not part of the format.
std::string format_hypothesis_line(const Hypothesis &hyp,
                                   const PhoneInventory &inv);
Hypothesis parse_hypothesis_line(const std::string &line,
                                 const PhoneInventory &inv);

void write_hypotheses(const std::string &path,
                      const std::vector<Hypothesis> &hyps,
                      const PhoneInventory &inv);
std::vector<Hypothesis> read_hypotheses(const std::string &path,
                                        const PhoneInventory &inv);

}  // namespace mde

#endif  // MDE_HYPOTHESIS_HPP_
