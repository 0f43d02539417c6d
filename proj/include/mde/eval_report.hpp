// mde/eval_report.hpp

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

#ifndef MDE_EVAL_REPORT_HPP_
#define MDE_EVAL_REPORT_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mde/md_decision.hpp"

namespace mde {

// (utterance id, prompt position) -> mispronounced flag.
using PositionFlags = std::map<std::pair<std::string, int>, bool>;

struct EvalCounts {
  long c_d = 0;   // flagged by the detector
  long c_h = 0;   // mispronounced per ground truth
  long c_dh = 0;  // flagged by both
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Position-level exact-key tally. Both maps must cover identical keys; the
// error lists what is missing on either side.
EvalCounts tally(const PositionFlags &detector, const PositionFlags &truth);

// precision = c_dh/c_d, recall = c_dh/c_h, F1 their harmonic mean; all three
// fall back to 0 on zero denominators so degenerate detectors stay scorable.
Metrics metrics(const EvalCounts &counts);

double f1_from(double precision, double recall);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double tau = 0.0;
};

// Sweep of "flag when score >= tau" from above the max score downwards: one
// point per distinct score plus the (0,0) endpoint; ends at (1,1). Errors on
// single-class input.
std::vector<RocPoint> roc_points(std::span<const ScoredPosition> scored);

// "fpr \t tpr \t tau" per line.
void write_roc_points(const std::string &path,
                      std::span<const RocPoint> points);

// Fixed-width table plus machine-readable TSV
// ("label \t recall \t precision \t f1"), 3-decimal rounding, rows in input
// order.
struct ReportTable {
  std::string pretty;
  std::string tsv;
};

ReportTable report_table(
    const std::vector<std::pair<std::string, Metrics>> &runs);

}  // namespace mde

#endif  // MDE_EVAL_REPORT_HPP_
