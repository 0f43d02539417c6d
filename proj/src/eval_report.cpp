// mde/eval_report.cpp

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

#include "mde/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mde/io.hpp"

namespace mde {

EvalCounts tally(const PositionFlags &detector, const PositionFlags &truth) {
  std::string missing;
  int missing_count = 0;
  auto note_missing = [&](const char *side, const auto &key) {
    if (missing_count < 8) {
      missing += std::string(" [") + side + "] " + key.first + ":" +
                 std::to_string(key.second);
    }
    ++missing_count;
  };
  for (const auto &[key, flag] : detector) {
    (void)flag;
    if (!truth.count(key)) note_missing("no-truth", key);
  }
  for (const auto &[key, flag] : truth) {
    (void)flag;
    if (!detector.count(key)) note_missing("no-verdict", key);
  }
  if (missing_count > 0)
    throw ValidationError("tally: " + std::to_string(missing_count) +
                          " mismatched position keys:" + missing);

  EvalCounts counts;
  for (const auto &[key, flagged] : detector) {
    const bool is_true = truth.at(key);
    if (flagged) ++counts.c_d;
    if (is_true) ++counts.c_h;
    if (flagged && is_true) ++counts.c_dh;
  }
  return counts;
}

double f1_from(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Metrics metrics(const EvalCounts &counts) {
  require(counts.c_d >= 0 && counts.c_h >= 0 && counts.c_dh >= 0 &&
              counts.c_dh <= std::min(counts.c_d, counts.c_h),
          "metrics: inconsistent counts");
  Metrics m;
  m.precision =
      counts.c_d ? static_cast<double>(counts.c_dh) / counts.c_d : 0.0;
  m.recall = counts.c_h ? static_cast<double>(counts.c_dh) / counts.c_h : 0.0;
  m.f1 = f1_from(m.precision, m.recall);
  return m;
}

std::vector<RocPoint> roc_points(std::span<const ScoredPosition> scored) {
  require(!scored.empty(), "roc_points: empty input");
  long pos = 0, neg = 0;
  for (const auto &s : scored) (s.mispronounced ? pos : neg) += 1;
  require(pos > 0 && neg > 0, "roc_points: input must contain both classes");

  std::vector<ScoredPosition> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPosition &a, const ScoredPosition &b) {
              return a.score > b.score;
            });

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, sorted.front().score + 1.0});
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    const double tau = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == tau) {
      (sorted[i].mispronounced ? tp : fp) += 1;
      ++i;
    }
    points.push_back({static_cast<double>(fp) / neg,
                      static_cast<double>(tp) / pos, tau});
  }
  return points;
}

void write_roc_points(const std::string &path,
                      std::span<const RocPoint> points) {
  std::string out;
  for (const auto &p : points) {
    out += format_double(p.fpr);
    out += '\t';
    out += format_double(p.tpr);
    out += '\t';
    out += format_double(p.tau);
    out += '\n';
  }
  write_text_file(path, out);
}

namespace {

std::string three_places(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

ReportTable report_table(
    const std::vector<std::pair<std::string, Metrics>> &runs) {
  require(!runs.empty(), "report_table: no runs");
  size_t label_w = std::string("system").size();
  for (const auto &[label, m] : runs) {
    (void)m;
    label_w = std::max(label_w, label.size());
  }

  ReportTable table;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %7s  %9s  %6s\n",
                static_cast<int>(label_w), "system", "recall", "precision",
                "f1");
  table.pretty = line;
  table.pretty += std::string(label_w + 2 + 7 + 2 + 9 + 2 + 6, '-') + "\n";
  for (const auto &[label, m] : runs) {
    std::snprintf(line, sizeof(line), "%-*s  %7s  %9s  %6s\n",
                  static_cast<int>(label_w), label.c_str(),
                  three_places(m.recall).c_str(),
                  three_places(m.precision).c_str(),
                  three_places(m.f1).c_str());
    table.pretty += line;
    table.tsv += label + "\t" + three_places(m.recall) + "\t" +
                 three_places(m.precision) + "\t" + three_places(m.f1) + "\n";
  }
  return table;
}

}  // namespace mde
