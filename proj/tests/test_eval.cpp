// tests/test_eval.cpp

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
#include "mde/eval_report.hpp"

using namespace mde;

TEST_CASE("tally counts flagged, true and joint positions") {
  PositionFlags det, truth;
  // 10 positions: 3 truly mispronounced, 4 flagged, 2 overlapping
  for (int i = 0; i < 10; ++i) {
    det[{"u", i}] = (i == 0 || i == 1 || i == 5 || i == 6);
    truth[{"u", i}] = (i == 0 || i == 1 || i == 2);
  }
  const EvalCounts counts = tally(det, truth);
  CHECK(counts.c_d == 4);
  CHECK(counts.c_h == 3);
  CHECK(counts.c_dh == 2);

  const Metrics m = metrics(counts);
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1 == doctest::Approx(2 * 0.5 * (2.0 / 3) / (0.5 + 2.0 / 3)));
}

TEST_CASE("tally edge cases") {
  PositionFlags det, truth;
  for (int i = 0; i < 5; ++i) {
    det[{"u", i}] = (i < 2);
    truth[{"u", i}] = (i < 2);
  }
  const EvalCounts exact = tally(det, truth);
  CHECK(exact.c_d == exact.c_h);
  CHECK(exact.c_h == exact.c_dh);

  for (auto &[k, v] : det) v = false;
  const EvalCounts none = tally(det, truth);
  CHECK(none.c_d == 0);
  CHECK(none.c_dh == 0);
  CHECK(metrics(none).precision == 0.0);
  CHECK(metrics(none).recall == 0.0);
  CHECK(metrics(none).f1 == 0.0);

  det.erase({"u", 4});
  CHECK_THROWS_WITH_AS(tally(det, truth), doctest::Contains("u:4"),
                       ValidationError);
}

TEST_CASE("tally is invariant to insertion order") {
  PositionFlags a, b;
  for (int i = 9; i >= 0; --i) a[{"x", i}] = i % 2 == 0;
  for (int i = 0; i < 10; ++i) b[{"x", i}] = i % 2 == 0;
  PositionFlags truth;
  for (int i = 0; i < 10; ++i) truth[{"x", i}] = i % 3 == 0;
  const EvalCounts ca = tally(a, truth);
  const EvalCounts cb = tally(b, truth);
  CHECK(ca.c_d == cb.c_d);
  CHECK(ca.c_h == cb.c_h);
  CHECK(ca.c_dh == cb.c_dh);
}

TEST_CASE("f1 reproduces the published triples") {
  struct Row {
    double recall, precision, printed_f1;
  };
  // recall/precision/F1 rows of the three result tables
  const Row rows[] = {
      {0.518, 0.635, 0.570}, {0.695, 0.613, 0.652}, {0.689, 0.509, 0.586},
      {0.708, 0.679, 0.692}, {0.706, 0.656, 0.680}, {0.534, 0.743, 0.621},
      {0.445, 0.777, 0.566}, {0.385, 0.794, 0.518}, {0.346, 0.803, 0.483},
      {0.718, 0.684, 0.702}, {0.718, 0.684, 0.701},
  };
  for (const auto &row : rows) {
    const double f1 = f1_from(row.precision, row.recall);
    const double rounded = std::round(f1 * 1000.0) / 1000.0;
    CHECK(std::abs(rounded - row.printed_f1) <= 0.001 + 1e-12);
  }
}

TEST_CASE("f1 sits between precision and recall") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = 0.05 + 0.9 * rng.uniform();
    const double r = 0.05 + 0.9 * rng.uniform();
    const double f1 = f1_from(p, r);
    CHECK(f1 >= std::min(p, r) - 1e-12);
    CHECK(f1 <= std::max(p, r) + 1e-12);
  }
  CHECK(f1_from(0.0, 0.0) == 0.0);
}

TEST_CASE("roc endpoints and monotonicity") {
  std::vector<ScoredPosition> scored;
  // perfect separation: mispronounced scores all higher
  for (double s : {0.9, 0.8}) scored.push_back({s, true});
  for (double s : {0.2, 0.1, 0.15}) scored.push_back({s, false});
  const auto points = roc_points(scored);
  CHECK(points.front().fpr == 0.0);
  CHECK(points.front().tpr == 0.0);
  CHECK(points.back().fpr == 1.0);
  CHECK(points.back().tpr == 1.0);
  bool hits_corner = false;
  for (const auto &p : points)
    if (p.fpr == 0.0 && p.tpr == 1.0) hits_corner = true;
  CHECK(hits_corner);
  for (size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].fpr >= points[i - 1].fpr);
    CHECK(points[i].tpr >= points[i - 1].tpr);
  }
}

TEST_CASE("a coin-flip score hugs the diagonal") {
  Rng rng(123);
  std::vector<ScoredPosition> scored(10000);
  for (auto &s : scored) {
    s.score = rng.uniform();
    s.mispronounced = rng.uniform() < 0.5;
  }
  const auto points = roc_points(scored);
  for (const auto &p : points) CHECK(std::abs(p.tpr - p.fpr) < 0.05);
}

TEST_CASE("roc rejects single-class input") {
  std::vector<ScoredPosition> scored{{0.5, true}, {0.7, true}};
  CHECK_THROWS_AS(roc_points(scored), ValidationError);
}

TEST_CASE("report tables round to three decimals and keep order") {
  Metrics a;
  a.recall = 0.7081;
  a.precision = 0.6789;
  a.f1 = 0.6932;
  Metrics b;
  b.recall = 1.0;
  b.precision = 0.25;
  b.f1 = 0.4;
  const ReportTable table = report_table({{"zeta", a}, {"alpha", b}});
  CHECK(table.tsv ==
        "zeta\t0.708\t0.679\t0.693\nalpha\t1.000\t0.250\t0.400\n");
  CHECK(table.pretty.find("zeta") < table.pretty.find("alpha"));
  CHECK(table.pretty.find("recall") != std::string::npos);
  CHECK_THROWS_AS(report_table({}), ValidationError);
}
