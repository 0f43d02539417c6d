// mde/hypothesis.cpp

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

#include "mde/hypothesis.hpp"

#include "mde/io.hpp"

namespace mde {

std::string format_hypothesis_line(const Hypothesis &hyp,
                                   const PhoneInventory &inv) {
  require(hyp.steps.size() == hyp.symbols.size(),
          "hypothesis: step records out of sync with symbols");
  std::string line = hyp.id;
  line += '\t';
  line += inv.format_phone_sequence(hyp.symbols);
  line += '\t';
  line += format_double(hyp.score);
  for (const auto &step : hyp.steps) {
    require(!step.alternatives.empty() &&
                step.alternatives.front().first == step.symbol,
            "hypothesis: emitted symbol must rank first");
    line += '\t';
    for (size_t i = 0; i < step.alternatives.size(); ++i) {
      if (i) line += '|';
      line += inv.symbol(step.alternatives[i].first);
      line += ':';
      line += format_double(step.alternatives[i].second);
    }
  }
  return line;
}

Hypothesis parse_hypothesis_line(const std::string &line,
                                 const PhoneInventory &inv) {
  auto fields = split_on(line, '\t');
  if (fields.size() < 3) throw IoError("hypothesis line: too few fields");
  Hypothesis hyp;
  hyp.id = fields[0];
  hyp.symbols = inv.parse_phone_sequence(fields[1]);
  hyp.score = parse_double(fields[2], "hypothesis score");
  hyp.ctc_score = hyp.score;
  for (size_t f = 3; f < fields.size(); ++f) {
    StepRecord rec;
    for (const auto &alt : split_on(fields[f], '|')) {
      auto sep = alt.rfind(':');
      if (sep == std::string::npos)
        throw IoError("hypothesis step field missing ':' separator");
      int sym = inv.index_of(alt.substr(0, sep));
      double score = parse_double(alt.substr(sep + 1), "hypothesis step score");
      rec.alternatives.emplace_back(sym, score);
    }
    rec.symbol = rec.alternatives.front().first;
    rec.score = rec.alternatives.front().second;
    hyp.steps.push_back(std::move(rec));
  }
  if (hyp.steps.size() != hyp.symbols.size())
    throw IoError("hypothesis line: " + std::to_string(hyp.symbols.size()) +
                  " symbols but " + std::to_string(hyp.steps.size()) +
                  " step records");
  return hyp;
}

void write_hypotheses(const std::string &path,
                      const std::vector<Hypothesis> &hyps,
                      const PhoneInventory &inv) {
  std::string out;
  for (const auto &h : hyps) {
    out += format_hypothesis_line(h, inv);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<Hypothesis> read_hypotheses(const std::string &path,
                                        const PhoneInventory &inv) {
  std::vector<Hypothesis> hyps;
  for (const auto &line : split_lines(read_text_file(path))) {
    if (line.empty()) continue;
    hyps.push_back(parse_hypothesis_line(line, inv));
  }
  return hyps;
}

}  // namespace mde
