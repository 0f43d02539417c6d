// mde/pipeline.hpp

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

#ifndef MDE_PIPELINE_HPP_
#define MDE_PIPELINE_HPP_

#include <map>
#include <string>
#include <vector>

#include "mde/corpus.hpp"
#include "mde/eval_report.hpp"

namespace mde {

// Flat key=value configuration with defaults for every key; setting an
// unknown key is an error. One file drives all stages; `--set k=v` overrides
// individual entries.
class PipelineConfig {
 public:
  PipelineConfig();

  static PipelineConfig from_file(const std::string &path);
  void apply_file(const std::string &path);
  void set(const std::string &key, const std::string &value);

  const std::string &get(const std::string &key) const;
  double get_double(const std::string &key) const;
  long get_long(const std::string &key) const;
  bool get_bool(const std::string &key) const;

  uint64_t seed() const { return static_cast<uint64_t>(get_long("seed")); }
  int jobs() const { return static_cast<int>(get_long("jobs")); }
  std::string corpus_dir() const { return get("paths.corpus_dir"); }
  std::string out_dir() const { return get("paths.out_dir"); }
  std::string checkpoint_path() const;

  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

// Pipeline stages; each reads and writes only the documented files, so any
// stage can run against hand-built inputs.
void cmd_synth(const PipelineConfig &cfg);
void cmd_train(const PipelineConfig &cfg);
void cmd_decode(const PipelineConfig &cfg);
void cmd_calibrate(const PipelineConfig &cfg);
void cmd_detect(const PipelineConfig &cfg);
void cmd_evaluate(const PipelineConfig &cfg);
// Full experiment: train / decode / detect / calibrate / evaluate per
// configured variant, one result row each.
void cmd_run(const PipelineConfig &cfg);

// Dispatch by stage name; throws ValidationError on unknown stage.
void run_stage(const PipelineConfig &cfg, const std::string &stage);

// In-memory corpus view for training: loads every feature matrix of the given
// manifest split.
CorpusSplit materialize_corpus(const LoadedCorpus &corpus);

// Ground-truth position flags of one split, keyed (id, position).
PositionFlags annotation_flags(const std::vector<ManifestEntry> &entries);
PositionFlags verdict_flags(const std::vector<UtteranceVerdicts> &verdicts);

// Deterministic-order worker pool: runs fn(0..n-1) on `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)> &fn);

}  // namespace mde

#endif  // MDE_PIPELINE_HPP_
