// mde/corpus.hpp

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

#ifndef MDE_CORPUS_HPP_
#define MDE_CORPUS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mde/inventory.hpp"
#include "mde/numerics.hpp"

namespace mde {

// Ground-truth label for one prompt position.
struct PositionLabel {
  enum Kind { kCorrect, kSubstituted, kDeleted } kind = kCorrect;
  int substituted_with = -1;  // phone index, kSubstituted only

  bool mispronounced() const { return kind != kCorrect; }
  bool operator==(const PositionLabel &) const = default;
};

// Generator configuration standing in for a recorded learner corpus:
// per-phone Gaussian emissions, integer durations, and controlled
// substitution/deletion injection.
struct SynthConfig {
  PhoneInventory inventory = PhoneInventory::make_default(8);
  int feature_dim = 8;
  Mat emission_means;            // num_phones x feature_dim
  std::vector<double> emission_var;  // per-phone diagonal variance (shared across dims)
  std::vector<double> dur_mean;      // per-phone mean duration in frames
  std::vector<double> dur_spread;    // uniform half-width, clamped to >= 1 frame
  Mat confusion;                 // num_phones x num_phones, row-stochastic
  std::vector<double> deletion_prob;  // per-phone
  double noise_scale = 0.05;
  uint64_t seed = 1;

  // Means on scaled coordinate axes: separable classes whose difficulty is
  // set by separation / (sqrt(var) + noise).
  static SynthConfig make_default(int n_phones, int feature_dim,
                                  double separation = 1.5,
                                  double emission_std = 0.15);

  // Identity confusion and zero deletions (no mispronunciations).
  void clear_errors();
  // Per-position error rate split between substitutions (uniform over other
  // phones) and deletions.
  void set_error_profile(double error_rate, double substitution_fraction);

  void validate() const;
  int num_phones() const { return inventory.num_phones(); }
};

struct Utterance {
  std::string id;
  Mat features;                 // T x feature_dim
  std::vector<int> prompt;      // phone indices (reference text prompt)
  std::vector<int> realized;    // phone indices actually "spoken"
  std::vector<PositionLabel> annotation;  // one per prompt position
  std::vector<int> realized_durations;    // frames per realized phone

  int frames() const { return features.rows; }
  bool mispronounced_at(size_t pos) const {
    return annotation[pos].mispronounced();
  }
};

// Consistency between prompt, annotation, realized, durations and features.
void validate_utterance(const Utterance &utt, const PhoneInventory &inv);

// Per-phone mean realized durations measured on the training split, with a
// global mean fallback for phones never observed. Plays the role of
// forced-alignment duration statistics.
struct DurationStats {
  std::map<int, double> mean_frames;  // phone index -> mean frames
  double global_mean = 0.0;

  double mean_for(int phone) const {
    auto it = mean_frames.find(phone);
    return it == mean_frames.end() ? global_mean : it->second;
  }
};

struct CorpusSplit {
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;
  DurationStats duration_stats;  // computed from train only

  const std::vector<Utterance> &split(const std::string &name) const;
};

struct SplitSpec {
  int n_train = 500;
  int n_dev = 100;
  int n_test = 200;
  int prompt_len_min = 4;
  int prompt_len_max = 8;
  double error_rate = 0.15;       // per position, error-injected utterances
  double substitution_fraction = 2.0 / 3.0;
  double l1_fraction = 0.2;       // error-free utterances per split
};

Utterance synthesize_utterance(const SynthConfig &config,
                               std::span<const int> prompt,
                               const std::string &id, Rng &rng);

// Deterministic in (config.seed, spec): every utterance draws from an
// independently derived stream keyed on its id.
CorpusSplit build_splits(const SynthConfig &config, const SplitSpec &spec);

DurationStats duration_stats(const std::vector<Utterance> &train);

// ---- on-disk corpus ----
//
// <dir>/inventory.txt      one symbol per line, indices by line order
// <dir>/<split>.tsv        id \t prompt \t annotation ("C" | "S:phone" | "D")
// <dir>/features/<id>.bin  magic MDE1, uint32 T, uint32 D, float64 data
// <dir>/duration_stats.tsv "<global> \t mean" then "phone \t mean" lines

void write_features(const std::string &path, const Mat &features);
Mat read_features(const std::string &path);

std::string format_annotation(std::span<const PositionLabel> annotation,
                              const PhoneInventory &inv);
std::vector<PositionLabel> parse_annotation(const std::string &text,
                                            const PhoneInventory &inv);

void save_corpus(const std::string &dir, const CorpusSplit &corpus,
                 const PhoneInventory &inv);

// Loaded view of one split; features are read lazily per utterance.
struct ManifestEntry {
  std::string id;
  std::vector<int> prompt;
  std::vector<PositionLabel> annotation;

  std::vector<int> realized(const PhoneInventory &inv) const;
};

struct LoadedCorpus {
  PhoneInventory inventory;
  DurationStats duration_stats;
  std::map<std::string, std::vector<ManifestEntry>> splits;
  std::string dir;

  const std::vector<ManifestEntry> &split(const std::string &name) const;
  Mat features_for(const std::string &id) const;
};

LoadedCorpus load_corpus(const std::string &dir);

// Realized sequence implied by prompt + annotation (drop deletions, apply
// substitutions).
std::vector<int> apply_annotation(std::span<const int> prompt,
                                  std::span<const PositionLabel> annotation);

}  // namespace mde

#endif  // MDE_CORPUS_HPP_
