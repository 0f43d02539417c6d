// mde/corpus.cpp

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

#include "mde/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mde/io.hpp"

namespace mde {

namespace {

constexpr char kFeatMagic[4] = {'M', 'D', 'E', '1'};

int sample_row(const Mat &stochastic, int row, Rng &rng) {
  double u = rng.uniform();
  double cum = 0.0;
  for (int j = 0; j < stochastic.cols; ++j) {
    cum += stochastic.at(row, j);
    if (u < cum) return j;
  }
  return stochastic.cols - 1;
}

std::string padded_id(const std::string &split, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05d", split.c_str(), i);
  return buf;
}

}  // namespace

SynthConfig SynthConfig::make_default(int n_phones, int feature_dim,
                                      double separation, double emission_std) {
  SynthConfig cfg;
  cfg.inventory = PhoneInventory::make_default(n_phones);
  cfg.feature_dim = feature_dim;
  cfg.emission_means = Mat(n_phones, feature_dim);
  for (int p = 0; p < n_phones; ++p) {
    cfg.emission_means.at(p, p % feature_dim) += separation;
    // Second component keeps classes apart once phones outnumber dimensions.
    cfg.emission_means.at(p, (p / feature_dim + p) % feature_dim) +=
        0.5 * separation * ((p / feature_dim) % 2 ? -1.0 : 1.0);
  }
  cfg.emission_var.assign(n_phones, emission_std * emission_std);
  cfg.dur_mean.assign(n_phones, 3.0);
  cfg.dur_spread.assign(n_phones, 1.0);
  cfg.confusion = Mat(n_phones, n_phones);
  for (int p = 0; p < n_phones; ++p) cfg.confusion.at(p, p) = 1.0;
  cfg.deletion_prob.assign(n_phones, 0.0);
  return cfg;
}

void SynthConfig::clear_errors() {
  confusion.fill(0.0);
  for (int p = 0; p < num_phones(); ++p) confusion.at(p, p) = 1.0;
  std::fill(deletion_prob.begin(), deletion_prob.end(), 0.0);
}

void SynthConfig::set_error_profile(double error_rate,
                                    double substitution_fraction) {
  require(error_rate >= 0.0 && error_rate <= 1.0,
          "synth: error_rate outside [0,1]");
  require(substitution_fraction >= 0.0 && substitution_fraction <= 1.0,
          "synth: substitution_fraction outside [0,1]");
  const int n = num_phones();
  const double p_sub = error_rate * substitution_fraction;
  const double p_del = error_rate * (1.0 - substitution_fraction);
  confusion.fill(0.0);
  for (int p = 0; p < n; ++p) {
    confusion.at(p, p) = 1.0 - p_sub;
    if (n > 1) {
      for (int q = 0; q < n; ++q)
        if (q != p) confusion.at(p, q) = p_sub / (n - 1);
    } else {
      confusion.at(p, p) = 1.0;
    }
  }
  std::fill(deletion_prob.begin(), deletion_prob.end(), p_del);
}

void SynthConfig::validate() const {
  const int n = num_phones();
  require(n >= 1, "synth: empty inventory");
  require(feature_dim >= 1, "synth: feature_dim must be >= 1");
  require(emission_means.rows == n && emission_means.cols == feature_dim,
          "synth: emission_means shape mismatch");
  require(static_cast<int>(emission_var.size()) == n &&
              static_cast<int>(dur_mean.size()) == n &&
              static_cast<int>(dur_spread.size()) == n &&
              static_cast<int>(deletion_prob.size()) == n,
          "synth: per-phone parameter size mismatch");
  for (double v : emission_var) require(v > 0.0, "synth: variance must be > 0");
  for (double d : dur_mean) require(d >= 1.0, "synth: durations must be >= 1");
  require(confusion.rows == n && confusion.cols == n,
          "synth: confusion shape mismatch");
  for (int p = 0; p < n; ++p) {
    double sum = 0.0;
    for (int q = 0; q < n; ++q) {
      require(confusion.at(p, q) >= 0.0, "synth: negative confusion entry");
      sum += confusion.at(p, q);
    }
    require(std::abs(sum - 1.0) <= 1e-9,
            "synth: confusion row " + std::to_string(p) + " sums to " +
                std::to_string(sum));
  }
  for (double d : deletion_prob)
    require(d >= 0.0 && d <= 1.0, "synth: deletion prob outside [0,1]");
  require(noise_scale >= 0.0, "synth: negative noise scale");
}

Utterance synthesize_utterance(const SynthConfig &config,
                               std::span<const int> prompt,
                               const std::string &id, Rng &rng) {
  config.validate();
  require(!prompt.empty(), "synthesize_utterance: empty prompt");
  const int first = config.inventory.first_phone();
  for (int p : prompt) {
    require(config.inventory.is_phone(p),
            "synthesize_utterance: prompt symbol " + std::to_string(p) +
                " is not a phone");
  }

  Utterance utt;
  utt.id = id;
  utt.prompt.assign(prompt.begin(), prompt.end());

  for (int p : prompt) {
    const int pi = p - first;
    PositionLabel label;
    if (rng.uniform() < config.deletion_prob[pi]) {
      label.kind = PositionLabel::kDeleted;
    } else {
      int drawn = sample_row(config.confusion, pi, rng);
      if (drawn != pi) {
        label.kind = PositionLabel::kSubstituted;
        label.substituted_with = drawn + first;
        utt.realized.push_back(drawn + first);
      } else {
        utt.realized.push_back(p);
      }
    }
    utt.annotation.push_back(label);
  }

  int total_frames = 0;
  for (int p : utt.realized) {
    const int pi = p - first;
    int lo = static_cast<int>(std::llround(config.dur_mean[pi] -
                                           config.dur_spread[pi]));
    int hi = static_cast<int>(std::llround(config.dur_mean[pi] +
                                           config.dur_spread[pi]));
    int dur = std::max(1, rng.uniform_int(lo, hi));
    utt.realized_durations.push_back(dur);
    total_frames += dur;
  }

  utt.features = Mat(total_frames, config.feature_dim);
  int t = 0;
  for (size_t k = 0; k < utt.realized.size(); ++k) {
    const int pi = utt.realized[k] - first;
    const double std_eff =
        std::sqrt(config.emission_var[pi] +
                  config.noise_scale * config.noise_scale);
    for (int d = 0; d < utt.realized_durations[k]; ++d, ++t) {
      for (int j = 0; j < config.feature_dim; ++j)
        utt.features.at(t, j) =
            config.emission_means.at(pi, j) + std_eff * rng.normal();
    }
  }
  return utt;
}

std::vector<int> apply_annotation(std::span<const int> prompt,
                                  std::span<const PositionLabel> annotation) {
  require(prompt.size() == annotation.size(),
          "annotation length differs from prompt length");
  std::vector<int> realized;
  for (size_t i = 0; i < prompt.size(); ++i) {
    switch (annotation[i].kind) {
      case PositionLabel::kCorrect:
        realized.push_back(prompt[i]);
        break;
      case PositionLabel::kSubstituted:
        realized.push_back(annotation[i].substituted_with);
        break;
      case PositionLabel::kDeleted:
        break;
    }
  }
  return realized;
}

void validate_utterance(const Utterance &utt, const PhoneInventory &inv) {
  require(utt.annotation.size() == utt.prompt.size(),
          "utterance " + utt.id + ": annotation/prompt length mismatch");
  require(apply_annotation(utt.prompt, utt.annotation) == utt.realized,
          "utterance " + utt.id + ": realized is not prompt+annotation");
  require(utt.realized.size() == utt.realized_durations.size(),
          "utterance " + utt.id + ": durations out of sync");
  int total = 0;
  for (int d : utt.realized_durations) {
    require(d >= 1, "utterance " + utt.id + ": duration < 1");
    total += d;
  }
  require(total == utt.frames(),
          "utterance " + utt.id + ": frame count differs from durations");
  require(utt.features.all_finite(),
          "utterance " + utt.id + ": non-finite features");
  for (int p : utt.realized)
    require(inv.is_phone(p), "utterance " + utt.id + ": bad realized phone");
}

CorpusSplit build_splits(const SynthConfig &config, const SplitSpec &spec) {
  config.validate();
  require(spec.n_train > 0 && spec.n_dev > 0 && spec.n_test > 0,
          "build_splits: counts must be positive");
  require(spec.prompt_len_min >= 1 &&
              spec.prompt_len_max >= spec.prompt_len_min,
          "build_splits: bad prompt length range");

  SynthConfig with_errors = config;
  with_errors.set_error_profile(spec.error_rate, spec.substitution_fraction);
  SynthConfig clean = config;
  clean.clear_errors();

  const Rng root(config.seed);
  const int first = config.inventory.first_phone();
  const int n_phones = config.num_phones();

  CorpusSplit corpus;
  auto make_split = [&](const std::string &name, int count,
                        bool inject_errors) {
    std::vector<Utterance> utts;
    utts.reserve(count);
    for (int i = 0; i < count; ++i) {
      const std::string id = padded_id(name, i);
      Rng rng = root.child(fnv1a64(id));
      const int len = rng.uniform_int(spec.prompt_len_min, spec.prompt_len_max);
      std::vector<int> prompt(len);
      for (int k = 0; k < len; ++k)
        prompt[k] = first + rng.uniform_int(0, n_phones - 1);
      const bool l1 = rng.uniform() < spec.l1_fraction;
      const SynthConfig &cfg =
          (inject_errors && !l1) ? with_errors : clean;
      utts.push_back(synthesize_utterance(cfg, prompt, id, rng));
    }
    return utts;
  };

  corpus.train = make_split("train", spec.n_train, true);
  corpus.dev = make_split("dev", spec.n_dev, true);
  corpus.test = make_split("test", spec.n_test, true);
  corpus.duration_stats = duration_stats(corpus.train);
  return corpus;
}

DurationStats duration_stats(const std::vector<Utterance> &train) {
  require(!train.empty(), "duration_stats: empty training split");
  DurationStats stats;
  std::map<int, std::pair<double, int>> acc;
  double total = 0.0;
  int count = 0;
  for (const auto &utt : train) {
    for (size_t k = 0; k < utt.realized.size(); ++k) {
      auto &[sum, n] = acc[utt.realized[k]];
      sum += utt.realized_durations[k];
      ++n;
      total += utt.realized_durations[k];
      ++count;
    }
  }
  require(count > 0, "duration_stats: no realized phones in training split");
  stats.global_mean = total / count;
  for (const auto &[phone, sn] : acc)
    stats.mean_frames[phone] = sn.first / sn.second;
  return stats;
}

const std::vector<Utterance> &CorpusSplit::split(
    const std::string &name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw ValidationError("unknown split \"" + name + "\"");
}

void write_features(const std::string &path, const Mat &features) {
  write_matrix_file(path, kFeatMagic, features);
}

Mat read_features(const std::string &path) {
  return read_matrix_file(path, kFeatMagic);
}

std::string format_annotation(std::span<const PositionLabel> annotation,
                              const PhoneInventory &inv) {
  std::string out;
  for (size_t i = 0; i < annotation.size(); ++i) {
    if (i) out += ' ';
    switch (annotation[i].kind) {
      case PositionLabel::kCorrect:
        out += 'C';
        break;
      case PositionLabel::kSubstituted:
        out += "S:";
        out += inv.symbol(annotation[i].substituted_with);
        break;
      case PositionLabel::kDeleted:
        out += 'D';
        break;
    }
  }
  return out;
}

std::vector<PositionLabel> parse_annotation(const std::string &text,
                                            const PhoneInventory &inv) {
  std::vector<PositionLabel> labels;
  for (const auto &tok : split_on(text, ' ')) {
    if (tok.empty()) continue;
    PositionLabel label;
    if (tok == "C") {
      label.kind = PositionLabel::kCorrect;
    } else if (tok == "D") {
      label.kind = PositionLabel::kDeleted;
    } else if (tok.rfind("S:", 0) == 0) {
      label.kind = PositionLabel::kSubstituted;
      label.substituted_with = inv.index_of(tok.substr(2));
    } else {
      throw IoError("bad annotation token \"" + tok + "\"");
    }
    labels.push_back(label);
  }
  return labels;
}

void save_corpus(const std::string &dir, const CorpusSplit &corpus,
                 const PhoneInventory &inv) {
  ensure_dir(dir);
  ensure_dir(dir + "/features");
  inv.save(dir + "/inventory.txt");

  auto save_split = [&](const std::string &name,
                        const std::vector<Utterance> &utts) {
    std::string manifest;
    for (const auto &utt : utts) {
      manifest += utt.id;
      manifest += '\t';
      manifest += inv.format_phone_sequence(utt.prompt);
      manifest += '\t';
      manifest += format_annotation(utt.annotation, inv);
      manifest += '\n';
      write_features(dir + "/features/" + utt.id + ".bin", utt.features);
    }
    write_text_file(dir + "/" + name + ".tsv", manifest);
  };
  save_split("train", corpus.train);
  save_split("dev", corpus.dev);
  save_split("test", corpus.test);

  std::string stats = "<global>\t" +
                      format_double(corpus.duration_stats.global_mean) + "\n";
  for (const auto &[phone, mean] : corpus.duration_stats.mean_frames)
    stats += inv.symbol(phone) + "\t" + format_double(mean) + "\n";
  write_text_file(dir + "/duration_stats.tsv", stats);
}

std::vector<int> ManifestEntry::realized(const PhoneInventory &) const {
  return apply_annotation(prompt, annotation);
}

const std::vector<ManifestEntry> &LoadedCorpus::split(
    const std::string &name) const {
  auto it = splits.find(name);
  if (it == splits.end())
    throw ValidationError("corpus has no split \"" + name + "\"");
  return it->second;
}

Mat LoadedCorpus::features_for(const std::string &id) const {
  return read_features(dir + "/features/" + id + ".bin");
}

LoadedCorpus load_corpus(const std::string &dir) {
  LoadedCorpus corpus{PhoneInventory::load(dir + "/inventory.txt"),
                      DurationStats{},
                      {},
                      dir};
  for (const char *name : {"train", "dev", "test"}) {
    std::vector<ManifestEntry> entries;
    for (const auto &line :
         split_lines(read_text_file(dir + "/" + name + ".tsv"))) {
      if (line.empty()) continue;
      auto fields = split_on(line, '\t');
      if (fields.size() != 3)
        throw IoError(std::string("manifest ") + name + ".tsv: expected 3 "
                      "tab-separated fields");
      ManifestEntry e;
      e.id = fields[0];
      e.prompt = corpus.inventory.parse_phone_sequence(fields[1]);
      e.annotation = parse_annotation(fields[2], corpus.inventory);
      if (e.annotation.size() != e.prompt.size())
        throw IoError("manifest " + e.id + ": annotation length mismatch");
      entries.push_back(std::move(e));
    }
    corpus.splits[name] = std::move(entries);
  }
  for (const auto &line :
       split_lines(read_text_file(dir + "/duration_stats.tsv"))) {
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 2) throw IoError("duration_stats.tsv: bad line");
    double mean = parse_double(fields[1], "duration_stats.tsv");
    if (fields[0] == "<global>") {
      corpus.duration_stats.global_mean = mean;
    } else {
      corpus.duration_stats.mean_frames[corpus.inventory.index_of(fields[0])] =
          mean;
    }
  }
  return corpus;
}

}  // namespace mde
