// mde/pipeline.cpp

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

#include "mde/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <sstream>
#include <thread>

#include "mde/ctc.hpp"
#include "mde/io.hpp"
#include "mde/joint_decoder.hpp"
#include "mde/trainer.hpp"

namespace mde {

namespace {

std::map<std::string, std::string> default_config() {
  return {
      {"seed", "1"},
      {"jobs", "1"},
      {"paths.corpus_dir", "corpus"},
      {"paths.out_dir", "out"},
      {"paths.checkpoint", ""},

      {"synth.n_phones", "8"},
      {"synth.feature_dim", "8"},
      {"synth.separation", "1.5"},
      {"synth.emission_std", "0.15"},
      {"synth.noise_scale", "0.05"},
      {"synth.dur_mean", "3"},
      {"synth.dur_spread", "1"},
      {"synth.n_train", "500"},
      {"synth.n_dev", "100"},
      {"synth.n_test", "200"},
      {"synth.prompt_len_min", "4"},
      {"synth.prompt_len_max", "8"},
      {"synth.error_rate", "0.15"},
      {"synth.substitution_fraction", "0.6666666666666666"},
      {"synth.l1_fraction", "0.2"},

      {"train.lambda_mtl", "0.5"},
      {"train.learning_rate", "0.05"},
      {"train.epochs", "12"},
      {"train.batch_size", "8"},
      {"train.patience", "5"},
      {"train.clip_norm", "5"},
      {"train.hidden", "32"},
      {"train.attn_dim", "32"},
      {"train.conv_filters", "4"},
      {"train.conv_width", "5"},
      {"train.gamma", "1.0"},
      {"train.augment", "none"},
      {"train.frames_per_token", "1.0"},

      {"decode.lambda", "0.3"},
      {"decode.beam_width", "4"},
      {"decode.max_output_len", "0"},
      {"decode.nbest_per_step", "5"},
      {"decode.split", "test"},
      {"decode.kind", "joint"},
      {"decode.write_posteriorgrams", "true"},

      {"detect.mode", "sr"},
      {"detect.nbest", "1"},
      {"detect.pooling", "max"},
      {"detect.source", "ctc"},
      {"detect.split", "test"},

      {"eval.split", "test"},
      {"eval.label", "run"},

      {"run.variants", "ctc-sr,joint-sr,joint-conf"},
  };
}

}  // namespace

PipelineConfig::PipelineConfig() : values_(default_config()) {}

PipelineConfig PipelineConfig::from_file(const std::string &path) {
  PipelineConfig cfg;
  cfg.apply_file(path);
  return cfg;
}

void PipelineConfig::apply_file(const std::string &path) {
  const auto lines = split_lines(read_text_file(path));
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    line.erase(line.begin(),
               std::find_if(line.begin(), line.end(), not_space));
    line.erase(std::find_if(line.rbegin(), line.rend(), not_space).base(),
               line.end());
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(i + 1) +
                    ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), not_space).base(),
              key.end());
    value.erase(value.begin(),
                std::find_if(value.begin(), value.end(), not_space));
    set(key, value);
  }
}

void PipelineConfig::set(const std::string &key, const std::string &value) {
  auto it = values_.find(key);
  require(it != values_.end(), "config: unknown key \"" + key + "\"");
  it->second = value;
}

const std::string &PipelineConfig::get(const std::string &key) const {
  auto it = values_.find(key);
  require(it != values_.end(), "config: unknown key \"" + key + "\"");
  return it->second;
}

double PipelineConfig::get_double(const std::string &key) const {
  return parse_double(get(key), "config key " + key);
}

long PipelineConfig::get_long(const std::string &key) const {
  return parse_long(get(key), "config key " + key);
}

bool PipelineConfig::get_bool(const std::string &key) const {
  const std::string &v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config key " + key + ": expected true/false, got \"" +
                        v + "\"");
}

std::string PipelineConfig::checkpoint_path() const {
  const std::string &explicit_path = get("paths.checkpoint");
  return explicit_path.empty() ? out_dir() + "/model.ckpt" : explicit_path;
}

std::string PipelineConfig::dump() const {
  std::string out;
  for (const auto &[k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void parallel_for(int n, int jobs, const std::function<void(int)> &fn) {
  require(jobs >= 1, "parallel_for: jobs must be >= 1");
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  const int nw = std::min(jobs, n);
  for (int w = 0; w < nw; ++w) {
    workers.emplace_back([&, w] {
      try {
        while (true) {
          const int i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : workers) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

CorpusSplit materialize_corpus(const LoadedCorpus &corpus) {
  CorpusSplit out;
  auto fill = [&](const std::string &name, std::vector<Utterance> *dst) {
    for (const auto &entry : corpus.split(name)) {
      Utterance utt;
      utt.id = entry.id;
      utt.prompt = entry.prompt;
      utt.annotation = entry.annotation;
      utt.realized = entry.realized(corpus.inventory);
      utt.features = corpus.features_for(entry.id);
      dst->push_back(std::move(utt));
    }
  };
  fill("train", &out.train);
  fill("dev", &out.dev);
  fill("test", &out.test);
  out.duration_stats = corpus.duration_stats;
  return out;
}

PositionFlags annotation_flags(const std::vector<ManifestEntry> &entries) {
  PositionFlags flags;
  for (const auto &e : entries)
    for (size_t i = 0; i < e.annotation.size(); ++i)
      flags[{e.id, static_cast<int>(i)}] = e.annotation[i].mispronounced();
  return flags;
}

PositionFlags verdict_flags(const std::vector<UtteranceVerdicts> &verdicts) {
  PositionFlags flags;
  for (const auto &uv : verdicts)
    for (size_t i = 0; i < uv.verdicts.size(); ++i)
      flags[{uv.id, static_cast<int>(i)}] = uv.verdicts[i].mispronounced;
  return flags;
}

namespace {

SynthConfig synth_config_from(const PipelineConfig &cfg) {
  SynthConfig sc = SynthConfig::make_default(
      static_cast<int>(cfg.get_long("synth.n_phones")),
      static_cast<int>(cfg.get_long("synth.feature_dim")),
      cfg.get_double("synth.separation"),
      cfg.get_double("synth.emission_std"));
  sc.noise_scale = cfg.get_double("synth.noise_scale");
  std::fill(sc.dur_mean.begin(), sc.dur_mean.end(),
            cfg.get_double("synth.dur_mean"));
  std::fill(sc.dur_spread.begin(), sc.dur_spread.end(),
            cfg.get_double("synth.dur_spread"));
  sc.seed = cfg.seed();
  return sc;
}

SplitSpec split_spec_from(const PipelineConfig &cfg) {
  SplitSpec spec;
  spec.n_train = static_cast<int>(cfg.get_long("synth.n_train"));
  spec.n_dev = static_cast<int>(cfg.get_long("synth.n_dev"));
  spec.n_test = static_cast<int>(cfg.get_long("synth.n_test"));
  spec.prompt_len_min = static_cast<int>(cfg.get_long("synth.prompt_len_min"));
  spec.prompt_len_max = static_cast<int>(cfg.get_long("synth.prompt_len_max"));
  spec.error_rate = cfg.get_double("synth.error_rate");
  spec.substitution_fraction = cfg.get_double("synth.substitution_fraction");
  spec.l1_fraction = cfg.get_double("synth.l1_fraction");
  return spec;
}

TrainConfig train_config_from(const PipelineConfig &cfg) {
  TrainConfig tc;
  tc.lambda_mtl = cfg.get_double("train.lambda_mtl");
  tc.learning_rate = cfg.get_double("train.learning_rate");
  tc.epochs = static_cast<int>(cfg.get_long("train.epochs"));
  tc.batch_size = static_cast<int>(cfg.get_long("train.batch_size"));
  tc.patience = static_cast<int>(cfg.get_long("train.patience"));
  tc.clip_norm = cfg.get_double("train.clip_norm");
  tc.seed = cfg.seed();
  tc.augment = augment_from_string(cfg.get("train.augment"));
  tc.frames_per_token = cfg.get_double("train.frames_per_token");
  tc.hidden = static_cast<int>(cfg.get_long("train.hidden"));
  tc.attn_dim = static_cast<int>(cfg.get_long("train.attn_dim"));
  tc.conv_filters = static_cast<int>(cfg.get_long("train.conv_filters"));
  tc.conv_width = static_cast<int>(cfg.get_long("train.conv_width"));
  tc.gamma = cfg.get_double("train.gamma");
  tc.lambda_decode = cfg.get_double("decode.lambda");
  return tc;
}

JointConfig joint_config_from(const PipelineConfig &cfg) {
  JointConfig jc;
  jc.lambda = cfg.get_double("decode.lambda");
  jc.beam_width = static_cast<int>(cfg.get_long("decode.beam_width"));
  jc.max_output_len = static_cast<int>(cfg.get_long("decode.max_output_len"));
  jc.nbest_per_step = static_cast<int>(cfg.get_long("decode.nbest_per_step"));
  return jc;
}

std::vector<int> phone_symbols(const PhoneInventory &inv) {
  std::vector<int> phones;
  for (int c = inv.first_phone(); c < inv.num_symbols(); ++c)
    phones.push_back(c);
  return phones;
}

struct SplitStats {
  int utterances = 0;
  long frames = 0;
  long positions = 0;
  long errors = 0;
};

SplitStats stats_of(const std::vector<Utterance> &utts) {
  SplitStats s;
  s.utterances = static_cast<int>(utts.size());
  for (const auto &u : utts) {
    s.frames += u.frames();
    s.positions += static_cast<long>(u.prompt.size());
    for (const auto &a : u.annotation)
      if (a.mispronounced()) ++s.errors;
  }
  return s;
}

// Decodes one split with either the joint or the pure-CTC decoder, writing
// hypotheses and (optionally) posteriorgrams.
void decode_split(const PipelineConfig &cfg, const LoadedCorpus &corpus,
                  const ModelParams &params, const std::string &split,
                  const std::string &kind, const JointConfig &jc,
                  const std::string &hyp_path, const std::string &post_dir,
                  bool write_posts) {
  const auto &entries = corpus.split(split);
  const auto phones = phone_symbols(corpus.inventory);
  if (write_posts) ensure_dir(post_dir);

  std::vector<Hypothesis> hyps(entries.size());
  parallel_for(
      static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
        const ManifestEntry &entry = entries[i];
        const Mat features = corpus.features_for(entry.id);
        const EncodedMemory memory = encode_acoustic(params, features);
        const Posteriorgram post = acoustic_posteriorgram(params, memory);
        if (write_posts)
          write_posteriorgram(post_dir + "/" + entry.id + ".bin", post);

        Hypothesis hyp;
        if (kind == "ctc") {
          hyp = ctc_beam_decode(post, jc.beam_width, corpus.inventory.blank(),
                                phones, jc.nbest_per_step);
        } else if (kind == "joint") {
          PromptEncoding prompt_enc;
          const PromptEncoding *pe = nullptr;
          if (params.augmented()) {
            auto stream = build_prompt_stream(entry.prompt, params.augment,
                                              corpus.duration_stats,
                                              params.frames_per_token);
            prompt_enc = encode_prompt(params, stream);
            pe = &prompt_enc;
          }
          hyp = joint_beam_search(params, post, memory, pe, jc,
                                  corpus.inventory);
        } else {
          throw ValidationError("decode: unknown kind \"" + kind +
                                "\" (expected ctc|joint)");
        }
        hyp.id = entry.id;
        hyps[i] = std::move(hyp);
      });
  write_hypotheses(hyp_path, hyps, corpus.inventory);
}

PosteriorPooling pooling_from(const PipelineConfig &cfg) {
  const std::string &p = cfg.get("detect.pooling");
  if (p == "max") return PosteriorPooling::kMax;
  if (p == "mean") return PosteriorPooling::kMeanOccupied;
  throw ValidationError("detect.pooling: expected max|mean, got \"" + p +
                        "\"");
}

// Teacher-forced attention posteriors: run the decoder along the prompt and
// read P(z_i | z_{<i}, X) at each step. The selectable alternative to the
// constrained-CTC occupancy.
std::vector<double> attention_position_posterior(
    const ModelParams &params, const PhoneInventory &inv,
    const EncodedMemory &memory, const PromptEncoding *prompt_enc,
    std::span<const int> prompt) {
  DecoderState state =
      decoder_init(params, memory.length(),
                   prompt_enc ? prompt_enc->length() : 0, inv.sos());
  std::vector<double> out;
  out.reserve(prompt.size());
  for (int z : prompt) {
    AttentionWeights aw =
        attention_step(params, memory.vectors, state, AttentionKind::kAcoustic);
    AttentionWeights pw;
    const AttentionWeights *pwp = nullptr;
    if (prompt_enc) {
      pw = attention_step(params, prompt_enc->vectors, state,
                          AttentionKind::kPrompt);
      pwp = &pw;
    }
    auto [logdist, next] =
        decoder_step(params, state, aw, pwp, inv.blank(), inv.sos());
    out.push_back(std::exp(logdist[z]));
    state = std::move(next);
    state.prev_symbol = z;
  }
  return out;
}

struct CalibrationFile {
  ConfidenceCalibration cal;

  static CalibrationFile read(const std::string &path) {
    const auto lines = split_lines(read_text_file(path));
    if (lines.empty()) throw IoError("calibration file " + path + " is empty");
    const auto fields = split_on(lines[0], '\t');
    if (fields.size() != 3)
      throw IoError("calibration file " + path + ": expected 3 fields");
    CalibrationFile f;
    f.cal.tau = parse_double(fields[0], "calibration tau");
    if (fields[1] == "flag-below") {
      f.cal.flag_below = true;
    } else if (fields[1] == "flag-above") {
      f.cal.flag_below = false;
    } else {
      throw IoError("calibration file " + path + ": bad polarity");
    }
    f.cal.dev_f1 = parse_double(fields[2], "calibration dev f1");
    return f;
  }

  void write(const std::string &path) const {
    write_text_file(path,
                    format_double(cal.tau) + "\t" +
                        (cal.flag_below ? "flag-below" : "flag-above") + "\t" +
                        format_double(cal.dev_f1) + "\n");
  }
};

// Per-position confidence posteriors for one split, from the configured
// source.
std::vector<std::vector<double>> confidence_posteriors(
    const PipelineConfig &cfg, const LoadedCorpus &corpus,
    const std::string &split, const std::string &post_dir) {
  const auto &entries = corpus.split(split);
  const std::string source = cfg.get("detect.source");
  const PosteriorPooling pooling = pooling_from(cfg);
  std::vector<std::vector<double>> result(entries.size());

  if (source == "ctc") {
    parallel_for(static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
      const auto &entry = entries[i];
      const Posteriorgram post =
          read_posteriorgram(post_dir + "/" + entry.id + ".bin");
      result[i] = prompt_position_posterior(post, entry.prompt,
                                            corpus.inventory.blank(), pooling)
                      .p;
    });
  } else if (source == "attention") {
    const ModelParams params =
        load_checkpoint(cfg.checkpoint_path(), corpus.inventory);
    parallel_for(static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
      const auto &entry = entries[i];
      const Mat features = corpus.features_for(entry.id);
      const EncodedMemory memory = encode_acoustic(params, features);
      PromptEncoding prompt_enc;
      const PromptEncoding *pe = nullptr;
      if (params.augmented()) {
        auto stream =
            build_prompt_stream(entry.prompt, params.augment,
                                corpus.duration_stats, params.frames_per_token);
        prompt_enc = encode_prompt(params, stream);
        pe = &prompt_enc;
      }
      result[i] = attention_position_posterior(params, corpus.inventory,
                                               memory, pe, entry.prompt);
    });
  } else {
    throw ValidationError("detect.source: expected ctc|attention, got \"" +
                          source + "\"");
  }
  return result;
}

}  // namespace

void cmd_synth(const PipelineConfig &cfg) {
  const SynthConfig sc = synth_config_from(cfg);
  const SplitSpec spec = split_spec_from(cfg);
  const CorpusSplit corpus = build_splits(sc, spec);
  save_corpus(cfg.corpus_dir(), corpus, sc.inventory);

  std::ostringstream out;
  out << "corpus written to " << cfg.corpus_dir() << "\n";
  out << "split        utts    frames  positions  errors\n";
  for (const char *name : {"train", "dev", "test"}) {
    const SplitStats s = stats_of(corpus.split(name));
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s %6d %9ld %10ld %7ld\n", name,
                  s.utterances, s.frames, s.positions, s.errors);
    out << line;
  }
  std::cout << out.str();
}

void cmd_train(const PipelineConfig &cfg) {
  const LoadedCorpus loaded = load_corpus(cfg.corpus_dir());
  const CorpusSplit corpus = materialize_corpus(loaded);
  const TrainConfig tc = train_config_from(cfg);
  const TrainResult result = train(corpus, loaded.inventory, tc);

  ensure_dir(cfg.out_dir());
  save_checkpoint(result.params, cfg.checkpoint_path());
  write_loss_trace(cfg.out_dir() + "/loss_trace.tsv", result.trace);

  std::cout << "trained " << result.trace.size() << " epochs; checkpoint at "
            << cfg.checkpoint_path() << "\n";
  if (!result.trace.empty()) {
    const auto &last = result.trace.back();
    std::cout << "final train loss " << last.train_loss << ", dev loss "
              << last.dev_loss << "\n";
  }
}

void cmd_decode(const PipelineConfig &cfg) {
  const LoadedCorpus corpus = load_corpus(cfg.corpus_dir());
  const ModelParams params =
      load_checkpoint(cfg.checkpoint_path(), corpus.inventory);
  const AugmentMode cfg_augment = augment_from_string(cfg.get("train.augment"));
  require(params.augment == cfg_augment,
          "decode: checkpoint was trained with augment=" +
              to_string(params.augment) + " but the configuration says " +
              to_string(cfg_augment));

  const std::string split = cfg.get("decode.split");
  ensure_dir(cfg.out_dir());
  decode_split(cfg, corpus, params, split, cfg.get("decode.kind"),
               joint_config_from(cfg), cfg.out_dir() + "/hyps_" + split + ".tsv",
               cfg.out_dir() + "/post/" + split,
               cfg.get_bool("decode.write_posteriorgrams"));
  std::cout << "decoded " << corpus.split(split).size() << " " << split
            << " utterances\n";
}

void cmd_calibrate(const PipelineConfig &cfg) {
  const LoadedCorpus corpus = load_corpus(cfg.corpus_dir());
  const auto &dev = corpus.split("dev");
  require(!dev.empty(), "calibrate: dev split is empty");

  const auto posteriors =
      confidence_posteriors(cfg, corpus, "dev", cfg.out_dir() + "/post/dev");
  std::vector<ScoredPosition> scored;
  for (size_t i = 0; i < dev.size(); ++i) {
    require(posteriors[i].size() == dev[i].prompt.size(),
            "calibrate: posterior count mismatch for " + dev[i].id);
    for (size_t k = 0; k < posteriors[i].size(); ++k) {
      scored.push_back(ScoredPosition{confidence_D(posteriors[i][k]),
                                      dev[i].annotation[k].mispronounced()});
    }
  }
  const ConfidenceCalibration cal = calibrate_tau(scored);
  ensure_dir(cfg.out_dir());
  CalibrationFile{cal}.write(cfg.out_dir() + "/calibration.tsv");
  const auto roc = roc_points(scored);
  write_roc_points(cfg.out_dir() + "/roc_dev.tsv", roc);
  std::cout << "calibrated tau=" << cal.tau << " polarity="
            << (cal.flag_below ? "flag-below" : "flag-above")
            << " dev_f1=" << cal.dev_f1 << "\n";
}

void cmd_detect(const PipelineConfig &cfg) {
  const LoadedCorpus corpus = load_corpus(cfg.corpus_dir());
  const std::string split = cfg.get("detect.split");
  const auto &entries = corpus.split(split);
  const std::string mode = cfg.get("detect.mode");

  std::vector<UtteranceVerdicts> all(entries.size());
  if (mode == "sr" || mode == "sr-nbest") {
    const int n =
        mode == "sr" ? 1 : static_cast<int>(cfg.get_long("detect.nbest"));
    require(n >= 1, "detect.nbest must be >= 1");
    const auto hyps = read_hypotheses(
        cfg.out_dir() + "/hyps_" + split + ".tsv", corpus.inventory);
    std::map<std::string, const Hypothesis *> by_id;
    for (const auto &h : hyps) by_id[h.id] = &h;
    parallel_for(static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
      const auto &entry = entries[i];
      auto it = by_id.find(entry.id);
      require(it != by_id.end(), "detect: no hypothesis for " + entry.id);
      all[i] = UtteranceVerdicts{entry.id, entry.prompt,
                                 decide_sr(entry.prompt, *it->second, n)};
    });
  } else if (mode == "confidence") {
    const CalibrationFile calfile =
        CalibrationFile::read(cfg.out_dir() + "/calibration.tsv");
    const auto posteriors = confidence_posteriors(
        cfg, corpus, split, cfg.out_dir() + "/post/" + split);
    parallel_for(static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
      const auto &entry = entries[i];
      all[i] = UtteranceVerdicts{
          entry.id, entry.prompt,
          decide_confidence(entry.prompt, posteriors[i], calfile.cal)};
    });
  } else {
    throw ValidationError("detect.mode: expected sr|sr-nbest|confidence, got \"" +
                          mode + "\"");
  }
  write_verdicts(cfg.out_dir() + "/verdicts_" + split + ".tsv", all,
                 corpus.inventory);
  std::cout << "verdicts for " << entries.size() << " " << split
            << " utterances\n";
}

void cmd_evaluate(const PipelineConfig &cfg) {
  const LoadedCorpus corpus = load_corpus(cfg.corpus_dir());
  const std::string split = cfg.get("eval.split");
  const auto verdicts = read_verdicts(
      cfg.out_dir() + "/verdicts_" + split + ".tsv", corpus.inventory);
  const EvalCounts counts =
      tally(verdict_flags(verdicts), annotation_flags(corpus.split(split)));
  const Metrics m = metrics(counts);
  const auto table = report_table({{cfg.get("eval.label"), m}});
  write_text_file(cfg.out_dir() + "/metrics.tsv", table.tsv);
  std::cout << table.pretty;
}

namespace {

struct Variant {
  std::string label;
  std::string decode_kind;  // ctc | joint
  bool confidence = false;
  int nbest = 1;
  AugmentMode augment = AugmentMode::kNone;
};

Variant parse_variant(const std::string &label) {
  Variant v;
  v.label = label;
  std::string body = label;
  const size_t plus = body.find('+');
  if (plus != std::string::npos) {
    v.augment = augment_from_string(body.substr(plus + 1));
    body.resize(plus);
  }
  std::string base;
  if (body.rfind("ctc-", 0) == 0) {
    v.decode_kind = "ctc";
    base = body.substr(4);
  } else if (body.rfind("joint-", 0) == 0) {
    v.decode_kind = "joint";
    base = body.substr(6);
  } else {
    throw ValidationError("run.variants: variant \"" + label +
                          "\" must start with ctc- or joint-");
  }
  if (base == "sr") {
    v.nbest = 1;
  } else if (base == "conf") {
    v.confidence = true;
  } else if (base.rfind("sr-n", 0) == 0) {
    v.nbest = static_cast<int>(
        parse_long(base.substr(4), "variant nbest in " + label));
    require(v.nbest >= 1 && v.nbest <= 5,
            "run.variants: nbest outside [1,5] in \"" + label + "\"");
  } else {
    throw ValidationError("run.variants: bad decision \"" + base +
                          "\" in variant \"" + label + "\"");
  }
  return v;
}

}  // namespace

void cmd_run(const PipelineConfig &cfg) {
  std::vector<Variant> variants;
  for (const auto &tok : split_on(cfg.get("run.variants"), ','))
    if (!tok.empty()) variants.push_back(parse_variant(tok));
  require(!variants.empty(), "run.variants: no variants configured");

  const LoadedCorpus corpus = load_corpus(cfg.corpus_dir());
  ensure_dir(cfg.out_dir());

  auto stage = [&](const std::string &name, auto &&fn) {
    try {
      fn();
    } catch (const IoError &e) {
      throw IoError("stage " + name + ": " + e.what());
    } catch (const std::exception &e) {
      throw ValidationError("stage " + name + ": " + e.what());
    }
  };

  // Train one model per augmentation mode in use.
  std::map<AugmentMode, std::string> checkpoints;
  for (const Variant &v : variants) {
    if (checkpoints.count(v.augment)) continue;
    const std::string ckpt =
        cfg.out_dir() + "/model-" + to_string(v.augment) + ".ckpt";
    checkpoints[v.augment] = ckpt;
    stage("train[" + to_string(v.augment) + "]", [&] {
      const CorpusSplit mem = materialize_corpus(corpus);
      TrainConfig tc = train_config_from(cfg);
      tc.augment = v.augment;
      const TrainResult result = train(mem, corpus.inventory, tc);
      save_checkpoint(result.params, ckpt);
      write_loss_trace(
          cfg.out_dir() + "/loss_trace-" + to_string(v.augment) + ".tsv",
          result.trace);
    });
  }

  // Decode each (kind, augment) combination once; confidence variants also
  // need dev posteriorgrams for calibration.
  struct DecodeJob {
    std::string kind;
    AugmentMode augment;
    bool operator<(const DecodeJob &o) const {
      return std::tie(kind, augment) < std::tie(o.kind, o.augment);
    }
  };
  std::map<DecodeJob, std::string> hyp_files;
  std::map<AugmentMode, std::string> post_dirs_test, post_dirs_dev;
  for (const Variant &v : variants) {
    const DecodeJob job{v.decode_kind, v.augment};
    const std::string tag = v.decode_kind + "-" + to_string(v.augment);
    if (!hyp_files.count(job)) {
      const std::string hyp_path =
          cfg.out_dir() + "/hyps-" + tag + "_test.tsv";
      hyp_files[job] = hyp_path;
      stage("decode[" + tag + "]", [&] {
        const ModelParams params =
            load_checkpoint(checkpoints.at(v.augment), corpus.inventory);
        const std::string post_dir =
            cfg.out_dir() + "/post-" + to_string(v.augment) + "/test";
        post_dirs_test[v.augment] = post_dir;
        decode_split(cfg, corpus, params, "test", v.decode_kind,
                     joint_config_from(cfg), hyp_path, post_dir, true);
      });
    }
    if (v.confidence && !post_dirs_dev.count(v.augment)) {
      stage("decode[dev," + to_string(v.augment) + "]", [&] {
        const ModelParams params =
            load_checkpoint(checkpoints.at(v.augment), corpus.inventory);
        const std::string post_dir =
            cfg.out_dir() + "/post-" + to_string(v.augment) + "/dev";
        post_dirs_dev[v.augment] = post_dir;
        decode_split(cfg, corpus, params, "dev", v.decode_kind,
                     joint_config_from(cfg),
                     cfg.out_dir() + "/hyps-" + tag + "_dev.tsv", post_dir,
                     true);
      });
    }
  }

  const PositionFlags truth = annotation_flags(corpus.split("test"));
  const PosteriorPooling pooling = pooling_from(cfg);
  std::vector<std::pair<std::string, Metrics>> rows;

  for (const Variant &v : variants) {
    std::vector<UtteranceVerdicts> all(corpus.split("test").size());
    const auto &entries = corpus.split("test");

    if (v.confidence) {
      ConfidenceCalibration cal;
      stage("calibrate[" + v.label + "]", [&] {
        const auto &dev = corpus.split("dev");
        require(!dev.empty(), "dev split is empty");
        std::vector<ScoredPosition> scored;
        for (const auto &entry : dev) {
          const Posteriorgram post = read_posteriorgram(
              post_dirs_dev.at(v.augment) + "/" + entry.id + ".bin");
          const auto pp = prompt_position_posterior(
              post, entry.prompt, corpus.inventory.blank(), pooling);
          for (size_t k = 0; k < pp.p.size(); ++k)
            scored.push_back(ScoredPosition{
                confidence_D(pp.p[k]), entry.annotation[k].mispronounced()});
        }
        cal = calibrate_tau(scored);
        CalibrationFile{cal}.write(cfg.out_dir() + "/calibration-" + v.label +
                                   ".tsv");
        write_roc_points(cfg.out_dir() + "/roc-" + v.label + ".tsv",
                         roc_points(scored));
      });
      stage("detect[" + v.label + "]", [&] {
        parallel_for(static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
          const auto &entry = entries[i];
          const Posteriorgram post = read_posteriorgram(
              post_dirs_test.at(v.augment) + "/" + entry.id + ".bin");
          const auto pp = prompt_position_posterior(
              post, entry.prompt, corpus.inventory.blank(), pooling);
          all[i] = UtteranceVerdicts{entry.id, entry.prompt,
                                     decide_confidence(entry.prompt, pp.p, cal)};
        });
      });
    } else {
      stage("detect[" + v.label + "]", [&] {
        const auto hyps = read_hypotheses(
            hyp_files.at(DecodeJob{v.decode_kind, v.augment}),
            corpus.inventory);
        std::map<std::string, const Hypothesis *> by_id;
        for (const auto &h : hyps) by_id[h.id] = &h;
        parallel_for(static_cast<int>(entries.size()), cfg.jobs(), [&](int i) {
          const auto &entry = entries[i];
          auto it = by_id.find(entry.id);
          require(it != by_id.end(), "no hypothesis for " + entry.id);
          all[i] = UtteranceVerdicts{
              entry.id, entry.prompt,
              decide_sr(entry.prompt, *it->second, v.nbest)};
        });
      });
    }

    stage("evaluate[" + v.label + "]", [&] {
      write_verdicts(cfg.out_dir() + "/verdicts-" + v.label + "_test.tsv", all,
                     corpus.inventory);
      const EvalCounts counts = tally(verdict_flags(all), truth);
      rows.emplace_back(v.label, metrics(counts));
    });
  }

  const auto table = report_table(rows);
  write_text_file(cfg.out_dir() + "/run_metrics.tsv", table.tsv);
  std::cout << table.pretty;
}

void run_stage(const PipelineConfig &cfg, const std::string &stage) {
  if (stage == "synth") {
    cmd_synth(cfg);
  } else if (stage == "train") {
    cmd_train(cfg);
  } else if (stage == "decode") {
    cmd_decode(cfg);
  } else if (stage == "calibrate") {
    cmd_calibrate(cfg);
  } else if (stage == "detect") {
    cmd_detect(cfg);
  } else if (stage == "evaluate") {
    cmd_evaluate(cfg);
  } else if (stage == "run") {
    cmd_run(cfg);
  } else {
    throw ValidationError("unknown stage \"" + stage +
                          "\" (expected synth|train|decode|detect|calibrate|"
                          "evaluate|run)");
  }
}

}  // namespace mde
