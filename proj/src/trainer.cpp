// mde/trainer.cpp

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

#include "mde/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mde/io.hpp"
#include "model_graph.hpp"

namespace mde {

void TrainConfig::validate() const {
  require(lambda_mtl >= 0.0 && lambda_mtl <= 1.0,
          "train: lambda_mtl outside [0,1]");
  require(learning_rate > 0.0, "train: learning rate must be positive");
  require(epochs >= 1, "train: epochs must be >= 1");
  require(batch_size >= 1, "train: batch_size must be >= 1");
  require(patience >= 1, "train: patience must be >= 1");
  require(clip_norm > 0.0, "train: clip_norm must be positive");
  require(frames_per_token > 0.0, "train: frames_per_token must be positive");
  require(gamma > 0.0, "train: gamma must be positive");
  require(lambda_decode >= 0.0 && lambda_decode <= 1.0,
          "train: lambda_decode outside [0,1]");
}

namespace {

// Builds the joint loss graph for one utterance. `refs` may wrap either
// constant or trainable leaves.
Tape::Ref build_loss(Tape &tape, const graph::ParamRefs &refs,
                     const Utterance &utt, const DurationStats &stats,
                     AugmentMode augment, double frames_per_token,
                     double lambda_mtl) {
  std::vector<Tape::Ref> terms;
  std::vector<double> weights;

  Tape::Ref feats = tape.view(&utt.features);
  Tape::Ref memory = graph::encode_acoustic_g(tape, refs, feats);

  if (lambda_mtl > 0.0) {
    Tape::Ref logits = graph::ctc_logits_g(tape, refs, memory);
    terms.push_back(
        tape.ctc_nll(logits, utt.realized, PhoneInventory::kBlank));
    weights.push_back(lambda_mtl);
  }

  if (lambda_mtl < 1.0) {
    const bool augmented = augment != AugmentMode::kNone;
    Tape::Ref prompt_mem = -1;
    Tape::Ref prompt_keys = -1;
    int prompt_len = 0;
    if (augmented) {
      auto stream =
          build_prompt_stream(utt.prompt, augment, stats, frames_per_token);
      prompt_mem = graph::encode_prompt_g(tape, refs, stream);
      prompt_keys = tape.matmul(prompt_mem, refs.patt_w_h);
      prompt_len = static_cast<int>(stream.size());
    }
    Tape::Ref keys = tape.matmul(memory, refs.att_w_h);

    const int T = utt.frames();
    // Initial attention anchored at the first frame, as in decoder_init.
    Mat a0(1, T);
    a0.at(0, 0) = 1.0;
    Tape::Ref a_prev = tape.input(std::move(a0));
    Tape::Ref pa_prev = -1;
    if (augmented) {
      Mat pa0(1, prompt_len);
      pa0.at(0, 0) = 1.0;
      pa_prev = tape.input(std::move(pa0));
    }
    Tape::Ref q = tape.input(Mat(1, refs.shape.hidden));
    int prev = PhoneInventory::kSos;

    std::vector<int> target = utt.realized;
    target.push_back(PhoneInventory::kEos);
    for (int y : target) {
      auto att =
          graph::attention_g(tape, refs, false, q, a_prev, memory, keys);
      std::optional<Tape::Ref> pr_ctx;
      if (augmented) {
        auto patt = graph::attention_g(tape, refs, true, q, pa_prev,
                                       prompt_mem, prompt_keys);
        pr_ctx = patt.context;
        pa_prev = patt.weights;
      }
      auto step = graph::decoder_cell_g(tape, refs, q, prev, att.context,
                                        pr_ctx, PhoneInventory::kBlank,
                                        PhoneInventory::kSos);
      terms.push_back(tape.pick_negative(step.logdist, y));
      weights.push_back(1.0 - lambda_mtl);
      q = step.q_new;
      a_prev = att.weights;
      prev = y;  // teacher forcing
    }
  }

  return tape.weighted_scalar_sum(terms, weights);
}

double global_grad_norm(const ModelParams &grads) {
  double sq = 0.0;
  for_each_param(grads, [&](const char *, const Mat &m) {
    for (double v : m.data) sq += v * v;
  });
  return std::sqrt(sq);
}

}  // namespace

double utterance_loss(const ModelParams &params, const Utterance &utt,
                      const DurationStats &stats, double lambda_mtl) {
  Tape tape;
  auto refs = graph::wrap_params(tape, params, nullptr);
  Tape::Ref loss = build_loss(tape, refs, utt, stats, params.augment,
                              params.frames_per_token, lambda_mtl);
  return tape.scalar(loss);
}

TrainResult train(const CorpusSplit &corpus, const PhoneInventory &inv,
                  const TrainConfig &cfg) {
  cfg.validate();
  require(!corpus.train.empty(), "train: empty training split");
  const int feature_dim = corpus.train.front().features.cols;

  ModelShape shape;
  shape.feature_dim = feature_dim;
  shape.n_symbols = inv.num_symbols();
  shape.hidden = cfg.hidden;
  shape.attn_dim = cfg.attn_dim;
  shape.conv_filters = cfg.conv_filters;
  shape.conv_width = cfg.conv_width;

  ModelParams params =
      init_model(shape, cfg.augment, cfg.gamma, inv.hash(), cfg.seed);
  params.lambda_mtl = cfg.lambda_mtl;
  params.lambda_decode = cfg.lambda_decode;
  params.frames_per_token = cfg.frames_per_token;

  ModelParams grads = zeros_like(params);
  Rng rng = Rng(cfg.seed).child(fnv1a64("train-shuffle"));

  TrainResult result;
  ModelParams best = params;
  double best_dev = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  double lr = cfg.learning_rate;

  std::vector<size_t> order(corpus.train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[rng.uniform_int(0, static_cast<int>(i) - 1)]);

    double train_loss = 0.0;
    size_t done = 0;
    while (done < order.size()) {
      const size_t batch_end =
          std::min(done + static_cast<size_t>(cfg.batch_size), order.size());
      const int batch_n = static_cast<int>(batch_end - done);
      for_each_param(grads, [](const char *, Mat &m) { m.fill(0.0); });
      for (; done < batch_end; ++done) {
        const Utterance &utt = corpus.train[order[done]];
        Tape tape;
        auto refs = graph::wrap_params(tape, params, &grads);
        Tape::Ref loss = build_loss(tape, refs, utt, corpus.duration_stats,
                                    cfg.augment, cfg.frames_per_token,
                                    cfg.lambda_mtl);
        const double v = tape.scalar(loss);
        if (!std::isfinite(v))
          throw ValidationError("train: non-finite loss at epoch " +
                                std::to_string(epoch) + ", utterance " +
                                utt.id);
        train_loss += v;
        tape.backward(loss);
      }
      const double inv_n = 1.0 / batch_n;
      for_each_param(grads, [&](const char *, Mat &m) {
        for (double &v : m.data) v *= inv_n;
      });
      const double norm = global_grad_norm(grads);
      const double scale =
          norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      std::vector<Mat *> gs;
      for_each_param(grads, [&](const char *, Mat &m) { gs.push_back(&m); });
      size_t gi = 0;
      for_each_param(params, [&](const char *, Mat &m) {
        const Mat &g = *gs[gi++];
        for (size_t k = 0; k < m.data.size(); ++k)
          m.data[k] -= lr * scale * g.data[k];
      });
    }
    train_loss /= static_cast<double>(corpus.train.size());

    double dev_loss = 0.0;
    if (!corpus.dev.empty()) {
      for (const auto &utt : corpus.dev)
        dev_loss +=
            utterance_loss(params, utt, corpus.duration_stats, cfg.lambda_mtl);
      dev_loss /= static_cast<double>(corpus.dev.size());
      if (!std::isfinite(dev_loss))
        throw ValidationError("train: non-finite dev loss at epoch " +
                              std::to_string(epoch));
    }
    result.trace.push_back({epoch, train_loss, dev_loss});

    if (corpus.dev.empty() || dev_loss < best_dev) {
      best_dev = dev_loss;
      best = params;
      best_epoch = epoch;
    } else {
      // newbob-style step decay: a flat dev epoch halves the step size
      lr *= 0.5;
      if (epoch - best_epoch >= cfg.patience) break;
    }
  }
  result.params = std::move(best);
  return result;
}

double grad_check_joint(const ModelParams &params, const Utterance &utt,
                        const DurationStats &stats, double lambda_mtl,
                        int min_coords, uint64_t seed) {
  require(lambda_mtl >= 0.0 && lambda_mtl <= 1.0,
          "grad_check_joint: lambda outside [0,1]");
  ModelParams grads = zeros_like(params);
  {
    Tape tape;
    auto refs = graph::wrap_params(tape, params, &grads);
    Tape::Ref loss = build_loss(tape, refs, utt, stats, params.augment,
                                params.frames_per_token, lambda_mtl);
    tape.backward(loss);
  }
  const std::vector<double> x = flatten_params(params);
  const std::vector<double> g = flatten_params(grads);

  ModelParams probe = params;
  auto f = [&](std::span<const double> flat) {
    unflatten_params(flat, &probe);
    return utterance_loss(probe, utt, stats, lambda_mtl);
  };

  const int total = static_cast<int>(x.size());
  const int n = std::min(min_coords, total);
  Rng rng(seed);
  std::vector<int> coords;
  std::vector<bool> used(total, false);
  while (static_cast<int>(coords.size()) < n) {
    int c = rng.uniform_int(0, total - 1);
    if (!used[c]) {
      used[c] = true;
      coords.push_back(c);
    }
  }
  return finite_diff_check_subset(f, x, g, 1e-5, coords);
}

double greedy_ctc_accuracy(const ModelParams &params,
                           const std::vector<Utterance> &utts) {
  require(!utts.empty(), "greedy_ctc_accuracy: no utterances");
  size_t correct = 0;
  for (const auto &utt : utts) {
    EncodedMemory mem = encode_acoustic(params, utt.features);
    Posteriorgram post = acoustic_posteriorgram(params, mem);
    std::vector<int> decoded;
    int prev = -1;
    for (int t = 0; t < post.frames(); ++t) {
      auto row = post.probs.row(t);
      int arg = static_cast<int>(std::max_element(row.begin(), row.end()) -
                                 row.begin());
      if (arg != prev && arg != PhoneInventory::kBlank) decoded.push_back(arg);
      prev = arg;
    }
    if (decoded == utt.realized) ++correct;
  }
  return static_cast<double>(correct) / utts.size();
}

std::vector<double> flatten_params(const ModelParams &params) {
  std::vector<double> flat;
  for_each_param(params, [&](const char *, const Mat &m) {
    flat.insert(flat.end(), m.data.begin(), m.data.end());
  });
  return flat;
}

void unflatten_params(std::span<const double> flat, ModelParams *params) {
  size_t off = 0;
  for_each_param(*params, [&](const char *, Mat &m) {
    require(off + m.data.size() <= flat.size(),
            "unflatten_params: size mismatch");
    std::copy(flat.begin() + off, flat.begin() + off + m.data.size(),
              m.data.begin());
    off += m.data.size();
  });
  require(off == flat.size(), "unflatten_params: size mismatch");
}

void save_checkpoint(const ModelParams &params, const std::string &path) {
  std::ostringstream out;
  out << "MDECKPT 1\n";
  out << "inventory_hash " << params.inventory_hash << "\n";
  out << "augment " << to_string(params.augment) << "\n";
  out << "gamma " << format_double(params.gamma) << "\n";
  out << "lambda_mtl " << format_double(params.lambda_mtl) << "\n";
  out << "lambda_decode " << format_double(params.lambda_decode) << "\n";
  out << "frames_per_token " << format_double(params.frames_per_token) << "\n";
  out << "shape " << params.shape.feature_dim << " " << params.shape.n_symbols
      << " " << params.shape.hidden << " " << params.shape.attn_dim << " "
      << params.shape.conv_filters << " " << params.shape.conv_width << "\n";
  int nmat = 0;
  for_each_param(params, [&](const char *, const Mat &) { ++nmat; });
  out << "nmat " << nmat << "\n";
  for_each_param(params, [&](const char *name, const Mat &m) {
    out << "mat " << name << " " << m.rows << " " << m.cols << "\n";
    for (int r = 0; r < m.rows; ++r) {
      for (int c = 0; c < m.cols; ++c) {
        if (c) out << " ";
        out << format_double(m.at(r, c));
      }
      out << "\n";
    }
  });
  out << "end\n";
  write_text_file(path, out.str());
}

ModelParams load_checkpoint(const std::string &path,
                            const PhoneInventory &inv) {
  std::istringstream in(read_text_file(path));
  std::string tok;
  int version = 0;
  in >> tok >> version;
  if (tok != "MDECKPT" || version != 1)
    throw IoError("checkpoint " + path + ": bad magic or version");

  uint64_t hash = 0;
  std::string augment_s;
  double gamma = 0.0, lambda_mtl = 0.0, lambda_decode = 0.0, fpt = 0.0;
  ModelShape shape;
  int nmat = 0;

  auto expect = [&](const char *key) {
    in >> tok;
    if (tok != key)
      throw IoError("checkpoint " + path + ": expected \"" + key +
                    "\", got \"" + tok + "\"");
  };
  expect("inventory_hash");
  in >> hash;
  expect("augment");
  in >> augment_s;
  expect("gamma");
  in >> gamma;
  expect("lambda_mtl");
  in >> lambda_mtl;
  expect("lambda_decode");
  in >> lambda_decode;
  expect("frames_per_token");
  in >> fpt;
  expect("shape");
  in >> shape.feature_dim >> shape.n_symbols >> shape.hidden >>
      shape.attn_dim >> shape.conv_filters >> shape.conv_width;
  expect("nmat");
  in >> nmat;
  if (!in) throw IoError("checkpoint " + path + ": truncated header");

  if (hash != inv.hash())
    throw ValidationError(
        "checkpoint " + path +
        ": inventory hash mismatch (model was trained on a different "
        "alphabet)");

  std::map<std::string, Mat> mats;
  for (int i = 0; i < nmat; ++i) {
    std::string name;
    int rows = 0, cols = 0;
    expect("mat");
    in >> name >> rows >> cols;
    Mat m(rows, cols);
    for (double &v : m.data) in >> v;
    if (!in) throw IoError("checkpoint " + path + ": truncated matrix " + name);
    mats.emplace(std::move(name), std::move(m));
  }
  expect("end");

  ModelParams params = init_model(shape, augment_from_string(augment_s), gamma,
                                  hash, /*seed=*/0);
  params.lambda_mtl = lambda_mtl;
  params.lambda_decode = lambda_decode;
  params.frames_per_token = fpt;
  for_each_param(params, [&](const char *name, Mat &m) {
    auto it = mats.find(name);
    if (it == mats.end())
      throw IoError("checkpoint " + path + ": missing matrix " +
                    std::string(name));
    require(it->second.same_shape(m),
            "checkpoint " + path + ": shape mismatch for " + name);
    m = std::move(it->second);
    mats.erase(it);
  });
  if (!mats.empty())
    throw IoError("checkpoint " + path + ": unexpected matrix " +
                  mats.begin()->first);
  return params;
}

std::string format_loss_trace(const std::vector<EpochLoss> &trace) {
  std::string out;
  for (const auto &e : trace) {
    out += std::to_string(e.epoch);
    out += '\t';
    out += format_double(e.train_loss);
    out += '\t';
    out += format_double(e.dev_loss);
    out += '\n';
  }
  return out;
}

void write_loss_trace(const std::string &path,
                      const std::vector<EpochLoss> &trace) {
  write_text_file(path, format_loss_trace(trace));
}

}  // namespace mde
