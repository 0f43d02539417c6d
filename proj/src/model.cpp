// mde/model.cpp

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

#include "mde/model.hpp"

#include <algorithm>
#include <cmath>

#include "model_graph.hpp"

namespace mde {

std::string to_string(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::kNone:
      return "none";
    case AugmentMode::kPs:
      return "ps";
    case AugmentMode::kRps:
      return "rps";
  }
  return "none";
}

AugmentMode augment_from_string(const std::string &s) {
  if (s == "none") return AugmentMode::kNone;
  if (s == "ps") return AugmentMode::kPs;
  if (s == "rps") return AugmentMode::kRps;
  throw ValidationError("unknown augmentation mode \"" + s +
                        "\" (expected none|ps|rps)");
}

void ModelShape::validate() const {
  require(feature_dim >= 1, "model: feature_dim must be >= 1");
  require(n_symbols >= 4, "model: inventory must hold blank/sos/eos + phones");
  require(hidden >= 2 && hidden % 2 == 0, "model: hidden must be even");
  require(attn_dim >= 1, "model: attn_dim must be >= 1");
  require(conv_filters >= 1, "model: conv_filters must be >= 1");
  require(conv_width >= 1 && conv_width % 2 == 1,
          "model: conv_width must be odd");
}

namespace {

Mat random_mat(int rows, int cols, Rng rng) {
  Mat m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max(1, rows)));
  for (double &v : m.data) v = scale * rng.normal();
  return m;
}

}  // namespace

ModelParams init_model(const ModelShape &shape, AugmentMode augment,
                       double gamma, uint64_t inventory_hash, uint64_t seed) {
  shape.validate();
  require(gamma > 0.0, "model: gamma must be positive");
  ModelParams p;
  p.shape = shape;
  p.augment = augment;
  p.gamma = gamma;
  p.inventory_hash = inventory_hash;

  const int dh = shape.hidden / 2;
  const int H = shape.hidden;
  const int A = shape.attn_dim;
  const int V = shape.n_symbols;
  const int D = shape.feature_dim;
  const int F = shape.conv_filters;
  const int W = shape.conv_width;

  const Rng root(seed);
  // Each matrix draws from a stream keyed on its own name, so enabling the
  // prompt encoder never shifts the base model's initialization.
  auto mk = [&](const char *name, int rows, int cols) {
    return random_mat(rows, cols, root.child(fnv1a64(name)));
  };

  p.enc_fwd_x = mk("enc_fwd_x", D, dh);
  p.enc_fwd_h = mk("enc_fwd_h", dh, dh);
  p.enc_fwd_b = Mat(1, dh);
  p.enc_bwd_x = mk("enc_bwd_x", D, dh);
  p.enc_bwd_h = mk("enc_bwd_h", dh, dh);
  p.enc_bwd_b = Mat(1, dh);
  p.ctc_w = mk("ctc_w", H, V);
  p.ctc_b = Mat(1, V);
  p.embed = mk("embed", V, H);
  p.dec_w_h = mk("dec_w_h", H, H);
  p.dec_w_in = mk("dec_w_in", H * (augment != AugmentMode::kNone ? 3 : 2), H);
  p.dec_b = Mat(1, H);
  p.out_w = mk("out_w", H * (augment != AugmentMode::kNone ? 3 : 2), V);
  p.out_b = Mat(1, V);
  p.att_w_q = mk("att_w_q", H, A);
  p.att_w_h = mk("att_w_h", H, A);
  p.att_w_f = mk("att_w_f", F, A);
  p.att_conv = mk("att_conv", F, W);
  p.att_v = mk("att_v", A, 1);
  p.att_b = Mat(1, A);

  if (augment != AugmentMode::kNone) {
    p.pr_embed = mk("pr_embed", V, H);
    p.pr_fwd_x = mk("pr_fwd_x", H, dh);
    p.pr_fwd_h = mk("pr_fwd_h", dh, dh);
    p.pr_fwd_b = Mat(1, dh);
    p.pr_bwd_x = mk("pr_bwd_x", H, dh);
    p.pr_bwd_h = mk("pr_bwd_h", dh, dh);
    p.pr_bwd_b = Mat(1, dh);
    p.patt_w_q = mk("patt_w_q", H, A);
    p.patt_w_h = mk("patt_w_h", H, A);
    p.patt_w_f = mk("patt_w_f", F, A);
    p.patt_conv = mk("patt_conv", F, W);
    p.patt_v = mk("patt_v", A, 1);
    p.patt_b = Mat(1, A);
  }
  return p;
}

namespace {

template <typename Params, typename Fn>
void visit_params(Params &p, const Fn &fn) {
  fn("enc_fwd_x", p.enc_fwd_x);
  fn("enc_fwd_h", p.enc_fwd_h);
  fn("enc_fwd_b", p.enc_fwd_b);
  fn("enc_bwd_x", p.enc_bwd_x);
  fn("enc_bwd_h", p.enc_bwd_h);
  fn("enc_bwd_b", p.enc_bwd_b);
  fn("ctc_w", p.ctc_w);
  fn("ctc_b", p.ctc_b);
  fn("embed", p.embed);
  fn("dec_w_h", p.dec_w_h);
  fn("dec_w_in", p.dec_w_in);
  fn("dec_b", p.dec_b);
  fn("out_w", p.out_w);
  fn("out_b", p.out_b);
  fn("att_w_q", p.att_w_q);
  fn("att_w_h", p.att_w_h);
  fn("att_w_f", p.att_w_f);
  fn("att_conv", p.att_conv);
  fn("att_v", p.att_v);
  fn("att_b", p.att_b);
  if (p.augment != AugmentMode::kNone) {
    fn("pr_embed", p.pr_embed);
    fn("pr_fwd_x", p.pr_fwd_x);
    fn("pr_fwd_h", p.pr_fwd_h);
    fn("pr_fwd_b", p.pr_fwd_b);
    fn("pr_bwd_x", p.pr_bwd_x);
    fn("pr_bwd_h", p.pr_bwd_h);
    fn("pr_bwd_b", p.pr_bwd_b);
    fn("patt_w_q", p.patt_w_q);
    fn("patt_w_h", p.patt_w_h);
    fn("patt_w_f", p.patt_w_f);
    fn("patt_conv", p.patt_conv);
    fn("patt_v", p.patt_v);
    fn("patt_b", p.patt_b);
  }
}

}  // namespace

void for_each_param(ModelParams &params,
                    const std::function<void(const char *, Mat &)> &fn) {
  visit_params(params, fn);
}

void for_each_param(const ModelParams &params,
                    const std::function<void(const char *, const Mat &)> &fn) {
  visit_params(params, fn);
}

ModelParams zeros_like(const ModelParams &params) {
  ModelParams z = params;
  for_each_param(z, [](const char *, Mat &m) { m.fill(0.0); });
  return z;
}

int AttentionWeights::peak() const {
  if (weights.empty()) return -1;
  return static_cast<int>(std::max_element(weights.begin(), weights.end()) -
                          weights.begin());
}

namespace graph {

ParamRefs wrap_params(Tape &tape, const ModelParams &params,
                      ModelParams *grads) {
  ParamRefs refs;
  refs.shape = params.shape;
  refs.augmented = params.augmented();
  refs.gamma = params.gamma;

  auto ref_slot = [](ParamRefs &r, const char *name) -> Tape::Ref * {
    const std::string n = name;
    if (n == "enc_fwd_x") return &r.enc_fwd_x;
    if (n == "enc_fwd_h") return &r.enc_fwd_h;
    if (n == "enc_fwd_b") return &r.enc_fwd_b;
    if (n == "enc_bwd_x") return &r.enc_bwd_x;
    if (n == "enc_bwd_h") return &r.enc_bwd_h;
    if (n == "enc_bwd_b") return &r.enc_bwd_b;
    if (n == "ctc_w") return &r.ctc_w;
    if (n == "ctc_b") return &r.ctc_b;
    if (n == "embed") return &r.embed;
    if (n == "dec_w_h") return &r.dec_w_h;
    if (n == "dec_w_in") return &r.dec_w_in;
    if (n == "dec_b") return &r.dec_b;
    if (n == "out_w") return &r.out_w;
    if (n == "out_b") return &r.out_b;
    if (n == "att_w_q") return &r.att_w_q;
    if (n == "att_w_h") return &r.att_w_h;
    if (n == "att_w_f") return &r.att_w_f;
    if (n == "att_conv") return &r.att_conv;
    if (n == "att_v") return &r.att_v;
    if (n == "att_b") return &r.att_b;
    if (n == "pr_embed") return &r.pr_embed;
    if (n == "pr_fwd_x") return &r.pr_fwd_x;
    if (n == "pr_fwd_h") return &r.pr_fwd_h;
    if (n == "pr_fwd_b") return &r.pr_fwd_b;
    if (n == "pr_bwd_x") return &r.pr_bwd_x;
    if (n == "pr_bwd_h") return &r.pr_bwd_h;
    if (n == "pr_bwd_b") return &r.pr_bwd_b;
    if (n == "patt_w_q") return &r.patt_w_q;
    if (n == "patt_w_h") return &r.patt_w_h;
    if (n == "patt_w_f") return &r.patt_w_f;
    if (n == "patt_conv") return &r.patt_conv;
    if (n == "patt_v") return &r.patt_v;
    if (n == "patt_b") return &r.patt_b;
    throw ValidationError(std::string("unknown parameter ") + name);
  };

  if (grads) {
    require(grads->augment == params.augment, "wrap_params: grad layout differs");
    // Pair each value matrix with the same-named grad sink.
    std::vector<Mat *> sinks;
    for_each_param(*grads, [&](const char *, Mat &g) { sinks.push_back(&g); });
    size_t i = 0;
    for_each_param(params, [&](const char *name, const Mat &m) {
      *ref_slot(refs, name) = tape.param(&m, sinks[i++]);
    });
  } else {
    for_each_param(params, [&](const char *name, const Mat &m) {
      *ref_slot(refs, name) = tape.view(&m);
    });
  }
  return refs;
}

namespace {

// Bidirectional tanh layer over row nodes; returns stacked memory (T x hidden).
Tape::Ref birnn_g(Tape &tape, const std::vector<Tape::Ref> &inputs,
                  Tape::Ref fwd_x, Tape::Ref fwd_h, Tape::Ref fwd_b,
                  Tape::Ref bwd_x, Tape::Ref bwd_h, Tape::Ref bwd_b, int dh) {
  const int T = static_cast<int>(inputs.size());
  std::vector<Tape::Ref> fwd(T), bwd(T);
  Tape::Ref h = tape.input(Mat(1, dh));
  for (int t = 0; t < T; ++t) {
    Tape::Ref pre = tape.add(
        tape.add(tape.matmul(inputs[t], fwd_x), tape.matmul(h, fwd_h)), fwd_b);
    h = tape.tanh_op(pre);
    fwd[t] = h;
  }
  h = tape.input(Mat(1, dh));
  for (int t = T - 1; t >= 0; --t) {
    Tape::Ref pre = tape.add(
        tape.add(tape.matmul(inputs[t], bwd_x), tape.matmul(h, bwd_h)), bwd_b);
    h = tape.tanh_op(pre);
    bwd[t] = h;
  }
  std::vector<Tape::Ref> rows(T);
  for (int t = 0; t < T; ++t) rows[t] = tape.concat_cols({fwd[t], bwd[t]});
  return tape.stack_rows(rows);
}

}  // namespace

Tape::Ref encode_acoustic_g(Tape &tape, const ParamRefs &p,
                            Tape::Ref features) {
  const Mat &f = tape.val(features);
  require(f.rows >= 1, "encode_acoustic: empty input");
  require(f.cols == p.shape.feature_dim,
          "encode_acoustic: feature dimension " + std::to_string(f.cols) +
              " does not match model (" + std::to_string(p.shape.feature_dim) +
              ")");
  std::vector<Tape::Ref> rows(f.rows);
  for (int t = 0; t < f.rows; ++t) rows[t] = tape.select_row(features, t);
  return birnn_g(tape, rows, p.enc_fwd_x, p.enc_fwd_h, p.enc_fwd_b,
                 p.enc_bwd_x, p.enc_bwd_h, p.enc_bwd_b, p.shape.hidden / 2);
}

Tape::Ref ctc_logits_g(Tape &tape, const ParamRefs &p, Tape::Ref memory) {
  return tape.add_broadcast_row(tape.matmul(memory, p.ctc_w), p.ctc_b);
}

Tape::Ref encode_prompt_g(Tape &tape, const ParamRefs &p,
                          std::span<const int> stream) {
  require(p.augmented, "encode_prompt: model has no prompt encoder");
  require(!stream.empty(), "encode_prompt: empty stream");
  std::vector<Tape::Ref> rows;
  rows.reserve(stream.size());
  for (int sym : stream) {
    require(sym >= 0 && sym < p.shape.n_symbols,
            "encode_prompt: symbol out of inventory");
    rows.push_back(tape.select_row(p.pr_embed, sym));
  }
  return birnn_g(tape, rows, p.pr_fwd_x, p.pr_fwd_h, p.pr_fwd_b, p.pr_bwd_x,
                 p.pr_bwd_h, p.pr_bwd_b, p.shape.hidden / 2);
}

AttOut attention_g(Tape &tape, const ParamRefs &p, bool prompt_side,
                   Tape::Ref q_prev, Tape::Ref a_prev, Tape::Ref memory,
                   Tape::Ref keys) {
  const Tape::Ref w_q = prompt_side ? p.patt_w_q : p.att_w_q;
  const Tape::Ref w_f = prompt_side ? p.patt_w_f : p.att_w_f;
  const Tape::Ref conv = prompt_side ? p.patt_conv : p.att_conv;
  const Tape::Ref v = prompt_side ? p.patt_v : p.att_v;
  const Tape::Ref b = prompt_side ? p.patt_b : p.att_b;
  require(tape.val(a_prev).cols == tape.val(memory).rows,
          "attention: previous weights do not cover the memory");

  Tape::Ref content = tape.add(tape.matmul(q_prev, w_q), b);  // 1 x A
  Tape::Ref loc = tape.matmul(tape.conv1d_same(a_prev, conv), w_f);  // T x A
  Tape::Ref pre = tape.add_broadcast_row(tape.add(keys, loc), content);
  Tape::Ref scores = tape.transpose_op(tape.matmul(tape.tanh_op(pre), v));
  AttOut out;
  out.energies = scores;
  out.weights = tape.sharpened_softmax_row(scores, p.gamma);
  out.context = tape.matmul(out.weights, memory);
  return out;
}

StepOut decoder_cell_g(Tape &tape, const ParamRefs &p, Tape::Ref q_prev,
                       int prev_symbol, Tape::Ref ctx_acoustic,
                       std::optional<Tape::Ref> ctx_prompt, int blank,
                       int sos) {
  require(prev_symbol >= 0 && prev_symbol < p.shape.n_symbols,
          "decoder: previous symbol out of inventory");
  require(p.augmented == ctx_prompt.has_value(),
          p.augmented ? "decoder: augmented model requires a prompt context"
                      : "decoder: prompt context given to a plain model");
  Tape::Ref emb = tape.select_row(p.embed, prev_symbol);
  std::vector<Tape::Ref> in_parts = {emb, ctx_acoustic};
  if (ctx_prompt) in_parts.push_back(*ctx_prompt);
  Tape::Ref inp = tape.concat_cols(in_parts);
  Tape::Ref pre = tape.add(
      tape.add(tape.matmul(q_prev, p.dec_w_h), tape.matmul(inp, p.dec_w_in)),
      p.dec_b);
  StepOut out;
  out.q_new = tape.tanh_op(pre);
  std::vector<Tape::Ref> ro_parts = {out.q_new, ctx_acoustic};
  if (ctx_prompt) ro_parts.push_back(*ctx_prompt);
  Tape::Ref logits = tape.add_broadcast_row(
      tape.matmul(tape.concat_cols(ro_parts), p.out_w), p.out_b);
  out.logdist = tape.log_softmax_row_masked(logits, {blank, sos});
  return out;
}

}  // namespace graph

EncodedMemory encode_acoustic(const ModelParams &params, const Mat &features) {
  Tape tape;
  auto refs = graph::wrap_params(tape, params, nullptr);
  Tape::Ref f = tape.view(&features);
  Tape::Ref mem = graph::encode_acoustic_g(tape, refs, f);
  return EncodedMemory{tape.val(mem)};
}

Posteriorgram acoustic_posteriorgram(const ModelParams &params,
                                     const EncodedMemory &memory) {
  Tape tape;
  auto refs = graph::wrap_params(tape, params, nullptr);
  Tape::Ref mem = tape.view(&memory.vectors);
  Tape::Ref logits = graph::ctc_logits_g(tape, refs, mem);
  const Mat &l = tape.val(logits);
  Posteriorgram post;
  post.probs = Mat(l.rows, l.cols);
  for (int t = 0; t < l.rows; ++t)
    sharpened_softmax(l.row(t), 1.0, post.probs.row(t));
  return post;
}

std::vector<int> build_prompt_stream(std::span<const int> prompt,
                                     AugmentMode mode,
                                     const DurationStats &stats,
                                     double frames_per_token) {
  require(!prompt.empty(), "build_prompt_stream: empty prompt");
  require(mode != AugmentMode::kNone,
          "build_prompt_stream: augmentation is off");
  if (mode == AugmentMode::kPs)
    return std::vector<int>(prompt.begin(), prompt.end());
  require(frames_per_token > 0.0,
          "build_prompt_stream: frames_per_token must be positive");
  std::vector<int> stream;
  for (int phone : prompt) {
    const double mean = stats.mean_for(phone);
    int reps =
        std::max(1, static_cast<int>(std::llround(mean / frames_per_token)));
    for (int r = 0; r < reps; ++r) stream.push_back(phone);
  }
  return stream;
}

PromptEncoding encode_prompt(const ModelParams &params,
                             std::span<const int> stream) {
  Tape tape;
  auto refs = graph::wrap_params(tape, params, nullptr);
  Tape::Ref mem = graph::encode_prompt_g(tape, refs, stream);
  PromptEncoding enc;
  enc.stream.assign(stream.begin(), stream.end());
  enc.vectors = tape.val(mem);
  return enc;
}

DecoderState decoder_init(const ModelParams &params, int memory_len,
                          int prompt_len, int sos_symbol) {
  require(memory_len >= 1, "decoder_init: empty memory");
  require(!params.augmented() || prompt_len >= 1,
          "decoder_init: augmented model requires prompt memory");
  DecoderState st;
  st.q = Mat(1, params.shape.hidden);
  // Anchor the location features at the sequence start so the convolution
  // over a_prev carries a positional signal from the first step on.
  st.a_prev.assign(memory_len, 0.0);
  st.a_prev[0] = 1.0;
  if (params.augmented()) {
    st.prompt_a_prev.assign(prompt_len, 0.0);
    st.prompt_a_prev[0] = 1.0;
  }
  st.prev_symbol = sos_symbol;
  return st;
}

AttentionWeights attention_step(const ModelParams &params, const Mat &memory,
                                const DecoderState &state,
                                AttentionKind kind) {
  const bool prompt_side = kind == AttentionKind::kPrompt;
  require(!prompt_side || params.augmented(),
          "attention_step: model has no prompt attention");
  const std::vector<double> &a_prev =
      prompt_side ? state.prompt_a_prev : state.a_prev;
  require(static_cast<int>(a_prev.size()) == memory.rows,
          "attention_step: previous weights length " +
              std::to_string(a_prev.size()) + " does not match memory " +
              std::to_string(memory.rows));

  Tape tape;
  auto refs = graph::wrap_params(tape, params, nullptr);
  Mat a_row(1, memory.rows);
  std::copy(a_prev.begin(), a_prev.end(), a_row.data.begin());
  Tape::Ref mem = tape.view(&memory);
  Tape::Ref keys = tape.matmul(
      mem, prompt_side ? refs.patt_w_h : refs.att_w_h);
  auto att = graph::attention_g(tape, refs, prompt_side, tape.view(&state.q),
                                tape.input(std::move(a_row)), mem, keys);

  AttentionWeights out;
  const Mat &e = tape.val(att.energies);
  const Mat &w = tape.val(att.weights);
  out.energies.assign(e.data.begin(), e.data.end());
  out.weights.assign(w.data.begin(), w.data.end());
  out.context = tape.val(att.context);
  return out;
}

std::pair<std::vector<double>, DecoderState> decoder_step(
    const ModelParams &params, const DecoderState &state,
    const AttentionWeights &acoustic, const AttentionWeights *prompt,
    int blank, int sos) {
  require(state.prev_symbol >= 0, "decoder_step: state has no previous symbol");
  require(params.augmented() == (prompt != nullptr),
          params.augmented()
              ? "decoder_step: augmented model requires a prompt context"
              : "decoder_step: prompt context given to a plain model");

  Tape tape;
  auto refs = graph::wrap_params(tape, params, nullptr);
  Tape::Ref ctx_ac = tape.view(&acoustic.context);
  std::optional<Tape::Ref> ctx_pr;
  if (prompt) ctx_pr = tape.view(&prompt->context);
  auto step = graph::decoder_cell_g(tape, refs, tape.view(&state.q),
                                    state.prev_symbol, ctx_ac, ctx_pr, blank,
                                    sos);

  DecoderState next;
  next.q = tape.val(step.q_new);
  next.a_prev = acoustic.weights;
  if (prompt) next.prompt_a_prev = prompt->weights;
  next.prev_symbol = -1;  // the caller picks the emitted symbol

  const Mat &ld = tape.val(step.logdist);
  return {std::vector<double>(ld.data.begin(), ld.data.end()),
          std::move(next)};
}

}  // namespace mde
