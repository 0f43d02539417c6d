// mde/model.hpp

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

#ifndef MDE_MODEL_HPP_
#define MDE_MODEL_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mde/corpus.hpp"
#include "mde/ctc.hpp"
#include "mde/numerics.hpp"

namespace mde {

enum class AugmentMode { kNone, kPs, kRps };

std::string to_string(AugmentMode mode);
AugmentMode augment_from_string(const std::string &s);

struct ModelShape {
  int feature_dim = 8;
  int n_symbols = 0;     // full inventory width, blank/sos/eos included
  int hidden = 32;       // memory width; each recurrent direction is hidden/2
  int attn_dim = 32;
  int conv_filters = 4;  // location-feature bank over previous weights
  int conv_width = 5;

  void validate() const;
};

// All trainable state plus the decode-time defaults that travel with a
// checkpoint. Matrices are laid out for row-vector times matrix products.
struct ModelParams {
  ModelShape shape;
  AugmentMode augment = AugmentMode::kNone;
  double gamma = 1.0;           // attention sharpening
  double lambda_mtl = 0.5;      // training interpolation this model was built with
  double lambda_decode = 0.3;   // default decode interpolation
  double frames_per_token = 1.0;  // repeated-stream granularity
  uint64_t inventory_hash = 0;

  // acoustic encoder, one recurrent layer per direction
  Mat enc_fwd_x, enc_fwd_h, enc_fwd_b;
  Mat enc_bwd_x, enc_bwd_h, enc_bwd_b;
  // CTC head over the memory
  Mat ctc_w, ctc_b;
  // attention decoder
  Mat embed;
  Mat dec_w_h, dec_w_in, dec_b;
  Mat out_w, out_b;
  Mat att_w_q, att_w_h, att_w_f, att_conv, att_v, att_b;
  // text-prompt encoder and its attention (augmented models only)
  Mat pr_embed;
  Mat pr_fwd_x, pr_fwd_h, pr_fwd_b;
  Mat pr_bwd_x, pr_bwd_h, pr_bwd_b;
  Mat patt_w_q, patt_w_h, patt_w_f, patt_conv, patt_v, patt_b;

  bool augmented() const { return augment != AugmentMode::kNone; }
  int decoder_input_width() const {
    return shape.hidden * (augmented() ? 3 : 2);
  }
  int readout_width() const { return shape.hidden * (augmented() ? 3 : 2); }
};

ModelParams init_model(const ModelShape &shape, AugmentMode augment,
                       double gamma, uint64_t inventory_hash, uint64_t seed);

// Visits every matrix present in this model, in a fixed order.
void for_each_param(ModelParams &params,
                    const std::function<void(const char *, Mat &)> &fn);
void for_each_param(const ModelParams &params,
                    const std::function<void(const char *, const Mat &)> &fn);

// Zero-valued clone with identical structure, for gradient accumulation.
ModelParams zeros_like(const ModelParams &params);

struct EncodedMemory {
  Mat vectors;  // T' x hidden
  int length() const { return vectors.rows; }
};

struct PromptEncoding {
  std::vector<int> stream;
  Mat vectors;  // L' x hidden
  int length() const { return vectors.rows; }
};

struct DecoderState {
  Mat q;                              // 1 x hidden
  std::vector<double> a_prev;         // over acoustic memory
  std::vector<double> prompt_a_prev;  // over prompt memory, augmented only
  int prev_symbol = -1;
};

struct AttentionWeights {
  std::vector<double> energies;
  std::vector<double> weights;  // sharpened softmax of energies
  Mat context;                  // 1 x hidden
  int peak() const;
};

enum class AttentionKind { kAcoustic, kPrompt };

EncodedMemory encode_acoustic(const ModelParams &params, const Mat &features);

// Posteriorgram from the CTC head (softmax over the full inventory).
Posteriorgram acoustic_posteriorgram(const ModelParams &params,
                                     const EncodedMemory &memory);

// PS passes the prompt through verbatim; RPS repeats each phone
// round(mean_frames(phone) / frames_per_token) times, at least once.
std::vector<int> build_prompt_stream(std::span<const int> prompt,
                                     AugmentMode mode,
                                     const DurationStats &stats,
                                     double frames_per_token);

PromptEncoding encode_prompt(const ModelParams &params,
                             std::span<const int> stream);

DecoderState decoder_init(const ModelParams &params, int memory_len,
                          int prompt_len, int sos_symbol);

AttentionWeights attention_step(const ModelParams &params, const Mat &memory,
                                const DecoderState &state, AttentionKind kind);

// One decode step: consumes the previous symbol and the attention contexts,
// returns a normalized log-distribution over {phones, eos} (blank and sos
// masked to -inf) plus the advanced state. The caller sets prev_symbol on the
// returned state once it picks a symbol. Augmented models require the prompt
// context.
std::pair<std::vector<double>, DecoderState> decoder_step(
    const ModelParams &params, const DecoderState &state,
    const AttentionWeights &acoustic, const AttentionWeights *prompt,
    int blank, int sos);

}  // namespace mde

#endif  // MDE_MODEL_HPP_
