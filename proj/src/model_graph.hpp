// mde/model_graph.hpp

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

// Tape-level forward builders shared by inference (constant leaves) and
// training (parameter leaves). Keeping one forward definition is what makes
// the finite-difference checks meaningful for the decode path too.

#ifndef MDE_SRC_MODEL_GRAPH_HPP_
#define MDE_SRC_MODEL_GRAPH_HPP_

#include <optional>
#include <span>

#include "mde/model.hpp"
#include "mde/tape.hpp"

namespace mde {
namespace graph {

struct ParamRefs {
  ModelShape shape;
  bool augmented = false;
  double gamma = 1.0;

  Tape::Ref enc_fwd_x = -1, enc_fwd_h = -1, enc_fwd_b = -1;
  Tape::Ref enc_bwd_x = -1, enc_bwd_h = -1, enc_bwd_b = -1;
  Tape::Ref ctc_w = -1, ctc_b = -1;
  Tape::Ref embed = -1;
  Tape::Ref dec_w_h = -1, dec_w_in = -1, dec_b = -1;
  Tape::Ref out_w = -1, out_b = -1;
  Tape::Ref att_w_q = -1, att_w_h = -1, att_w_f = -1, att_conv = -1,
            att_v = -1, att_b = -1;
  Tape::Ref pr_embed = -1;
  Tape::Ref pr_fwd_x = -1, pr_fwd_h = -1, pr_fwd_b = -1;
  Tape::Ref pr_bwd_x = -1, pr_bwd_h = -1, pr_bwd_b = -1;
  Tape::Ref patt_w_q = -1, patt_w_h = -1, patt_w_f = -1, patt_conv = -1,
            patt_v = -1, patt_b = -1;
};

// grads == nullptr wraps constants (inference); otherwise parameter leaves
// accumulating into the matching matrices of *grads.
ParamRefs wrap_params(Tape &tape, const ModelParams &params,
                      ModelParams *grads);

// One recurrent layer per direction over the feature rows; memory row t is
// [fwd_t ; bwd_t], width shape.hidden.
Tape::Ref encode_acoustic_g(Tape &tape, const ParamRefs &p, Tape::Ref features);

Tape::Ref ctc_logits_g(Tape &tape, const ParamRefs &p, Tape::Ref memory);

// Embeds the symbol stream, then runs the same bidirectional layer structure.
Tape::Ref encode_prompt_g(Tape &tape, const ParamRefs &p,
                          std::span<const int> stream);

struct AttOut {
  Tape::Ref energies;  // 1 x T
  Tape::Ref weights;   // 1 x T
  Tape::Ref context;   // 1 x hidden
};

// Location-aware energies: v' tanh(W q + V h_t + U conv(a_prev) + b).
// `keys` is matmul(memory, w_h), precomputed once per utterance.
AttOut attention_g(Tape &tape, const ParamRefs &p, bool prompt_side,
                   Tape::Ref q_prev, Tape::Ref a_prev, Tape::Ref memory,
                   Tape::Ref keys);

struct StepOut {
  Tape::Ref q_new;    // 1 x hidden
  Tape::Ref logdist;  // 1 x V, blank and sos at -inf
};

StepOut decoder_cell_g(Tape &tape, const ParamRefs &p, Tape::Ref q_prev,
                       int prev_symbol, Tape::Ref ctx_acoustic,
                       std::optional<Tape::Ref> ctx_prompt, int blank,
                       int sos);

}  // namespace graph
}  // namespace mde

#endif  // MDE_SRC_MODEL_GRAPH_HPP_
