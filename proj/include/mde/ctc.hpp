// mde/ctc.hpp

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

#ifndef MDE_CTC_HPP_
#define MDE_CTC_HPP_

#include <span>
#include <utility>
#include <vector>

#include "mde/hypothesis.hpp"
#include "mde/numerics.hpp"

namespace mde {

// Per-frame probabilities over the symbol inventory, blank included. Rows sum
// to one.
struct Posteriorgram {
  Mat probs;

  int frames() const { return probs.rows; }
  int symbols() const { return probs.cols; }
  // Throws unless every row is a probability vector within tol.
  void validate(double tol = 1e-9) const;
};

// Posteriorgram file: magic "MDE2", uint32 LE dims, float64 LE row-major,
// rows in inventory order.
void write_posteriorgram(const std::string &path, const Posteriorgram &post);
Posteriorgram read_posteriorgram(const std::string &path);

// Fewest frames that can realize `target`: one per label plus one separator
// blank between each adjacent repeated pair.
int ctc_min_frames(std::span<const int> target);

// Negative log-likelihood of `target` under the posteriorgram, marginalized
// over all blank-augmented alignments with the standard 2L+1 forward DP.
// A structurally impossible target (too few frames) throws; a target whose
// every alignment has probability zero returns +inf.
double ctc_loss(const Posteriorgram &post, std::span<const int> target,
                int blank);

// Gradient of ctc_loss with respect to the pre-softmax logits that produced
// `post`: softmax minus per-frame alignment occupancies. Throws on zero total
// probability (the gradient does not exist there).
Mat ctc_grad(const Posteriorgram &post, std::span<const int> target, int blank,
             double *loss_out = nullptr);

// Incremental prefix scoring for label-synchronous decoding. log_b[t] /
// log_nb[t] carry the probability of emitting exactly this prefix within the
// first t frames with a blank / non-blank path ending; log_psi is the prefix
// probability log P(output begins with prefix).
struct CtcPrefixState {
  std::vector<double> log_b;
  std::vector<double> log_nb;
  double log_psi = 0.0;
  int last_symbol = -1;
};

CtcPrefixState ctc_prefix_init(const Posteriorgram &post, int blank);

// Returns (log_psi(prefix+symbol) - log_psi(prefix), advanced state).
// `symbol` must not be the blank.
std::pair<double, CtcPrefixState> ctc_prefix_advance(const Posteriorgram &post,
                                                     const CtcPrefixState &state,
                                                     int symbol, int blank);

// End-of-sequence closure: log P(output == prefix) - log_psi(prefix). Summing
// advance increments along a sequence plus this closure reproduces
// -ctc_loss(sequence).
double ctc_prefix_close(const CtcPrefixState &state);

// Frame-synchronous prefix beam search over collapsed sequences. Candidate
// emissions are restricted to `emit_symbols` (the phones). With a beam wide
// enough to hold every live prefix the result is the exact MAP collapsed
// sequence. Step records are reconstructed by prefix-score replay so N-best
// decisions work on pure-CTC hypotheses too.
Hypothesis ctc_beam_decode(const Posteriorgram &post, int beam_width,
                           int blank, std::span<const int> emit_symbols,
                           int nbest_per_step = 5);

enum class PosteriorPooling { kMax, kMeanOccupied };

struct PositionPosteriors {
  std::vector<double> p;  // one value in [0,1] per prompt position
  bool feasible = true;   // false: utterance cannot align to the prompt
};

// Constrained forward-backward against the prompt's expanded label sequence;
// per position, pools the normalized occupancy of that position over frames.
// Infeasible prompts (or zero-probability alignments) yield all-zero
// posteriors with the flag cleared instead of an error.
PositionPosteriors prompt_position_posterior(
    const Posteriorgram &post, std::span<const int> prompt, int blank,
    PosteriorPooling pooling = PosteriorPooling::kMax);

}  // namespace mde

#endif  // MDE_CTC_HPP_
