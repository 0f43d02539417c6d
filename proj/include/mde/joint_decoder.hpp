// mde/joint_decoder.hpp

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

#ifndef MDE_JOINT_DECODER_HPP_
#define MDE_JOINT_DECODER_HPP_

#include "mde/ctc.hpp"
#include "mde/hypothesis.hpp"
#include "mde/model.hpp"

namespace mde {

struct JointConfig {
  double lambda = 0.3;     // CTC weight in the interpolation
  int beam_width = 4;
  int max_output_len = 0;  // 0: capped at the frame count
  int nbest_per_step = 5;  // alternatives kept per step, in [1,5]

  void validate() const;
};

// One-pass label-synchronous beam search scoring every candidate with
// lambda * ctc_prefix + (1-lambda) * attention. A hypothesis ends on eos,
// where the CTC side switches from prefix to exact-sequence probability; the
// best eos-terminated hypothesis wins, falling back to the best live one when
// nothing terminated within the length cap. Per-step records carry the joint
// candidate ranking (phones only) of the winning beam's parent, emitted
// symbol first. Ties break on the lower symbol index.
Hypothesis joint_beam_search(const ModelParams &params,
                             const Posteriorgram &post,
                             const EncodedMemory &memory,
                             const PromptEncoding *prompt_mem,
                             const JointConfig &cfg,
                             const PhoneInventory &inv);

// Top-n symbols of the ranked candidate list stored at `position`.
std::vector<int> step_nbest(const Hypothesis &hyp, int position, int n);

}  // namespace mde

#endif  // MDE_JOINT_DECODER_HPP_
