// mde/tape.hpp

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

#ifndef MDE_TAPE_HPP_
#define MDE_TAPE_HPP_

#include <functional>
#include <vector>

#include "mde/numerics.hpp"

namespace mde {

// Reverse-mode tape over Mat values. One tape holds one forward pass; ops
// append nodes and backward() walks them in reverse. Small by design: exactly
// the operations the recurrent encoder, location-aware attention decoder and
// CTC head need, in double precision throughout. Inference builds the same
// graphs with borrowed constant leaves and simply never calls backward().
class Tape {
 public:
  using Ref = int;

  // Owned constant leaf.
  Ref input(Mat value);
  // Borrowed constant leaf; `value` must outlive the tape.
  Ref view(const Mat *value);
  // Borrowed trainable leaf; backward() accumulates into `grad_sink`.
  Ref param(const Mat *value, Mat *grad_sink);

  const Mat &val(Ref r) const;
  double scalar(Ref r) const;

  Ref matmul(Ref a, Ref b);
  Ref add(Ref a, Ref b);
  // m (R x C) plus a broadcast 1 x C row.
  Ref add_broadcast_row(Ref m, Ref row);
  Ref scale(Ref a, double s);
  Ref tanh_op(Ref a);
  Ref transpose_op(Ref a);
  // All inputs 1 x C_i; result 1 x sum(C_i).
  Ref concat_cols(const std::vector<Ref> &parts);
  // All inputs 1 x C; result N x C.
  Ref stack_rows(const std::vector<Ref> &rows);
  // 1 x C slice of row r; gradients scatter back into that row.
  Ref select_row(Ref m, int r);
  // Softmax with sharpening over a 1 x N row (attention weights, Eq.-style
  // exp(gamma*e)/sum).
  Ref sharpened_softmax_row(Ref energies, double gamma);
  // Row log-softmax with selected indices pinned to -inf and excluded from
  // the normalization.
  Ref log_softmax_row_masked(Ref logits, std::vector<int> masked);
  // Scalar -row[idx] (one cross-entropy term).
  Ref pick_negative(Ref row, int idx);
  // Same-padded 1-D convolution of a 1 x T row with an F x W filter bank;
  // result T x F.
  Ref conv1d_same(Ref a, Ref kernel);
  // Weighted sum of 1 x 1 scalars.
  Ref weighted_scalar_sum(const std::vector<Ref> &scalars,
                          const std::vector<double> &weights);
  // CTC negative log-likelihood of `target` for a T x V logit matrix; the
  // forward pass softmaxes rows, the backward pass is the forward-backward
  // gradient.
  Ref ctc_nll(Ref logits, std::vector<int> target, int blank);

  // Seeds d(root)=1 and accumulates into every reachable param's grad sink.
  // `root` must be scalar.
  void backward(Ref root);

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Mat owned;
    const Mat *external = nullptr;  // view/param leaves
    Mat *grad_sink = nullptr;       // param leaves
    Mat grad;
    bool needs_grad = false;
    std::function<void(Tape &)> back;
  };

  const Mat &value_of(const Node &n) const {
    return n.external ? *n.external : n.owned;
  }
  Ref push(Mat value, bool needs_grad, std::function<void(Tape &)> back);
  Mat &grad(Ref r) { return nodes_[r].grad; }
  bool needs(Ref r) const { return nodes_[r].needs_grad; }

  std::vector<Node> nodes_;
};

}  // namespace mde

#endif  // MDE_TAPE_HPP_
