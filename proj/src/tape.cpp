// mde/tape.cpp

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

#include "mde/tape.hpp"

#include <algorithm>
#include <cmath>

#include "mde/ctc.hpp"

namespace mde {

Tape::Ref Tape::push(Mat value, bool needs_grad,
                     std::function<void(Tape &)> back) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::input(Mat value) { return push(std::move(value), false, {}); }

Tape::Ref Tape::view(const Mat *value) {
  Node n;
  n.external = value;
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::param(const Mat *value, Mat *grad_sink) {
  Node n;
  n.external = value;
  n.grad_sink = grad_sink;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size() - 1);
}

const Mat &Tape::val(Ref r) const { return value_of(nodes_[r]); }

double Tape::scalar(Ref r) const {
  const Mat &m = val(r);
  require(m.rows == 1 && m.cols == 1, "tape: node is not a scalar");
  return m.data[0];
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
  Mat c = mde::matmul(val(a), val(b));
  bool ng = needs(a) || needs(b);
  return push(std::move(c), ng, [a, b, self = num_nodes()](Tape &t) {
    const Mat &g = t.grad(static_cast<Ref>(self));
    if (t.needs(a)) matmul_acc(g, transpose(t.val(b)), &t.grad(a));
    if (t.needs(b)) matmul_acc(transpose(t.val(a)), g, &t.grad(b));
  });
}

Tape::Ref Tape::add(Ref a, Ref b) {
  const Mat &va = val(a);
  const Mat &vb = val(b);
  require(va.same_shape(vb), "tape add: shape mismatch");
  Mat c = va;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += vb.data[i];
  bool ng = needs(a) || needs(b);
  return push(std::move(c), ng, [a, b, self = num_nodes()](Tape &t) {
    const Mat &g = t.grad(static_cast<Ref>(self));
    for (Ref in : {a, b}) {
      if (!t.needs(in)) continue;
      Mat &gi = t.grad(in);
      for (size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
    }
  });
}

Tape::Ref Tape::add_broadcast_row(Ref m, Ref row) {
  const Mat &vm = val(m);
  const Mat &vr = val(row);
  require(vr.rows == 1 && vr.cols == vm.cols,
          "tape add_broadcast_row: shape mismatch");
  Mat c = vm;
  for (int i = 0; i < c.rows; ++i)
    for (int j = 0; j < c.cols; ++j) c.at(i, j) += vr.at(0, j);
  bool ng = needs(m) || needs(row);
  return push(std::move(c), ng, [m, row, self = num_nodes()](Tape &t) {
    const Mat &g = t.grad(static_cast<Ref>(self));
    if (t.needs(m)) {
      Mat &gm = t.grad(m);
      for (size_t i = 0; i < g.data.size(); ++i) gm.data[i] += g.data[i];
    }
    if (t.needs(row)) {
      Mat &gr = t.grad(row);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) gr.at(0, j) += g.at(i, j);
    }
  });
}

Tape::Ref Tape::scale(Ref a, double s) {
  Mat c = val(a);
  for (double &v : c.data) v *= s;
  return push(std::move(c), needs(a), [a, s, self = num_nodes()](Tape &t) {
    if (!t.needs(a)) return;
    const Mat &g = t.grad(static_cast<Ref>(self));
    Mat &ga = t.grad(a);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += s * g.data[i];
  });
}

Tape::Ref Tape::tanh_op(Ref a) {
  Mat c = val(a);
  for (double &v : c.data) v = std::tanh(v);
  return push(std::move(c), needs(a), [a, self = num_nodes()](Tape &t) {
    if (!t.needs(a)) return;
    const Mat &y = t.val(static_cast<Ref>(self));
    const Mat &g = t.grad(static_cast<Ref>(self));
    Mat &ga = t.grad(a);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  });
}

Tape::Ref Tape::transpose_op(Ref a) {
  Mat c = transpose(val(a));
  return push(std::move(c), needs(a), [a, self = num_nodes()](Tape &t) {
    if (!t.needs(a)) return;
    Mat gt = transpose(t.grad(static_cast<Ref>(self)));
    Mat &ga = t.grad(a);
    for (size_t i = 0; i < gt.data.size(); ++i) ga.data[i] += gt.data[i];
  });
}

Tape::Ref Tape::concat_cols(const std::vector<Ref> &parts) {
  require(!parts.empty(), "tape concat_cols: no inputs");
  int total = 0;
  bool ng = false;
  for (Ref p : parts) {
    require(val(p).rows == 1, "tape concat_cols: inputs must be rows");
    total += val(p).cols;
    ng = ng || needs(p);
  }
  Mat c(1, total);
  int off = 0;
  for (Ref p : parts) {
    const Mat &v = val(p);
    std::copy(v.data.begin(), v.data.end(), c.data.begin() + off);
    off += v.cols;
  }
  return push(std::move(c), ng,
              [parts, self = num_nodes()](Tape &t) {
                const Mat &g = t.grad(static_cast<Ref>(self));
                int off2 = 0;
                for (Ref p : parts) {
                  int w = t.val(p).cols;
                  if (t.needs(p)) {
                    Mat &gp = t.grad(p);
                    for (int j = 0; j < w; ++j) gp.at(0, j) += g.at(0, off2 + j);
                  }
                  off2 += w;
                }
              });
}

Tape::Ref Tape::stack_rows(const std::vector<Ref> &rows) {
  require(!rows.empty(), "tape stack_rows: no inputs");
  const int cols = val(rows[0]).cols;
  bool ng = false;
  for (Ref r : rows) {
    require(val(r).rows == 1 && val(r).cols == cols,
            "tape stack_rows: inputs must be rows of equal width");
    ng = ng || needs(r);
  }
  Mat c(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    const Mat &v = val(rows[i]);
    std::copy(v.data.begin(), v.data.end(),
              c.data.begin() + static_cast<long>(i) * cols);
  }
  return push(std::move(c), ng, [rows, self = num_nodes()](Tape &t) {
    const Mat &g = t.grad(static_cast<Ref>(self));
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!t.needs(rows[i])) continue;
      Mat &gr = t.grad(rows[i]);
      for (int j = 0; j < g.cols; ++j)
        gr.at(0, j) += g.at(static_cast<int>(i), j);
    }
  });
}

Tape::Ref Tape::select_row(Ref m, int r) {
  const Mat &vm = val(m);
  require(r >= 0 && r < vm.rows, "tape select_row: row out of range");
  Mat c(1, vm.cols);
  for (int j = 0; j < vm.cols; ++j) c.at(0, j) = vm.at(r, j);
  return push(std::move(c), needs(m), [m, r, self = num_nodes()](Tape &t) {
    if (!t.needs(m)) return;
    const Mat &g = t.grad(static_cast<Ref>(self));
    Mat &gm = t.grad(m);
    for (int j = 0; j < g.cols; ++j) gm.at(r, j) += g.at(0, j);
  });
}

Tape::Ref Tape::sharpened_softmax_row(Ref energies, double gamma) {
  const Mat &e = val(energies);
  require(e.rows == 1, "tape sharpened_softmax_row: input must be a row");
  Mat c(1, e.cols);
  sharpened_softmax(e.row(0), gamma, c.row(0));
  return push(std::move(c), needs(energies),
              [energies, gamma, self = num_nodes()](Tape &t) {
                if (!t.needs(energies)) return;
                const Mat &y = t.val(static_cast<Ref>(self));
                const Mat &g = t.grad(static_cast<Ref>(self));
                Mat &ge = t.grad(energies);
                double dot = 0.0;
                for (int j = 0; j < y.cols; ++j)
                  dot += g.at(0, j) * y.at(0, j);
                for (int j = 0; j < y.cols; ++j)
                  ge.at(0, j) += gamma * y.at(0, j) * (g.at(0, j) - dot);
              });
}

Tape::Ref Tape::log_softmax_row_masked(Ref logits, std::vector<int> masked) {
  const Mat &l = val(logits);
  require(l.rows == 1, "tape log_softmax_row_masked: input must be a row");
  std::vector<bool> is_masked(l.cols, false);
  for (int m : masked) {
    require(m >= 0 && m < l.cols, "tape log_softmax_row_masked: bad index");
    is_masked[m] = true;
  }
  double mx = kNegInf;
  for (int j = 0; j < l.cols; ++j)
    if (!is_masked[j]) mx = std::max(mx, l.at(0, j));
  require(mx != kNegInf, "tape log_softmax_row_masked: all entries masked");
  double z = 0.0;
  for (int j = 0; j < l.cols; ++j)
    if (!is_masked[j]) z += std::exp(l.at(0, j) - mx);
  const double log_z = mx + std::log(z);
  Mat c(1, l.cols);
  for (int j = 0; j < l.cols; ++j)
    c.at(0, j) = is_masked[j] ? kNegInf : l.at(0, j) - log_z;
  return push(std::move(c), needs(logits),
              [logits, is_masked, self = num_nodes()](Tape &t) {
                if (!t.needs(logits)) return;
                const Mat &out = t.val(static_cast<Ref>(self));
                const Mat &g = t.grad(static_cast<Ref>(self));
                Mat &gl = t.grad(logits);
                double gsum = 0.0;
                for (int j = 0; j < out.cols; ++j)
                  if (!is_masked[j]) gsum += g.at(0, j);
                for (int j = 0; j < out.cols; ++j) {
                  if (is_masked[j]) continue;
                  gl.at(0, j) += g.at(0, j) - std::exp(out.at(0, j)) * gsum;
                }
              });
}

Tape::Ref Tape::pick_negative(Ref row, int idx) {
  const Mat &v = val(row);
  require(v.rows == 1 && idx >= 0 && idx < v.cols,
          "tape pick_negative: index out of range");
  Mat c(1, 1);
  c.data[0] = -v.at(0, idx);
  return push(std::move(c), needs(row), [row, idx, self = num_nodes()](Tape &t) {
    if (!t.needs(row)) return;
    t.grad(row).at(0, idx) -= t.grad(static_cast<Ref>(self)).data[0];
  });
}

Tape::Ref Tape::conv1d_same(Ref a, Ref kernel) {
  const Mat &v = val(a);
  const Mat &k = val(kernel);
  require(v.rows == 1, "tape conv1d_same: input must be a row");
  require(k.cols % 2 == 1, "tape conv1d_same: kernel width must be odd");
  const int T = v.cols;
  const int F = k.rows;
  const int W = k.cols;
  const int c0 = W / 2;
  Mat c(T, F);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      double acc = 0.0;
      for (int w = 0; w < W; ++w) {
        int tau = t + w - c0;
        if (tau >= 0 && tau < T) acc += k.at(f, w) * v.at(0, tau);
      }
      c.at(t, f) = acc;
    }
  }
  bool ng = needs(a) || needs(kernel);
  return push(std::move(c), ng, [a, kernel, T, F, W, c0,
                                 self = num_nodes()](Tape &t) {
    const Mat &g = t.grad(static_cast<Ref>(self));
    const Mat &v = t.val(a);
    const Mat &k = t.val(kernel);
    for (int tt = 0; tt < T; ++tt) {
      for (int f = 0; f < F; ++f) {
        const double gv = g.at(tt, f);
        if (gv == 0.0) continue;
        for (int w = 0; w < W; ++w) {
          int tau = tt + w - c0;
          if (tau < 0 || tau >= T) continue;
          if (t.needs(a)) t.grad(a).at(0, tau) += gv * k.at(f, w);
          if (t.needs(kernel)) t.grad(kernel).at(f, w) += gv * v.at(0, tau);
        }
      }
    }
  });
}

Tape::Ref Tape::weighted_scalar_sum(const std::vector<Ref> &scalars,
                                    const std::vector<double> &weights) {
  require(scalars.size() == weights.size() && !scalars.empty(),
          "tape weighted_scalar_sum: size mismatch");
  Mat c(1, 1);
  bool ng = false;
  for (size_t i = 0; i < scalars.size(); ++i) {
    c.data[0] += weights[i] * scalar(scalars[i]);
    ng = ng || needs(scalars[i]);
  }
  return push(std::move(c), ng,
              [scalars, weights, self = num_nodes()](Tape &t) {
                const double g = t.grad(static_cast<Ref>(self)).data[0];
                for (size_t i = 0; i < scalars.size(); ++i) {
                  if (t.needs(scalars[i]))
                    t.grad(scalars[i]).data[0] += weights[i] * g;
                }
              });
}

Tape::Ref Tape::ctc_nll(Ref logits, std::vector<int> target, int blank) {
  const Mat &l = val(logits);
  Posteriorgram post;
  post.probs = Mat(l.rows, l.cols);
  for (int t = 0; t < l.rows; ++t)
    sharpened_softmax(l.row(t), 1.0, post.probs.row(t));
  Mat c(1, 1);
  c.data[0] = ctc_loss(post, target, blank);
  require(std::isfinite(c.data[0]),
          "ctc_nll: non-finite loss (zero-probability alignment)");
  return push(std::move(c), needs(logits),
              [logits, post = std::move(post), target = std::move(target),
               blank, self = num_nodes()](Tape &t) {
                if (!t.needs(logits)) return;
                const double g = t.grad(static_cast<Ref>(self)).data[0];
                Mat dl = ctc_grad(post, target, blank);
                Mat &gl = t.grad(logits);
                for (size_t i = 0; i < dl.data.size(); ++i)
                  gl.data[i] += g * dl.data[i];
              });
}

void Tape::backward(Ref root) {
  require(root >= 0 && static_cast<size_t>(root) < nodes_.size(),
          "tape backward: bad root");
  const Mat &rv = val(root);
  require(rv.rows == 1 && rv.cols == 1, "tape backward: root must be scalar");
  for (auto &n : nodes_) {
    if (n.needs_grad) {
      const Mat &v = value_of(n);
      n.grad = Mat(v.rows, v.cols);
    }
  }
  require(nodes_[root].needs_grad,
          "tape backward: root does not depend on any parameter");
  nodes_[root].grad.data[0] = 1.0;
  for (int i = root; i >= 0; --i) {
    if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back(*this);
  }
  for (auto &n : nodes_) {
    if (n.grad_sink) {
      require(n.grad_sink->same_shape(n.grad),
              "tape backward: grad sink shape mismatch");
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        n.grad_sink->data[i] += n.grad.data[i];
    }
  }
}

}  // namespace mde
