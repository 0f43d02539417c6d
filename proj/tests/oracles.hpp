// tests/oracles.hpp

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

// Brute-force reference implementations used by unit and acceptance tests.
// Everything here is deliberately independent of the production DP code
// paths: path enumeration instead of lattices, recursion instead of
// backtraces.

#ifndef MDE_TESTS_ORACLES_HPP_
#define MDE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mde/ctc.hpp"
#include "mde/numerics.hpp"

namespace mde::oracle {

// Merge repeats, then drop blanks.
inline std::vector<int> collapse(const std::vector<int> &path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

// Walks every |V|^T frame path.
template <typename Fn>
void for_each_path(int frames, int symbols, const Fn &fn) {
  std::vector<int> path(frames, 0);
  while (true) {
    fn(path);
    int i = frames - 1;
    while (i >= 0 && ++path[i] == symbols) path[i--] = 0;
    if (i < 0) break;
  }
}

// Sum of path probabilities over every collapse-preimage of `target`.
inline double ctc_loss(const Posteriorgram &post, const std::vector<int> &target,
                       int blank) {
  double total = 0.0;
  for_each_path(post.frames(), post.symbols(), [&](const std::vector<int> &path) {
    if (collapse(path, blank) != target) return;
    double p = 1.0;
    for (int t = 0; t < post.frames(); ++t) p *= post.probs.at(t, path[t]);
    total += p;
  });
  return -std::log(total);
}

// Probability that the collapsed output starts with `prefix`.
inline double ctc_prefix_prob(const Posteriorgram &post,
                              const std::vector<int> &prefix, int blank) {
  double total = 0.0;
  for_each_path(post.frames(), post.symbols(), [&](const std::vector<int> &path) {
    const auto c = collapse(path, blank);
    if (c.size() < prefix.size() ||
        !std::equal(prefix.begin(), prefix.end(), c.begin()))
      return;
    double p = 1.0;
    for (int t = 0; t < post.frames(); ++t) p *= post.probs.at(t, path[t]);
    total += p;
  });
  return total;
}

// Highest-probability collapsed sequence (exhaustive over paths).
inline std::vector<int> ctc_map_sequence(const Posteriorgram &post, int blank) {
  std::map<std::vector<int>, double> mass;
  for_each_path(post.frames(), post.symbols(), [&](const std::vector<int> &path) {
    double p = 1.0;
    for (int t = 0; t < post.frames(); ++t) p *= post.probs.at(t, path[t]);
    mass[collapse(path, blank)] += p;
  });
  const std::vector<int> *best = nullptr;
  double best_p = -1.0;
  for (const auto &[seq, p] : mass) {
    if (p > best_p) {
      best = &seq;
      best_p = p;
    }
  }
  return *best;
}

// Per-frame occupancy of each expanded-label position, by enumerating the
// monotone alignment paths of the standard CTC lattice.
inline Mat alignment_occupancy(const Posteriorgram &post,
                               const std::vector<int> &prompt, int blank,
                               double *total_prob_out = nullptr) {
  const int T = post.frames();
  std::vector<int> lab(2 * prompt.size() + 1, blank);
  for (size_t i = 0; i < prompt.size(); ++i) lab[2 * i + 1] = prompt[i];
  const int S = static_cast<int>(lab.size());

  Mat occ(T, S);
  double total = 0.0;
  std::vector<int> states(T);

  auto walk = [&](auto &&self, int t, int s, double p) -> void {
    if (p == 0.0) return;
    states[t] = s;
    const double pp = p * post.probs.at(t, lab[s]);
    if (t == T - 1) {
      if (s == S - 1 || s == S - 2) {
        total += pp;
        for (int u = 0; u < T; ++u) occ.at(u, states[u]) += pp;
      }
      return;
    }
    self(self, t + 1, s, pp);
    if (s + 1 < S) self(self, t + 1, s + 1, pp);
    if (s + 2 < S && lab[s + 2] != lab[s]) self(self, t + 1, s + 2, pp);
  };
  walk(walk, 0, 0, 1.0);
  if (S > 1) walk(walk, 0, 1, 1.0);

  if (total_prob_out) *total_prob_out = total;
  if (total > 0.0) {
    for (double &v : occ.data) v /= total;
  }
  return occ;
}

// Plain cost-only Levenshtein, written independently of align().
inline int edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Exponential recursive edit distance, the most literal brute force.
inline int edit_distance_recursive(std::span<const int> a,
                                   std::span<const int> b) {
  if (a.empty()) return static_cast<int>(b.size());
  if (b.empty()) return static_cast<int>(a.size());
  const int diag = edit_distance_recursive(a.subspan(1), b.subspan(1)) +
                   (a[0] == b[0] ? 0 : 1);
  const int del = edit_distance_recursive(a.subspan(1), b) + 1;
  const int ins = edit_distance_recursive(a, b.subspan(1)) + 1;
  return std::min({diag, del, ins});
}

// Random posteriorgram with strictly positive rows.
inline Posteriorgram random_posteriorgram(int frames, int symbols, Rng &rng) {
  Posteriorgram post;
  post.probs = Mat(frames, symbols);
  for (int t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (int k = 0; k < symbols; ++k) {
      const double v = 0.05 + rng.uniform();
      post.probs.at(t, k) = v;
      sum += v;
    }
    for (int k = 0; k < symbols; ++k) post.probs.at(t, k) /= sum;
  }
  return post;
}

// Random target that is alignable within `frames` frames.
inline std::vector<int> random_feasible_target(int frames, int symbols,
                                               int max_len, int blank,
                                               Rng &rng) {
  while (true) {
    const int len = rng.uniform_int(0, max_len);
    std::vector<int> target(len);
    for (int i = 0; i < len; ++i) {
      int s = rng.uniform_int(0, symbols - 2);
      target[i] = s >= blank ? s + 1 : s;
    }
    if (ctc_min_frames(target) <= frames) return target;
  }
}

}  // namespace mde::oracle

#endif  // MDE_TESTS_ORACLES_HPP_
