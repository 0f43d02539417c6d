// mde/ctc.cpp

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

#include "mde/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mde/io.hpp"

namespace mde {

namespace {

constexpr char kPostMagic[4] = {'M', 'D', 'E', '2'};

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Blank-separated expansion [blk, c1, blk, c2, ..., cL, blk].
std::vector<int> expand_labels(std::span<const int> target, int blank) {
  std::vector<int> lab(2 * target.size() + 1, blank);
  for (size_t i = 0; i < target.size(); ++i) lab[2 * i + 1] = target[i];
  return lab;
}

Mat log_probs(const Posteriorgram &post) {
  Mat lp(post.probs.rows, post.probs.cols);
  for (size_t i = 0; i < post.probs.data.size(); ++i)
    lp.data[i] = post.probs.data[i] > 0.0 ? std::log(post.probs.data[i])
                                          : kNegInf;
  return lp;
}

void check_target(const Posteriorgram &post, std::span<const int> target,
                  int blank) {
  require(blank >= 0 && blank < post.symbols(), "ctc: blank index out of range");
  for (int c : target) {
    require(c != blank, "ctc: target contains the blank symbol");
    require(c >= 0 && c < post.symbols(),
            "ctc: target symbol " + std::to_string(c) + " out of range");
  }
  if (ctc_min_frames(target) > post.frames())
    throw ValidationError("ctc: target of length " +
                          std::to_string(target.size()) + " is infeasible in " +
                          std::to_string(post.frames()) + " frames");
}

// Forward lattice over the expanded labels; alpha includes the emission at
// its own frame.
Mat ctc_alpha(const Mat &lp, const std::vector<int> &lab) {
  const int T = lp.rows;
  const int S = static_cast<int>(lab.size());
  Mat alpha(T, S);
  alpha.fill(kNegInf);
  alpha.at(0, 0) = lp.at(0, lab[0]);
  if (S > 1) alpha.at(0, 1) = lp.at(0, lab[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double acc = alpha.at(t - 1, s);
      if (s >= 1) acc = logaddexp(acc, alpha.at(t - 1, s - 1));
      if (s >= 2 && lab[s] != lab[s - 2])
        acc = logaddexp(acc, alpha.at(t - 1, s - 2));
      alpha.at(t, s) = acc + lp.at(t, lab[s]);
    }
  }
  return alpha;
}

// Backward lattice; beta excludes the emission at its own frame, so
// alpha(t,s) + beta(t,s) sums over s to the total log-likelihood at every t.
Mat ctc_beta(const Mat &lp, const std::vector<int> &lab) {
  const int T = lp.rows;
  const int S = static_cast<int>(lab.size());
  Mat beta(T, S);
  beta.fill(kNegInf);
  beta.at(T - 1, S - 1) = 0.0;
  if (S > 1) beta.at(T - 1, S - 2) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = S - 1; s >= 0; --s) {
      double acc = beta.at(t + 1, s) + lp.at(t + 1, lab[s]);
      if (s + 1 < S)
        acc = logaddexp(acc, beta.at(t + 1, s + 1) + lp.at(t + 1, lab[s + 1]));
      if (s + 2 < S && lab[s] != lab[s + 2])
        acc = logaddexp(acc, beta.at(t + 1, s + 2) + lp.at(t + 1, lab[s + 2]));
      beta.at(t, s) = acc;
    }
  }
  return beta;
}

double total_log_prob(const Mat &alpha) {
  const int T = alpha.rows;
  const int S = alpha.cols;
  double lse = alpha.at(T - 1, S - 1);
  if (S > 1) lse = logaddexp(lse, alpha.at(T - 1, S - 2));
  return lse;
}

}  // namespace

void Posteriorgram::validate(double tol) const {
  require(probs.rows >= 1 && probs.cols >= 2,
          "posteriorgram: need at least one frame and two symbols");
  for (int t = 0; t < probs.rows; ++t) {
    double sum = 0.0;
    for (double v : probs.row(t)) {
      require(v >= 0.0 && v <= 1.0 + tol,
              "posteriorgram: entry outside [0,1] at frame " +
                  std::to_string(t));
      sum += v;
    }
    require(std::abs(sum - 1.0) <= tol,
            "posteriorgram: row " + std::to_string(t) + " sums to " +
                std::to_string(sum));
  }
}

void write_posteriorgram(const std::string &path, const Posteriorgram &post) {
  write_matrix_file(path, kPostMagic, post.probs);
}

Posteriorgram read_posteriorgram(const std::string &path) {
  return Posteriorgram{read_matrix_file(path, kPostMagic)};
}

int ctc_min_frames(std::span<const int> target) {
  int frames = static_cast<int>(target.size());
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++frames;
  return frames;
}

double ctc_loss(const Posteriorgram &post, std::span<const int> target,
                int blank) {
  check_target(post, target, blank);
  const Mat lp = log_probs(post);
  const auto lab = expand_labels(target, blank);
  const Mat alpha = ctc_alpha(lp, lab);
  return -total_log_prob(alpha);
}

Mat ctc_grad(const Posteriorgram &post, std::span<const int> target, int blank,
             double *loss_out) {
  check_target(post, target, blank);
  const int T = post.frames();
  const int V = post.symbols();
  const Mat lp = log_probs(post);
  const auto lab = expand_labels(target, blank);
  const Mat alpha = ctc_alpha(lp, lab);
  const Mat beta = ctc_beta(lp, lab);
  const double log_p = total_log_prob(alpha);
  if (log_p == kNegInf)
    throw ValidationError(
        "ctc_grad: every alignment has probability zero; gradient undefined");
  if (loss_out) *loss_out = -log_p;

  Mat grad = post.probs;  // softmax term
  for (int t = 0; t < T; ++t) {
    for (size_t s = 0; s < lab.size(); ++s) {
      double occ = alpha.at(t, static_cast<int>(s)) +
                   beta.at(t, static_cast<int>(s)) - log_p;
      if (occ != kNegInf) grad.at(t, lab[s]) -= std::exp(occ);
    }
  }
  (void)V;
  return grad;
}

CtcPrefixState ctc_prefix_init(const Posteriorgram &post, int blank) {
  require(blank >= 0 && blank < post.symbols(), "ctc: blank index out of range");
  const int T = post.frames();
  CtcPrefixState st;
  st.log_b.assign(T + 1, kNegInf);
  st.log_nb.assign(T + 1, kNegInf);
  st.log_b[0] = 0.0;
  for (int t = 1; t <= T; ++t) {
    double p = post.probs.at(t - 1, blank);
    st.log_b[t] = st.log_b[t - 1] + (p > 0.0 ? std::log(p) : kNegInf);
  }
  st.log_psi = 0.0;
  st.last_symbol = -1;
  return st;
}

std::pair<double, CtcPrefixState> ctc_prefix_advance(const Posteriorgram &post,
                                                     const CtcPrefixState &state,
                                                     int symbol, int blank) {
  require(symbol != blank, "ctc_prefix_advance: cannot advance with blank");
  require(symbol >= 0 && symbol < post.symbols(),
          "ctc_prefix_advance: symbol out of range");
  const int T = post.frames();
  require(static_cast<int>(state.log_b.size()) == T + 1,
          "ctc_prefix_advance: state does not match posteriorgram");

  CtcPrefixState next;
  next.log_b.assign(T + 1, kNegInf);
  next.log_nb.assign(T + 1, kNegInf);
  next.last_symbol = symbol;

  double psi = kNegInf;
  for (int t = 1; t <= T; ++t) {
    const double lp_sym = post.probs.at(t - 1, symbol) > 0.0
                              ? std::log(post.probs.at(t - 1, symbol))
                              : kNegInf;
    const double lp_blk = post.probs.at(t - 1, blank) > 0.0
                              ? std::log(post.probs.at(t - 1, blank))
                              : kNegInf;
    // Mass that completes `symbol` for the first time at frame t.
    double start = state.log_b[t - 1];
    if (symbol != state.last_symbol)
      start = logaddexp(start, state.log_nb[t - 1]);
    next.log_nb[t] = logaddexp(next.log_nb[t - 1], start) + lp_sym;
    next.log_b[t] = logaddexp(next.log_b[t - 1], next.log_nb[t - 1]) + lp_blk;
    psi = logaddexp(psi, start + lp_sym);
  }
  // psi is the absolute prefix probability of the extended prefix: the
  // first-completion masses already carry the parent's mass, and frames after
  // the completion marginalize to one.
  next.log_psi = psi;
  return {psi - state.log_psi, std::move(next)};
}

double ctc_prefix_close(const CtcPrefixState &state) {
  const double exact =
      logaddexp(state.log_b.back(), state.log_nb.back());
  return exact - state.log_psi;
}

Hypothesis ctc_beam_decode(const Posteriorgram &post, int beam_width,
                           int blank, std::span<const int> emit_symbols,
                           int nbest_per_step) {
  require(beam_width >= 1, "ctc_beam_decode: beam_width must be >= 1");
  require(!emit_symbols.empty(), "ctc_beam_decode: no emit symbols");
  require(nbest_per_step >= 1, "ctc_beam_decode: nbest_per_step must be >= 1");
  for (int c : emit_symbols) {
    require(c != blank && c >= 0 && c < post.symbols(),
            "ctc_beam_decode: bad emit symbol " + std::to_string(c));
  }
  const int T = post.frames();

  struct Mass {
    double b = kNegInf;   // paths ending in blank
    double nb = kNegInf;  // paths ending in the prefix's last symbol
    double total() const { return logaddexp(b, nb); }
  };
  // std::map keys give deterministic iteration and lexicographic tie-breaks.
  std::map<std::vector<int>, Mass> beams;
  beams[{}] = Mass{0.0, kNegInf};

  for (int t = 0; t < T; ++t) {
    std::map<std::vector<int>, Mass> next;
    for (const auto &[prefix, mass] : beams) {
      const double lp_blk = post.probs.at(t, blank) > 0.0
                                ? std::log(post.probs.at(t, blank))
                                : kNegInf;
      {
        Mass &m = next[prefix];
        m.b = logaddexp(m.b, mass.total() + lp_blk);
      }
      for (int c : emit_symbols) {
        const double lp = post.probs.at(t, c) > 0.0
                              ? std::log(post.probs.at(t, c))
                              : kNegInf;
        if (!prefix.empty() && c == prefix.back()) {
          Mass &same = next[prefix];
          same.nb = logaddexp(same.nb, mass.nb + lp);
          std::vector<int> grown = prefix;
          grown.push_back(c);
          Mass &g = next[grown];
          g.nb = logaddexp(g.nb, mass.b + lp);
        } else {
          std::vector<int> grown = prefix;
          grown.push_back(c);
          Mass &g = next[grown];
          g.nb = logaddexp(g.nb, mass.total() + lp);
        }
      }
    }
    if (static_cast<int>(next.size()) > beam_width) {
      std::vector<std::pair<double, const std::vector<int> *>> scored;
      scored.reserve(next.size());
      for (const auto &[prefix, mass] : next)
        scored.emplace_back(mass.total(), &prefix);
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto &a, const auto &b) {
                         if (a.first != b.first) return a.first > b.first;
                         return *a.second < *b.second;
                       });
      std::map<std::vector<int>, Mass> pruned;
      for (int i = 0; i < beam_width; ++i)
        pruned[*scored[i].second] = next[*scored[i].second];
      next = std::move(pruned);
    }
    beams = std::move(next);
  }

  const std::vector<int> *best = nullptr;
  double best_score = kNegInf;
  for (const auto &[prefix, mass] : beams) {
    double s = mass.total();
    if (best == nullptr || s > best_score ||
        (s == best_score && prefix < *best)) {
      best = &prefix;
      best_score = s;
    }
  }

  Hypothesis hyp;
  hyp.symbols = *best;
  hyp.score = best_score;
  hyp.ctc_score = best_score;

  // Label-synchronous replay along the winner for per-step candidate
  // rankings.
  CtcPrefixState state = ctc_prefix_init(post, blank);
  for (int sym : hyp.symbols) {
    std::vector<std::pair<int, double>> ranked;
    ranked.reserve(emit_symbols.size());
    CtcPrefixState chosen;
    double chosen_total = kNegInf;
    for (int c : emit_symbols) {
      auto [inc, st] = ctc_prefix_advance(post, state, c, blank);
      double total = state.log_psi + inc;
      ranked.emplace_back(c, total);
      if (c == sym) {
        chosen = std::move(st);
        chosen_total = total;
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto &a, const auto &b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    auto self = std::find_if(ranked.begin(), ranked.end(),
                             [sym](const auto &p) { return p.first == sym; });
    std::rotate(ranked.begin(), self, self + 1);
    if (static_cast<int>(ranked.size()) > nbest_per_step)
      ranked.resize(nbest_per_step);

    // Peak frame: where the first-completion mass of the emitted symbol is
    // largest.
    int peak = -1;
    double peak_mass = kNegInf;
    for (int t = 1; t <= post.frames(); ++t) {
      double lp_sym = post.probs.at(t - 1, sym) > 0.0
                          ? std::log(post.probs.at(t - 1, sym))
                          : kNegInf;
      double start = state.log_b[t - 1];
      if (sym != state.last_symbol)
        start = logaddexp(start, state.log_nb[t - 1]);
      if (start + lp_sym > peak_mass) {
        peak_mass = start + lp_sym;
        peak = t - 1;
      }
    }

    StepRecord rec;
    rec.symbol = sym;
    rec.score = chosen_total;
    rec.alternatives = std::move(ranked);
    rec.peak_frame = peak;
    hyp.steps.push_back(std::move(rec));
    state = std::move(chosen);
  }
  return hyp;
}

PositionPosteriors prompt_position_posterior(const Posteriorgram &post,
                                             std::span<const int> prompt,
                                             int blank,
                                             PosteriorPooling pooling) {
  require(!prompt.empty(), "prompt_position_posterior: empty prompt");
  for (int c : prompt) {
    require(c != blank && c >= 0 && c < post.symbols(),
            "prompt_position_posterior: bad prompt symbol");
  }
  PositionPosteriors out;
  out.p.assign(prompt.size(), 0.0);
  if (ctc_min_frames(prompt) > post.frames()) {
    out.feasible = false;
    return out;
  }
  const Mat lp = log_probs(post);
  const auto lab = expand_labels(prompt, blank);
  const Mat alpha = ctc_alpha(lp, lab);
  const double log_p = total_log_prob(alpha);
  if (log_p == kNegInf) {
    out.feasible = false;
    return out;
  }
  const Mat beta = ctc_beta(lp, lab);
  const int T = post.frames();
  for (size_t i = 0; i < prompt.size(); ++i) {
    const int s = static_cast<int>(2 * i + 1);
    double best = 0.0;
    double sum = 0.0;
    int occupied = 0;
    for (int t = 0; t < T; ++t) {
      double lg = alpha.at(t, s) + beta.at(t, s) - log_p;
      double g = lg == kNegInf ? 0.0 : std::exp(lg);
      best = std::max(best, g);
      if (g > 1e-12) {
        sum += g;
        ++occupied;
      }
    }
    out.p[i] = pooling == PosteriorPooling::kMax
                   ? std::min(best, 1.0)
                   : (occupied ? std::min(sum / occupied, 1.0) : 0.0);
  }
  return out;
}

}  // namespace mde
