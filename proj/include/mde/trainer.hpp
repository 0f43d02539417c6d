// mde/trainer.hpp

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

#ifndef MDE_TRAINER_HPP_
#define MDE_TRAINER_HPP_

#include <string>
#include <vector>

#include "mde/corpus.hpp"
#include "mde/model.hpp"

namespace mde {

// Multi-task training: lambda_mtl * CTC + (1 - lambda_mtl) * teacher-forced
// attention cross-entropy, plain SGD with global-norm clipping. Targets are
// the realized phone sequences.
struct TrainConfig {
  double lambda_mtl = 0.5;
  double learning_rate = 0.05;
  int epochs = 12;
  int batch_size = 8;
  int patience = 5;  // epochs without dev improvement before stopping
  double clip_norm = 5.0;
  uint64_t seed = 1;

  AugmentMode augment = AugmentMode::kNone;
  double frames_per_token = 1.0;
  int hidden = 32;
  int attn_dim = 32;
  int conv_filters = 4;
  int conv_width = 5;
  double gamma = 1.0;
  double lambda_decode = 0.3;  // stored in the checkpoint as the decode default

  void validate() const;
};

struct EpochLoss {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLoss> trace;
};

// Deterministic in (corpus, cfg). Keeps the best-dev-loss parameters.
// Aborts with a diagnostic if any loss goes non-finite.
TrainResult train(const CorpusSplit &corpus, const PhoneInventory &inv,
                  const TrainConfig &cfg);

// Joint loss for one utterance, for evaluation and gradient checking.
double utterance_loss(const ModelParams &params, const Utterance &utt,
                      const DurationStats &stats, double lambda_mtl);

// Finite-difference check of the full joint gradient on a random subset of at
// least `min_coords` parameters. Returns the max relative error.
double grad_check_joint(const ModelParams &params, const Utterance &utt,
                        const DurationStats &stats, double lambda_mtl,
                        int min_coords = 200, uint64_t seed = 17);

// Greedy per-frame CTC decode accuracy against the realized sequences
// (collapse of framewise argmax), a cheap convergence probe.
double greedy_ctc_accuracy(const ModelParams &params,
                           const std::vector<Utterance> &utts);

// Versioned text checkpoint; matrices print at 17 significant digits and
// reload bit-exactly. Loading verifies the inventory hash.
void save_checkpoint(const ModelParams &params, const std::string &path);
ModelParams load_checkpoint(const std::string &path,
                            const PhoneInventory &inv);

std::string format_loss_trace(const std::vector<EpochLoss> &trace);

// "epoch \t train_loss \t dev_loss" per line.
void write_loss_trace(const std::string &path,
                      const std::vector<EpochLoss> &trace);

std::vector<double> flatten_params(const ModelParams &params);
void unflatten_params(std::span<const double> flat, ModelParams *params);

}  // namespace mde

#endif  // MDE_TRAINER_HPP_
