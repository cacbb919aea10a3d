// Copyright 2026 The mtaffect Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Losses and head-training protocols.
//
// The heads sit on frozen features: the expression and AU heads read the
// embedding concatenated with the logits, the valence/arousal head reads the
// logits alone, and the optional OpenFace MLP reads the 35 OpenFace AU
// intensities. Two protocols are supported:
//
//   separate      each head is trained on its own task view, so records
//                 missing that task's label never reach it;
//   simultaneous  one pass over every record, optimizing the composite
//                 CCC + weighted cross-entropy loss plus the AU loss jointly,
//                 with unlabeled rows masked out of each term.

#ifndef MTAFFECT_TRAINING_H_
#define MTAFFECT_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtaffect/featstore.h"
#include "mtaffect/matrix.h"
#include "mtaffect/metrics.h"
#include "mtaffect/net.h"

namespace mtaffect {

struct ClassWeights {
  std::vector<double> weights;
};

// weight_c = max_k(counts_k) / counts_c. Throws RangeError on a zero count.
ClassWeights class_weights(std::span<const std::size_t> counts);
ClassWeights uniform_class_weights(std::size_t num_classes);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

// mean_i w[y_i] * -log softmax(z_i)[y_i]; grad is with respect to the logits.
LossAndGrad weighted_ce(const Matrix& logits, std::span<const int> labels,
                        const ClassWeights& weights);

// 1 - (ccc(valence) + ccc(arousal)) / 2 over the batch, columns 0 and 1.
// grad is with respect to pred. A column with a degenerate CCC denominator
// contributes CCC = 0 and a zero gradient.
LossAndGrad ccc_loss(const Matrix& pred, const Matrix& truth);

// Mean sigmoid binary cross-entropy over all entries, in logit form
// max(z, 0) - z t + log(1 + exp(-|z|)); grad is with respect to the logits.
LossAndGrad bce_loss(const Matrix& logits, const BinaryMatrix& targets);

struct CompositeLoss {
  double loss = 0.0;
  double ccc_term = 0.0;
  double ce_term = 0.0;
  bool has_va = false;
  bool has_expr = false;
  Matrix grad_expr;  // n x C; zero rows where the expression label is absent
  Matrix grad_va;    // n x 2; zero rows where valence/arousal are absent
};

// ccc_loss over the rows with valence/arousal (when there are at least two)
// plus weighted_ce over the rows with an expression label. Throws RangeError
// if neither term is usable.
CompositeLoss composite_mt_loss(const Matrix& expr_logits, const Matrix& va_pred,
                                std::span<const LabelSet> labels,
                                const ClassWeights& weights);

struct HeadBundle {
  HeadModel expr_head;
  HeadModel va_head;
  HeadModel au_head;
  std::optional<HeadModel> openface_mlp;
};

std::vector<LayerSpec> expr_head_specs(std::size_t feature_dim, int num_classes);
std::vector<LayerSpec> va_head_specs();
std::vector<LayerSpec> au_head_specs(std::size_t feature_dim);
std::vector<LayerSpec> openface_mlp_specs(int num_classes);

enum class Protocol { kSeparate, kSimultaneous };

std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);

struct TrainConfig {
  Protocol protocol = Protocol::kSeparate;
  int epochs = 20;
  std::size_t batch_size = 128;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  AdamHyperparams adam;  // learning rate 0.001, rho used only with SAM
  std::uint64_t seed = 0;
  bool train_expr = true;
  bool train_va = true;
  bool train_au = true;
  // Threshold for the AU head's model-selection F1.
  double au_selection_threshold = 0.5;
};

// One row per epoch; epoch 0 holds the losses and metrics of the initial
// parameters. Absent entries belong to heads that are not being trained.
struct EpochRecord {
  int epoch = 0;
  std::optional<double> expr_loss;
  std::optional<double> va_loss;
  std::optional<double> au_loss;
  std::optional<double> expr_val_f1;
  std::optional<double> va_val_ccc;
  std::optional<double> au_val_f1;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_expr_epoch = 0;
  int best_va_epoch = 0;
  int best_au_epoch = 0;

  // epoch,expr_train_loss,va_train_loss,au_train_loss,expr_val_f1,
  // va_val_ccc,au_val_f1 with empty fields for absent entries.
  std::string to_csv() const;
  friend bool operator==(const History&, const History&) = default;
};

struct TrainResult {
  HeadBundle bundle;
  History history;
};

// Trains the requested heads. For every head the parameters of the epoch
// with the best validation metric (expression macro F1, mean valence/arousal
// CCC, AU macro F1 at au_selection_threshold) are kept; ties keep the
// earlier epoch. Heads that are not trained keep their initialization.
TrainResult train_heads(const Dataset& train, const Dataset& val,
                        const TrainConfig& cfg);

struct OpenFaceResult {
  HeadModel model;
  History history;  // only the expr columns are filled
};

// 35 -> 128 (relu) -> C (softmax) MLP on the OpenFace AU intensities,
// trained with weighted_ce on the EXPR_OPENFACE views.
OpenFaceResult train_openface_mlp(const Dataset& train, const Dataset& val,
                                  const TrainConfig& cfg);

// Head outputs over a set of records.
Matrix expr_scores(const HeadModel& head, const Dataset& d,
                   std::span<const std::size_t> indices);
Matrix va_outputs(const HeadModel& head, const Dataset& d,
                  std::span<const std::size_t> indices);
Matrix au_scores(const HeadModel& head, const Dataset& d,
                 std::span<const std::size_t> indices);
Matrix openface_scores(const HeadModel& head, const Dataset& d,
                       std::span<const std::size_t> indices);

// Label extraction over a set of records that carry the label.
std::vector<int> expression_labels(const Dataset& d,
                                   std::span<const std::size_t> indices);
Matrix va_labels(const Dataset& d, std::span<const std::size_t> indices);
BinaryMatrix au_labels(const Dataset& d, std::span<const std::size_t> indices);

}  // namespace mtaffect

#endif  // MTAFFECT_TRAINING_H_
