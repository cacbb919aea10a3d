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

#include "mtaffect/training.h"

#include <algorithm>
#include <functional>
#include <limits>

#include "mtaffect/calibrate.h"
#include "mtaffect/error.h"
#include "mtaffect/random.h"
#include "mtaffect/textio.h"

namespace mtaffect {
namespace {

// Sub-stream ids for derive_seed.
enum Stream : std::uint64_t {
  kExprInit = 1,
  kVaInit = 2,
  kAuInit = 3,
  kOpenFaceInit = 4,
  kExprShuffle = 11,
  kVaShuffle = 12,
  kAuShuffle = 13,
  kOpenFaceShuffle = 14,
  kJointShuffle = 20,
};

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw RangeError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw RangeError("batch_size must be >= 1");
  const bool va = cfg.train_va;
  if (va && cfg.batch_size < 2) {
    throw RangeError("batch_size must be >= 2 when training valence/arousal");
  }
}

// Splits a permutation into consecutive batches of batch_size.
std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::size_t>& order, std::size_t batch_size,
    bool needs_pairs) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t e = std::min(order.size(), b + batch_size);
    if (needs_pairs && e - b < 2) continue;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return batches;
}

// Single-head training job for the separate protocol. Positions passed to
// `loss` index the rows of `inputs`.
struct HeadJob {
  HeadModel model;
  Matrix inputs;
  bool needs_pairs = false;
  GradientAt at = GradientAt::kOutput;
  std::function<LossAndGrad(const Activations&, std::span<const std::size_t>)> loss;
  std::function<double(const HeadModel&)> validate;
  std::uint64_t shuffle_seed = 0;
};

struct HeadRun {
  HeadModel best;
  int best_epoch = 0;
  std::vector<double> train_loss;  // epochs + 1 entries
  std::vector<double> val_metric;
};

double batch_loss_and_grad(const HeadJob& job, const HeadModel& model,
                           const std::vector<std::size_t>& rows,
                           const Matrix& x, std::span<double> grad) {
  const Activations acts = forward(model, x);
  const LossAndGrad lg = job.loss(acts, rows);
  if (!grad.empty()) {
    const Gradients g = backward(model, acts, lg.grad, job.at);
    std::copy(g.params.begin(), g.params.end(), grad.begin());
  }
  return lg.loss;
}

HeadRun run_head(HeadJob job, const TrainConfig& cfg) {
  HeadRun run;
  const std::size_t n = job.inputs.rows();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  auto mean_loss = [&](const std::vector<std::vector<std::size_t>>& batches) {
    double sum = 0.0;
    for (const auto& rows : batches) {
      sum += batch_loss_and_grad(job, job.model, rows,
                                 job.inputs.select_rows(rows), {});
    }
    return batches.empty() ? 0.0 : sum / static_cast<double>(batches.size());
  };

  run.train_loss.push_back(
      mean_loss(make_batches(order, cfg.batch_size, job.needs_pairs)));
  double best_metric = job.validate(job.model);
  run.val_metric.push_back(best_metric);
  run.best = job.model;

  OptimizerState state =
      OptimizerState::create(cfg.optimizer, job.model.num_params(), cfg.adam);
  Rng rng(job.shuffle_seed);
  std::vector<double> grad(job.model.num_params());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    const auto batches = make_batches(order, cfg.batch_size, job.needs_pairs);
    double sum = 0.0;
    for (const auto& rows : batches) {
      const Matrix x = job.inputs.select_rows(rows);
      if (cfg.optimizer == OptimizerKind::kAdamSam) {
        sum += sam_step(state, job.model,
                        [&](std::span<const double>, std::span<double> g) {
                          return batch_loss_and_grad(job, job.model, rows, x, g);
                        });
      } else {
        sum += batch_loss_and_grad(job, job.model, rows, x, grad);
        adam_step(state, job.model.params(), grad);
      }
    }
    run.train_loss.push_back(
        batches.empty() ? 0.0 : sum / static_cast<double>(batches.size()));
    const double metric = job.validate(job.model);
    run.val_metric.push_back(metric);
    if (metric > best_metric) {
      best_metric = metric;
      run.best = job.model;
      run.best_epoch = epoch;
    }
  }
  return run;
}

double expr_metric(const HeadModel& head, const Matrix& inputs,
                   const std::vector<int>& labels, int num_classes) {
  const std::vector<int> pred = decide(forward(head, inputs).output());
  return macro_f1(labels, pred, num_classes).macro;
}

double va_metric(const HeadModel& head, const Matrix& inputs,
                 const Matrix& truth) {
  const Matrix pred = forward(head, inputs).output();
  return 0.5 * (ccc(pred.column(0), truth.column(0)) +
                ccc(pred.column(1), truth.column(1)));
}

double au_metric(const HeadModel& head, const Matrix& inputs,
                 const BinaryMatrix& truth, double threshold) {
  const Matrix scores = forward(head, inputs).output();
  const std::vector<double> t(scores.cols(), threshold);
  return binary_f1_per_au(truth, scores, t).macro;
}

BinaryMatrix select_binary_rows(const BinaryMatrix& m,
                                std::span<const std::size_t> rows) {
  BinaryMatrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(rows[i], j);
  }
  return out;
}

TaskView require_view(const Dataset& d, Task task, const char* split,
                      std::size_t min_size) {
  TaskView view = task_view(d, task);
  if (view.size() < min_size) {
    throw RangeError(std::string(split) + " split: " +
                     std::string(task_name(task)) + " view has " +
                     std::to_string(view.size()) + " records (need " +
                     std::to_string(min_size) + ")");
  }
  return view;
}

HeadJob expr_job(const Dataset& train, const Dataset& val, const TaskView& tv,
                 const TaskView& vv, HeadModel model, bool openface,
                 std::uint64_t shuffle_seed) {
  const int classes = train.manifest.num_expr_classes;
  const ClassWeights weights = class_weights(class_counts(train, tv));
  HeadJob job;
  job.model = std::move(model);
  job.inputs = openface ? openface_matrix(train, tv.indices)
                        : embeddings_with_logits(train, tv.indices);
  job.at = GradientAt::kPreActivation;
  std::vector<int> labels = expression_labels(train, tv.indices);
  job.loss = [labels, weights](const Activations& acts,
                               std::span<const std::size_t> rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (std::size_t r : rows) y.push_back(labels[r]);
    return weighted_ce(acts.pre.back(), y, weights);
  };
  Matrix val_inputs = openface ? openface_matrix(val, vv.indices)
                               : embeddings_with_logits(val, vv.indices);
  std::vector<int> val_labels = expression_labels(val, vv.indices);
  job.validate = [val_inputs = std::move(val_inputs),
                  val_labels = std::move(val_labels),
                  classes](const HeadModel& m) {
    return expr_metric(m, val_inputs, val_labels, classes);
  };
  job.shuffle_seed = shuffle_seed;
  return job;
}

void fill_history(History& h, int epochs) {
  h.epochs.resize(static_cast<std::size_t>(epochs) + 1);
  for (int e = 0; e <= epochs; ++e) h.epochs[static_cast<std::size_t>(e)].epoch = e;
}

TrainResult train_separate(const Dataset& train, const Dataset& val,
                           const TrainConfig& cfg) {
  const std::size_t dim = train.manifest.feature_dim;
  const int classes = train.manifest.num_expr_classes;
  TrainResult result;
  result.bundle.expr_head =
      init_model(expr_head_specs(dim, classes), derive_seed(cfg.seed, kExprInit));
  result.bundle.va_head = init_model(va_head_specs(), derive_seed(cfg.seed, kVaInit));
  result.bundle.au_head = init_model(au_head_specs(dim), derive_seed(cfg.seed, kAuInit));
  History& h = result.history;
  fill_history(h, cfg.epochs);

  if (cfg.train_expr) {
    const TaskView tv = require_view(train, Task::kExpr, "train", 1);
    const TaskView vv = require_view(val, Task::kExpr, "validation", 1);
    HeadRun run = run_head(expr_job(train, val, tv, vv, result.bundle.expr_head,
                                    false, derive_seed(cfg.seed, kExprShuffle)),
                           cfg);
    result.bundle.expr_head = std::move(run.best);
    h.best_expr_epoch = run.best_epoch;
    for (std::size_t e = 0; e < h.epochs.size(); ++e) {
      h.epochs[e].expr_loss = run.train_loss[e];
      h.epochs[e].expr_val_f1 = run.val_metric[e];
    }
  }

  if (cfg.train_va) {
    const TaskView tv = require_view(train, Task::kVa, "train", 2);
    const TaskView vv = require_view(val, Task::kVa, "validation", 2);
    HeadJob job;
    job.model = result.bundle.va_head;
    job.inputs = logits_matrix(train, tv.indices);
    job.needs_pairs = true;
    job.at = GradientAt::kOutput;
    const Matrix truth = va_labels(train, tv.indices);
    job.loss = [truth](const Activations& acts, std::span<const std::size_t> rows) {
      return ccc_loss(acts.output(), truth.select_rows(rows));
    };
    job.validate = [inputs = logits_matrix(val, vv.indices),
                    vtruth = va_labels(val, vv.indices)](const HeadModel& m) {
      return va_metric(m, inputs, vtruth);
    };
    job.shuffle_seed = derive_seed(cfg.seed, kVaShuffle);
    HeadRun run = run_head(std::move(job), cfg);
    result.bundle.va_head = std::move(run.best);
    h.best_va_epoch = run.best_epoch;
    for (std::size_t e = 0; e < h.epochs.size(); ++e) {
      h.epochs[e].va_loss = run.train_loss[e];
      h.epochs[e].va_val_ccc = run.val_metric[e];
    }
  }

  if (cfg.train_au) {
    const TaskView tv = require_view(train, Task::kAu, "train", 1);
    const TaskView vv = require_view(val, Task::kAu, "validation", 1);
    HeadJob job;
    job.model = result.bundle.au_head;
    job.inputs = embeddings_with_logits(train, tv.indices);
    job.at = GradientAt::kPreActivation;
    const BinaryMatrix truth = au_labels(train, tv.indices);
    job.loss = [truth](const Activations& acts, std::span<const std::size_t> rows) {
      return bce_loss(acts.pre.back(), select_binary_rows(truth, rows));
    };
    job.validate = [inputs = embeddings_with_logits(val, vv.indices),
                    vtruth = au_labels(val, vv.indices),
                    t = cfg.au_selection_threshold](const HeadModel& m) {
      return au_metric(m, inputs, vtruth, t);
    };
    job.shuffle_seed = derive_seed(cfg.seed, kAuShuffle);
    HeadRun run = run_head(std::move(job), cfg);
    result.bundle.au_head = std::move(run.best);
    h.best_au_epoch = run.best_epoch;
    for (std::size_t e = 0; e < h.epochs.size(); ++e) {
      h.epochs[e].au_loss = run.train_loss[e];
      h.epochs[e].au_val_f1 = run.val_metric[e];
    }
  }
  return result;
}

// All three heads share one optimizer over the concatenated parameter
// vector [expr | va | au], as one network with three output heads would.
TrainResult train_simultaneous(const Dataset& train, const Dataset& val,
                               const TrainConfig& cfg) {
  const std::size_t dim = train.manifest.feature_dim;
  const int classes = train.manifest.num_expr_classes;
  TrainResult result;
  HeadBundle& b = result.bundle;
  b.expr_head =
      init_model(expr_head_specs(dim, classes), derive_seed(cfg.seed, kExprInit));
  b.va_head = init_model(va_head_specs(), derive_seed(cfg.seed, kVaInit));
  b.au_head = init_model(au_head_specs(dim), derive_seed(cfg.seed, kAuInit));

  // Trained subset of heads.
  const TaskView train_expr = task_view(train, Task::kExpr);
  const ClassWeights weights =
      cfg.train_expr ? class_weights(class_counts(train, train_expr))
                     : uniform_class_weights(static_cast<std::size_t>(classes));
  if (cfg.train_va) require_view(train, Task::kVa, "train", 2);
  if (cfg.train_au) require_view(train, Task::kAu, "train", 1);
  if (cfg.train_expr) require_view(train, Task::kExpr, "train", 1);

  const std::vector<std::size_t> all = all_indices(train);
  const Matrix full_inputs = embeddings_with_logits(train, all);
  const Matrix logit_inputs = logits_matrix(train, all);

  const std::size_t ne = b.expr_head.num_params();
  const std::size_t nv = b.va_head.num_params();
  const std::size_t na = b.au_head.num_params();
  std::vector<double> joint(ne + nv + na);

  auto pack = [&] {
    std::copy(b.expr_head.params().begin(), b.expr_head.params().end(), joint.begin());
    std::copy(b.va_head.params().begin(), b.va_head.params().end(),
              joint.begin() + static_cast<std::ptrdiff_t>(ne));
    std::copy(b.au_head.params().begin(), b.au_head.params().end(),
              joint.begin() + static_cast<std::ptrdiff_t>(ne + nv));
  };
  auto unpack = [&](std::span<const double> p) {
    std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(ne),
              b.expr_head.params().begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(ne),
              p.begin() + static_cast<std::ptrdiff_t>(ne + nv),
              b.va_head.params().begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(ne + nv), p.end(),
              b.au_head.params().begin());
  };

  struct Terms {
    double total = 0.0;
    std::optional<double> ce, ccc_term, bce;
  };
  // Masked loss for one batch at the current bundle parameters.
  auto evaluate = [&](const std::vector<std::size_t>& rows,
                      std::span<double> grad) -> std::optional<Terms> {
    std::vector<LabelSet> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) labels.push_back(train.records[r].labels);
    if (!cfg.train_expr) for (auto& l : labels) l.expression.reset();
    if (!cfg.train_va) {
      for (auto& l : labels) {
        l.valence.reset();
        l.arousal.reset();
      }
    }
    std::vector<std::size_t> au_rows;
    if (cfg.train_au) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (labels[i].has(Task::kAu)) au_rows.push_back(i);
      }
    }
    std::size_t va_count = 0;
    bool any_expr = false;
    for (const auto& l : labels) {
      va_count += l.has(Task::kVa);
      any_expr = any_expr || l.has(Task::kExpr);
    }
    const bool use_composite = any_expr || va_count >= 2;
    if (!use_composite && au_rows.empty()) return std::nullopt;

    Terms terms;
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    const Matrix x = full_inputs.select_rows(rows);
    if (use_composite) {
      const Activations ea = forward(b.expr_head, x);
      const Activations va = forward(b.va_head, logit_inputs.select_rows(rows));
      const CompositeLoss c =
          composite_mt_loss(ea.pre.back(), va.output(), labels, weights);
      terms.total += c.loss;
      if (c.has_expr) terms.ce = c.ce_term;
      if (c.has_va) terms.ccc_term = c.ccc_term;
      if (!grad.empty()) {
        if (c.has_expr) {
          const Gradients g =
              backward(b.expr_head, ea, c.grad_expr, GradientAt::kPreActivation);
          std::copy(g.params.begin(), g.params.end(), grad.begin());
        }
        if (c.has_va) {
          const Gradients g = backward(b.va_head, va, c.grad_va, GradientAt::kOutput);
          std::copy(g.params.begin(), g.params.end(),
                    grad.begin() + static_cast<std::ptrdiff_t>(ne));
        }
      }
    }
    if (!au_rows.empty()) {
      const Activations aa = forward(b.au_head, x);
      BinaryMatrix targets(rows.size(), kNumAus);
      for (std::size_t i : au_rows) {
        for (std::size_t j = 0; j < kNumAus; ++j) targets(i, j) = (*labels[i].aus)[j];
      }
      const LossAndGrad sub = bce_loss(aa.pre.back().select_rows(au_rows),
                                       select_binary_rows(targets, au_rows));
      terms.total += sub.loss;
      terms.bce = sub.loss;
      if (!grad.empty()) {
        Matrix masked(rows.size(), kNumAus);
        for (std::size_t i = 0; i < au_rows.size(); ++i) {
          auto src = sub.grad.row(i);
          std::copy(src.begin(), src.end(), masked.row(au_rows[i]).begin());
        }
        const Gradients g = backward(b.au_head, aa, masked, GradientAt::kPreActivation);
        std::copy(g.params.begin(), g.params.end(),
                  grad.begin() + static_cast<std::ptrdiff_t>(ne + nv));
      }
    }
    return terms;
  };

  // Validation closures per head.
  std::function<double(const HeadModel&)> val_expr, val_va, val_au;
  if (cfg.train_expr) {
    const TaskView vv = require_view(val, Task::kExpr, "validation", 1);
    val_expr = [inputs = embeddings_with_logits(val, vv.indices),
                labels = expression_labels(val, vv.indices),
                classes](const HeadModel& m) {
      return expr_metric(m, inputs, labels, classes);
    };
  }
  if (cfg.train_va) {
    const TaskView vv = require_view(val, Task::kVa, "validation", 2);
    val_va = [inputs = logits_matrix(val, vv.indices),
              truth = va_labels(val, vv.indices)](const HeadModel& m) {
      return va_metric(m, inputs, truth);
    };
  }
  if (cfg.train_au) {
    const TaskView vv = require_view(val, Task::kAu, "validation", 1);
    val_au = [inputs = embeddings_with_logits(val, vv.indices),
              truth = au_labels(val, vv.indices),
              t = cfg.au_selection_threshold](const HeadModel& m) {
      return au_metric(m, inputs, truth, t);
    };
  }

  History& h = result.history;
  fill_history(h, cfg.epochs);
  HeadBundle best = b;
  double best_e = -std::numeric_limits<double>::infinity();
  double best_v = best_e, best_a = best_e;

  auto record = [&](int epoch, const std::vector<Terms>& batch_terms) {
    EpochRecord& rec = h.epochs[static_cast<std::size_t>(epoch)];
    auto mean = [&](auto member) -> std::optional<double> {
      double sum = 0.0;
      std::size_t count = 0;
      for (const Terms& t : batch_terms) {
        if (t.*member) {
          sum += *(t.*member);
          ++count;
        }
      }
      if (count == 0) return std::nullopt;
      return sum / static_cast<double>(count);
    };
    if (cfg.train_expr) {
      rec.expr_loss = mean(&Terms::ce);
      rec.expr_val_f1 = val_expr(b.expr_head);
      if (*rec.expr_val_f1 > best_e) {
        best_e = *rec.expr_val_f1;
        best.expr_head = b.expr_head;
        h.best_expr_epoch = epoch;
      }
    }
    if (cfg.train_va) {
      rec.va_loss = mean(&Terms::ccc_term);
      rec.va_val_ccc = val_va(b.va_head);
      if (*rec.va_val_ccc > best_v) {
        best_v = *rec.va_val_ccc;
        best.va_head = b.va_head;
        h.best_va_epoch = epoch;
      }
    }
    if (cfg.train_au) {
      rec.au_loss = mean(&Terms::bce);
      rec.au_val_f1 = val_au(b.au_head);
      if (*rec.au_val_f1 > best_a) {
        best_a = *rec.au_val_f1;
        best.au_head = b.au_head;
        h.best_au_epoch = epoch;
      }
    }
  };

  std::vector<std::size_t> order = all;
  {
    std::vector<Terms> initial;
    for (const auto& rows : make_batches(order, cfg.batch_size, false)) {
      if (auto t = evaluate(rows, {})) initial.push_back(*t);
    }
    record(0, initial);
  }

  OptimizerState state = OptimizerState::create(cfg.optimizer, joint.size(), cfg.adam);
  Rng rng(derive_seed(cfg.seed, kJointShuffle));
  std::vector<double> grad(joint.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<Terms> epoch_terms;
    for (const auto& rows : make_batches(order, cfg.batch_size, false)) {
      pack();
      std::optional<Terms> terms;
      auto fn = [&](std::span<const double> p, std::span<double> g) {
        unpack(p);
        terms = evaluate(rows, g);
        return terms ? terms->total : 0.0;
      };
      if (cfg.optimizer == OptimizerKind::kAdamSam) {
        // The first evaluation decides whether the batch is usable.
        std::optional<Terms> first;
        {
          unpack(joint);
          first = evaluate(rows, {});
        }
        if (!first) continue;
        sam_step(state, std::span<double>(joint), fn);
        terms = first;
      } else {
        fn(joint, grad);
        if (!terms) continue;
        adam_step(state, std::span<double>(joint), grad);
      }
      unpack(joint);
      epoch_terms.push_back(*terms);
    }
    record(epoch, epoch_terms);
  }
  b = std::move(best);
  return result;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::vector<LayerSpec> expr_head_specs(std::size_t feature_dim, int num_classes) {
  return {{feature_dim + kLogitsDim, static_cast<std::size_t>(num_classes),
           Activation::kSoftmax}};
}

std::vector<LayerSpec> va_head_specs() {
  return {{kLogitsDim, 2, Activation::kTanh}};
}

std::vector<LayerSpec> au_head_specs(std::size_t feature_dim) {
  return {{feature_dim + kLogitsDim, kNumAus, Activation::kSigmoid}};
}

std::vector<LayerSpec> openface_mlp_specs(int num_classes) {
  return {{kOpenFaceDim, 128, Activation::kRelu},
          {128, static_cast<std::size_t>(num_classes), Activation::kSoftmax}};
}

std::string_view protocol_name(Protocol p) {
  return p == Protocol::kSeparate ? "separate" : "simultaneous";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "separate") return Protocol::kSeparate;
  if (name == "simultaneous") return Protocol::kSimultaneous;
  throw RangeError("unknown protocol '" + std::string(name) +
                   "' (expected separate or simultaneous)");
}

std::string History::to_csv() const {
  std::string out =
      "epoch,expr_train_loss,va_train_loss,au_train_loss,expr_val_f1,"
      "va_val_ccc,au_val_f1\n";
  for (const EpochRecord& r : epochs) {
    out += std::to_string(r.epoch);
    for (const auto* v : {&r.expr_loss, &r.va_loss, &r.au_loss, &r.expr_val_f1,
                          &r.va_val_ccc, &r.au_val_f1}) {
      (out += ',') += optional_field(*v);
    }
    out += '\n';
  }
  return out;
}

TrainResult train_heads(const Dataset& train, const Dataset& val,
                        const TrainConfig& cfg) {
  check_config(cfg);
  if (train.manifest.feature_dim != val.manifest.feature_dim ||
      train.manifest.num_expr_classes != val.manifest.num_expr_classes) {
    throw ShapeError("train and validation manifests disagree on dimensions");
  }
  return cfg.protocol == Protocol::kSeparate ? train_separate(train, val, cfg)
                                             : train_simultaneous(train, val, cfg);
}

OpenFaceResult train_openface_mlp(const Dataset& train, const Dataset& val,
                                  const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw RangeError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw RangeError("batch_size must be >= 1");
  if (!train.has_openface() || !val.has_openface()) {
    throw DatasetError("OpenFace MLP needs openface features in both splits");
  }
  if (train.manifest.num_expr_classes != val.manifest.num_expr_classes) {
    throw ShapeError("train and validation manifests disagree on class count");
  }
  const TaskView tv = require_view(train, Task::kExprOpenFace, "train", 1);
  const TaskView vv = require_view(val, Task::kExprOpenFace, "validation", 1);
  HeadModel model = init_model(openface_mlp_specs(train.manifest.num_expr_classes),
                               derive_seed(cfg.seed, kOpenFaceInit));
  HeadRun run = run_head(expr_job(train, val, tv, vv, std::move(model), true,
                                  derive_seed(cfg.seed, kOpenFaceShuffle)),
                         cfg);
  OpenFaceResult result;
  result.model = std::move(run.best);
  fill_history(result.history, cfg.epochs);
  result.history.best_expr_epoch = run.best_epoch;
  for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
    result.history.epochs[e].expr_loss = run.train_loss[e];
    result.history.epochs[e].expr_val_f1 = run.val_metric[e];
  }
  return result;
}

Matrix expr_scores(const HeadModel& head, const Dataset& d,
                   std::span<const std::size_t> indices) {
  return forward(head, embeddings_with_logits(d, indices)).output();
}

Matrix va_outputs(const HeadModel& head, const Dataset& d,
                  std::span<const std::size_t> indices) {
  return forward(head, logits_matrix(d, indices)).output();
}

Matrix au_scores(const HeadModel& head, const Dataset& d,
                 std::span<const std::size_t> indices) {
  return forward(head, embeddings_with_logits(d, indices)).output();
}

Matrix openface_scores(const HeadModel& head, const Dataset& d,
                       std::span<const std::size_t> indices) {
  return forward(head, openface_matrix(d, indices)).output();
}

std::vector<int> expression_labels(const Dataset& d,
                                   std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto& e = d.records[i].labels.expression;
    if (!e) throw RangeError("record '" + d.records[i].features.id +
                             "' has no expression label");
    out.push_back(*e);
  }
  return out;
}

Matrix va_labels(const Dataset& d, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), 2);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const LabelSet& l = d.records[indices[k]].labels;
    if (!l.has(Task::kVa)) {
      throw RangeError("record '" + d.records[indices[k]].features.id +
                       "' has no valence/arousal labels");
    }
    out(k, 0) = *l.valence;
    out(k, 1) = *l.arousal;
  }
  return out;
}

BinaryMatrix au_labels(const Dataset& d, std::span<const std::size_t> indices) {
  BinaryMatrix out(indices.size(), kNumAus);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const LabelSet& l = d.records[indices[k]].labels;
    if (!l.aus) {
      throw RangeError("record '" + d.records[indices[k]].features.id +
                       "' has no AU labels");
    }
    for (std::size_t j = 0; j < kNumAus; ++j) out(k, j) = (*l.aus)[j];
  }
  return out;
}

}  // namespace mtaffect
