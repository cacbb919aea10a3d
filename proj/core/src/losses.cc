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

#include <algorithm>
#include <cmath>

#include "mtaffect/error.h"
#include "mtaffect/training.h"

namespace mtaffect {
namespace {

// Gradient of the population CCC with respect to x, written into column
// `col` of grad and scaled by `scale`.
void ccc_column_grad(std::span<const double> x, std::span<const double> y,
                     double scale, Matrix& grad, std::size_t col) {
  const Moments m = paired_moments(x, y);
  const double shift = m.mean_x - m.mean_y;
  const double denom = m.var_x + m.var_y + shift * shift;
  if (denom < kCccEpsilon) return;
  const double n = static_cast<double>(x.size());
  const double numer = 2.0 * m.cov_xy;
  const double inv_d2 = 1.0 / (denom * denom);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d_numer = 2.0 * (y[i] - m.mean_y) / n;
    const double d_denom = 2.0 * (x[i] - m.mean_x) / n + 2.0 * shift / n;
    grad(i, col) = scale * (d_numer * denom - numer * d_denom) * inv_d2;
  }
}

}  // namespace

ClassWeights class_weights(std::span<const std::size_t> counts) {
  if (counts.empty()) throw RangeError("class_weights: no classes");
  std::size_t max_count = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw RangeError("class_weights: class " + std::to_string(c) +
                       " has no training examples");
    }
    max_count = std::max(max_count, counts[c]);
  }
  ClassWeights w;
  for (std::size_t c : counts) {
    w.weights.push_back(static_cast<double>(max_count) / static_cast<double>(c));
  }
  return w;
}

ClassWeights uniform_class_weights(std::size_t num_classes) {
  return ClassWeights{std::vector<double>(num_classes, 1.0)};
}

LossAndGrad weighted_ce(const Matrix& logits, std::span<const int> labels,
                        const ClassWeights& weights) {
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) throw ShapeError("weighted_ce: label count != rows");
  if (weights.weights.size() != k) {
    throw ShapeError("weighted_ce: class weight count != logits width");
  }
  LossAndGrad out{0.0, Matrix(n, k)};
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw RangeError("weighted_ce: label " + std::to_string(y) +
                       " out of range at row " + std::to_string(i));
    }
    const auto z = logits.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_sum = std::log(sum);
    const double w = weights.weights[static_cast<std::size_t>(y)];
    out.loss += w * -(z[static_cast<std::size_t>(y)] - zmax - log_sum);
    auto g = out.grad.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double p = std::exp(z[c] - zmax - log_sum);
      g[c] = w * (p - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0)) * inv_n;
    }
  }
  out.loss *= inv_n;
  return out;
}

LossAndGrad ccc_loss(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != 2 || truth.cols() != 2) {
    throw ShapeError("ccc_loss: expected two n x 2 matrices");
  }
  if (pred.rows() < 2) throw ShapeError("ccc_loss: need at least 2 samples");
  LossAndGrad out{0.0, Matrix(pred.rows(), 2)};
  const std::vector<double> pv = pred.column(0), pa = pred.column(1);
  const std::vector<double> tv = truth.column(0), ta = truth.column(1);
  out.loss = 1.0 - 0.5 * (ccc(pv, tv) + ccc(pa, ta));
  ccc_column_grad(pv, tv, -0.5, out.grad, 0);
  ccc_column_grad(pa, ta, -0.5, out.grad, 1);
  return out;
}

LossAndGrad bce_loss(const Matrix& logits, const BinaryMatrix& targets) {
  if (logits.rows() != targets.rows || logits.cols() != targets.cols) {
    throw ShapeError("bce_loss: logits and targets differ in shape");
  }
  const std::size_t total = logits.rows() * logits.cols();
  LossAndGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  if (total == 0) return out;
  const double inv = 1.0 / static_cast<double>(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::uint8_t t8 = targets.data[i];
    if (t8 > 1) throw RangeError("bce_loss: target must be 0 or 1");
    const double t = t8;
    const double z = logits.values()[i];
    out.loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                              : std::exp(z) / (1.0 + std::exp(z));
    out.grad.values()[i] = (s - t) * inv;
  }
  out.loss *= inv;
  return out;
}

CompositeLoss composite_mt_loss(const Matrix& expr_logits, const Matrix& va_pred,
                                std::span<const LabelSet> labels,
                                const ClassWeights& weights) {
  const std::size_t n = labels.size();
  if (expr_logits.rows() != n || va_pred.rows() != n || va_pred.cols() != 2) {
    throw ShapeError("composite_mt_loss: prediction rows != label count");
  }
  std::vector<std::size_t> expr_rows, va_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].has(Task::kExpr)) expr_rows.push_back(i);
    if (labels[i].has(Task::kVa)) va_rows.push_back(i);
  }
  CompositeLoss out;
  out.has_expr = !expr_rows.empty();
  out.has_va = va_rows.size() >= 2;
  if (!out.has_expr && !out.has_va) {
    throw RangeError("composite_mt_loss: batch has no usable labels");
  }
  out.grad_expr = Matrix(n, expr_logits.cols());
  out.grad_va = Matrix(n, 2);
  if (out.has_va) {
    Matrix truth(va_rows.size(), 2);
    for (std::size_t i = 0; i < va_rows.size(); ++i) {
      truth(i, 0) = *labels[va_rows[i]].valence;
      truth(i, 1) = *labels[va_rows[i]].arousal;
    }
    const LossAndGrad term = ccc_loss(va_pred.select_rows(va_rows), truth);
    out.ccc_term = term.loss;
    for (std::size_t i = 0; i < va_rows.size(); ++i) {
      out.grad_va(va_rows[i], 0) = term.grad(i, 0);
      out.grad_va(va_rows[i], 1) = term.grad(i, 1);
    }
  }
  if (out.has_expr) {
    std::vector<int> y;
    for (std::size_t r : expr_rows) y.push_back(*labels[r].expression);
    const LossAndGrad term =
        weighted_ce(expr_logits.select_rows(expr_rows), y, weights);
    out.ce_term = term.loss;
    for (std::size_t i = 0; i < expr_rows.size(); ++i) {
      auto src = term.grad.row(i);
      auto dst = out.grad_expr.row(expr_rows[i]);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  out.loss = out.ccc_term + out.ce_term;
  return out;
}

}  // namespace mtaffect
