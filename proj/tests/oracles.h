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

// Reference implementations used only by the tests. They deliberately take
// different routes from the library code: raw moments in long double for
// CCC, precision/recall for F1, plain loops over every grid point for the
// searches, and central differences for gradients.

#ifndef MTAFFECT_TESTS_ORACLES_H_
#define MTAFFECT_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "mtaffect/matrix.h"
#include "mtaffect/metrics.h"

namespace mtaffect::oracle {

inline constexpr double kFdStep = 1e-6;
// Components smaller than this are compared on an absolute scale.
inline constexpr double kFdFloor = 1e-5;
inline constexpr double kTie = 1e-12;

// Concordance from raw sums: 2 s_xy / (s_xx + s_yy + (m_x - m_y)^2).
inline double ccc(const std::vector<double>& x, const std::vector<double>& y) {
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const long double n = static_cast<long double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double a = x[i], b = y[i];
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const long double mx = sx / n, my = sy / n;
  const long double vx = sxx / n - mx * mx;
  const long double vy = syy / n - my * my;
  const long double cov = sxy / n - mx * my;
  const long double denom = vx + vy + (mx - my) * (mx - my);
  return static_cast<double>(2 * cov / denom);
}

// d f / d x_i by central differences, one coordinate at a time.
inline std::vector<double> numeric_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = kFdStep) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kFdFloor});
  return std::abs(analytic - numeric) / scale;
}

inline double max_relative_error(const std::vector<double>& analytic,
                                 const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return worst;
}

// F1 as the harmonic mean of precision and recall, 0 when undefined.
inline long double f1_pr(long double tp, long double fp, long double fn) {
  if (tp == 0) return 0;
  const long double p = tp / (tp + fp);
  const long double r = tp / (tp + fn);
  return 2 * p * r / (p + r);
}

inline long double macro_f1(const std::vector<int>& truth,
                            const std::vector<int>& pred, int classes) {
  long double sum = 0;
  for (int c = 0; c < classes; ++c) {
    long double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c && truth[i] == c) tp += 1;
      if (pred[i] == c && truth[i] != c) fp += 1;
      if (pred[i] != c && truth[i] == c) fn += 1;
    }
    sum += f1_pr(tp, fp, fn);
  }
  return sum / classes;
}

inline int argmax_first(const std::vector<double>& row) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(row.size()); ++c) {
    if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

struct BlendOutcome {
  double weight = 0.0;
  double f1 = -1.0;
};

// Every w = k / K; the first w whose F1 beats the running best by more than
// kTie wins.
inline BlendOutcome blend_search(const Matrix& pre, const Matrix& ft,
                                 const std::vector<int>& labels, int intervals) {
  BlendOutcome best;
  const int classes = static_cast<int>(pre.cols());
  for (int k = 0; k <= intervals; ++k) {
    const double w = static_cast<double>(k) / intervals;
    std::vector<int> pred;
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      std::vector<double> row(pre.cols());
      for (std::size_t c = 0; c < pre.cols(); ++c) {
        row[c] = w * pre(i, c) + (1.0 - w) * ft(i, c);
      }
      pred.push_back(argmax_first(row));
    }
    const double f1 = static_cast<double>(macro_f1(labels, pred, classes));
    if (f1 > best.f1 + kTie) best = {w, f1};
  }
  return best;
}

struct ThresholdOutcome {
  std::vector<double> thresholds;
  std::vector<double> f1;
};

inline ThresholdOutcome threshold_search(const Matrix& scores,
                                         const BinaryMatrix& truth,
                                         int intervals) {
  ThresholdOutcome out;
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    double best_t = 0.0, best_f1 = -1.0;
    for (int k = 1; k < intervals; ++k) {
      const double t = static_cast<double>(k) / intervals;
      long double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < scores.rows(); ++i) {
        const bool yes = !(scores(i, j) < t);
        if (yes && truth(i, j)) tp += 1;
        if (yes && !truth(i, j)) fp += 1;
        if (!yes && truth(i, j)) fn += 1;
      }
      const double f1 = static_cast<double>(f1_pr(tp, fp, fn));
      if (f1 > best_f1 + kTie) {
        best_f1 = f1;
        best_t = t;
      }
    }
    out.thresholds.push_back(best_t);
    out.f1.push_back(best_f1);
  }
  return out;
}

}  // namespace mtaffect::oracle

#endif  // MTAFFECT_TESTS_ORACLES_H_
