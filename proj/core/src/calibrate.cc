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

#include "mtaffect/calibrate.h"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "mtaffect/error.h"
#include "mtaffect/textio.h"

namespace mtaffect {
namespace {

using nlohmann::json;

double grid_value(int k, int intervals) {
  return static_cast<double>(k) / static_cast<double>(intervals);
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

int grid_intervals(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw RangeError("grid_step must be in (0, 1]");
  }
  const double k = std::round(1.0 / grid_step);
  if (std::abs(k * grid_step - 1.0) > 1e-9) {
    throw RangeError("grid_step " + format_double(grid_step) +
                     " does not divide 1 evenly");
  }
  return static_cast<int>(k);
}

Matrix blend(double w, const Matrix& s_pre, const Matrix& s_ft) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw RangeError("blend weight " + format_double(w) + " outside [0, 1]");
  }
  check_same_shape(s_pre, s_ft, "blend");
  Matrix out(s_pre.rows(), s_pre.cols());
  const double v = 1.0 - w;
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    out.values()[i] = w * s_pre.values()[i] + v * s_ft.values()[i];
  }
  return out;
}

std::vector<int> decide(const Matrix& scores) {
  if (scores.cols() < 1 && scores.rows() > 0) {
    throw ShapeError("decide: scores need at least one column");
  }
  std::vector<int> out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto row = scores.row(r);
    std::size_t best = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw RangeError("decide: non-finite score at row " + std::to_string(r));
      }
      if (row[c] > row[best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

BlendSearchResult search_blend_weight(const Matrix& s_pre, const Matrix& s_ft,
                                      std::span<const int> labels,
                                      double grid_step) {
  check_same_shape(s_pre, s_ft, "search_blend_weight");
  if (s_pre.rows() == 0 || labels.empty()) {
    throw ShapeError("search_blend_weight: empty inputs");
  }
  if (labels.size() != s_pre.rows()) {
    throw ShapeError("search_blend_weight: label count != score rows");
  }
  const int intervals = grid_intervals(grid_step);
  const int classes = static_cast<int>(s_pre.cols());
  BlendSearchResult best{0.0, -1.0};
  for (int k = 0; k <= intervals; ++k) {
    const double w = grid_value(k, intervals);
    const double f1 = macro_f1(labels, decide(blend(w, s_pre, s_ft)), classes).macro;
    if (f1 > best.f1 + kSearchTieTolerance) best = {w, f1};
  }
  return best;
}

ThresholdSearchResult search_au_thresholds(const Matrix& scores,
                                           const BinaryMatrix& truth,
                                           double grid_step) {
  if (scores.rows() != truth.rows || scores.cols() != truth.cols) {
    throw ShapeError("search_au_thresholds: scores and labels differ in shape");
  }
  const int intervals = grid_intervals(grid_step);
  if (intervals < 2) throw RangeError("search_au_thresholds: grid has no interior");
  ThresholdSearchResult result;
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    double best_t = grid_value(1, intervals);
    double best_f1 = -1.0;
    for (int k = 1; k < intervals; ++k) {
      const double t = grid_value(k, intervals);
      std::int64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < scores.rows(); ++i) {
        const bool predicted = scores(i, j) >= t;
        const bool actual = truth(i, j) != 0;
        tp += predicted && actual;
        fp += predicted && !actual;
        fn += !predicted && actual;
      }
      const double f1 = f1_from_counts(tp, fp, fn);
      if (f1 > best_f1 + kSearchTieTolerance) {
        best_f1 = f1;
        best_t = t;
      }
    }
    result.thresholds.push_back(best_t);
    result.per_au_f1.push_back(best_f1);
  }
  return result;
}

ModelScores compute_scores(const HeadBundle& bundle, const Dataset& d) {
  const std::vector<std::size_t> all = all_indices(d);
  ModelScores s;
  for (const Record& r : d.records) s.ids.push_back(r.features.id);
  s.expr = expr_scores(bundle.expr_head, d, all);
  s.va = va_outputs(bundle.va_head, d, all);
  s.au = au_scores(bundle.au_head, d, all);
  if (bundle.openface_mlp && d.has_openface()) {
    if (bundle.openface_mlp->out_dim() != s.expr.cols()) {
      throw ShapeError("OpenFace MLP and expression head differ in class count");
    }
    Matrix of = s.expr;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.records[i].features.openface_aus) rows.push_back(i);
    }
    const Matrix sub = openface_scores(*bundle.openface_mlp, d, rows);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = sub.row(k);
      std::copy(src.begin(), src.end(), of.row(rows[k]).begin());
    }
    s.openface = std::move(of);
  }
  return s;
}

Matrix blended_expr_scores(const ModelScores& scores, double w) {
  if (!scores.openface) return scores.expr;
  return blend(w, scores.expr, *scores.openface);
}

EvalReport evaluate_scores(const ModelScores& scores, const Dataset& d,
                           const CalibrationProfile& profile) {
  if (scores.expr.rows() != d.size() || scores.va.rows() != d.size() ||
      scores.au.rows() != d.size()) {
    throw ShapeError("evaluate: score rows do not match the dataset");
  }
  const int classes = d.manifest.num_expr_classes;
  if (scores.expr.cols() != static_cast<std::size_t>(classes)) {
    throw ShapeError("evaluate: expression scores have " +
                     std::to_string(scores.expr.cols()) + " columns, dataset has " +
                     std::to_string(classes) + " classes");
  }
  if (scores.va.cols() != 2 || scores.au.cols() != kNumAus) {
    throw ShapeError("evaluate: valence/arousal or AU scores have the wrong width");
  }
  if (profile.au_thresholds.size() != kNumAus) {
    throw ShapeError("evaluate: profile needs 12 AU thresholds");
  }

  EvalReport report;
  report.num_records = d.size();
  report.counts = validate_dataset(d).counts;
  report.au_thresholds = profile.au_thresholds;
  report.blend_weight = profile.blend_weight;
  report.tuned_on = profile.tuned_on;
  report.seed = profile.seed;

  const TaskView ev = task_view(d, Task::kExpr);
  if (ev.size() > 0) {
    const Matrix blended = blended_expr_scores(scores, profile.blend_weight);
    const std::vector<int> pred = decide(blended.select_rows(ev.indices));
    const std::vector<int> truth = expression_labels(d, ev.indices);
    const F1Result f1 = macro_f1(truth, pred, classes);
    report.p_expr = f1.macro;
    report.per_class_f1 = f1.per_class;
    report.expr_accuracy = accuracy(truth, pred);
    report.confusion = confusion(truth, pred, classes, expression_class_names(classes));
  }

  const TaskView vv = task_view(d, Task::kVa);
  if (vv.size() >= 2) {
    const Matrix pred = scores.va.select_rows(vv.indices);
    const Matrix truth = va_labels(d, vv.indices);
    const auto pv = pred.column(0), pa = pred.column(1);
    const auto tv = truth.column(0), ta = truth.column(1);
    report.ccc_valence = ccc(pv, tv);
    report.ccc_arousal = ccc(pa, ta);
    report.rmse_valence = rmse(pv, tv);
    report.rmse_arousal = rmse(pa, ta);
    report.p_va = (*report.ccc_valence + *report.ccc_arousal) / 2.0;
  }

  const TaskView av = task_view(d, Task::kAu);
  if (av.size() > 0) {
    const AuF1Result f1 = binary_f1_per_au(au_labels(d, av.indices),
                                           scores.au.select_rows(av.indices),
                                           profile.au_thresholds);
    report.p_au = f1.macro;
    report.per_au_f1 = f1.per_au;
  }

  // Same summation order as mtl_score: (p_va + p_expr) + p_au.
  report.partial = !report.p_va || !report.p_expr || !report.p_au;
  report.p_mtl = (report.p_va.value_or(0.0) + report.p_expr.value_or(0.0)) +
                 report.p_au.value_or(0.0);
  return report;
}

EvalReport evaluate_mtl(const HeadBundle& bundle, const Dataset& d,
                        const CalibrationProfile& profile,
                        const std::optional<std::pair<HeadModel, double>>&
                            openface_blend) {
  if (bundle.expr_head.in_dim() != d.manifest.feature_dim + kLogitsDim ||
      bundle.au_head.in_dim() != d.manifest.feature_dim + kLogitsDim ||
      bundle.va_head.in_dim() != kLogitsDim) {
    throw ShapeError("evaluate: head input sizes do not match feature_dim " +
                     std::to_string(d.manifest.feature_dim));
  }
  if (!openface_blend) return evaluate_scores(compute_scores(bundle, d), d, profile);
  HeadBundle with_mlp = bundle;
  with_mlp.openface_mlp = openface_blend->first;
  CalibrationProfile p = profile;
  p.blend_weight = openface_blend->second;
  return evaluate_scores(compute_scores(with_mlp, d), d, p);
}

EvalReport report_from_components(double p_va, double p_expr, double p_au) {
  const MtlScores s = mtl_score(p_va, p_va, p_expr, p_au);
  EvalReport report;
  report.p_va = s.p_va;
  report.p_expr = s.p_expr;
  report.p_au = s.p_au;
  report.p_mtl = s.p_mtl;
  return report;
}

LsdReport evaluate_lsd(const Matrix& s_pre, const Matrix& s_ft,
                       std::span<const int> labels, double grid_step) {
  const BlendSearchResult best = search_blend_weight(s_pre, s_ft, labels, grid_step);
  const int classes = static_cast<int>(s_pre.cols());
  const auto names = expression_class_names(classes);
  LsdReport r;
  r.weight = best.weight;
  r.f1 = best.f1;
  const std::vector<int> pre = decide(s_pre);
  const std::vector<int> ft = decide(s_ft);
  const std::vector<int> mixed = decide(blend(best.weight, s_pre, s_ft));
  r.pretrained_f1 = macro_f1(labels, pre, classes).macro;
  r.finetuned_f1 = macro_f1(labels, ft, classes).macro;
  r.per_class_f1 = macro_f1(labels, mixed, classes).per_class;
  r.pretrained_confusion = confusion(labels, pre, classes, names);
  r.blended_confusion = confusion(labels, mixed, classes, names);
  return r;
}

std::string profile_to_json(const CalibrationProfile& p) {
  json j;
  j["blend_weight"] = p.blend_weight;
  j["au_thresholds"] = p.au_thresholds;
  j["grid_step"] = p.grid_step;
  j["tuned_on"] = p.tuned_on;
  j["seed"] = p.seed;
  return j.dump(2) + "\n";
}

CalibrationProfile profile_from_json(std::string_view text) {
  CalibrationProfile p;
  try {
    const json j = json::parse(text);
    p.blend_weight = j.at("blend_weight").get<double>();
    p.au_thresholds = j.at("au_thresholds").get<std::vector<double>>();
    p.grid_step = j.value("grid_step", kDefaultGridStep);
    p.tuned_on = j.value("tuned_on", std::string());
    p.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw FormatError(std::string("profile: ") + e.what());
  }
  if (!(p.blend_weight >= 0.0 && p.blend_weight <= 1.0)) {
    throw FormatError("profile: blend_weight outside [0, 1]");
  }
  if (p.au_thresholds.size() != kNumAus) {
    throw FormatError("profile: au_thresholds must have 12 entries");
  }
  for (double t : p.au_thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw FormatError("profile: threshold outside (0, 1)");
  }
  return p;
}

void save_profile(const std::filesystem::path& path, const CalibrationProfile& p) {
  write_text_file(path, profile_to_json(p));
}

CalibrationProfile load_profile(const std::filesystem::path& path) {
  try {
    return profile_from_json(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string report_to_json(const EvalReport& r) {
  json j;
  j["p_va"] = optional_json(r.p_va);
  j["p_expr"] = optional_json(r.p_expr);
  j["p_au"] = optional_json(r.p_au);
  j["p_mtl"] = r.p_mtl;
  j["partial"] = r.partial;
  j["ccc_valence"] = optional_json(r.ccc_valence);
  j["ccc_arousal"] = optional_json(r.ccc_arousal);
  j["rmse_valence"] = optional_json(r.rmse_valence);
  j["rmse_arousal"] = optional_json(r.rmse_arousal);
  j["expr_accuracy"] = optional_json(r.expr_accuracy);
  // Drop absent entries entirely rather than writing nulls.
  for (auto it = j.begin(); it != j.end();) {
    it = it->is_null() ? j.erase(it) : std::next(it);
  }
  if (r.confusion) {
    json per_class = json::object();
    for (std::size_t c = 0; c < r.per_class_f1.size(); ++c) {
      per_class[r.confusion->class_names[c]] = r.per_class_f1[c];
    }
    j["per_class_f1"] = per_class;
  }
  if (!r.per_au_f1.empty()) {
    json per_au = json::object();
    for (std::size_t k = 0; k < r.per_au_f1.size(); ++k) {
      per_au["AU" + std::to_string(kAuNumbers[k])] = r.per_au_f1[k];
    }
    j["per_au_f1"] = per_au;
  }
  j["num_records"] = r.num_records;
  j["label_counts"] = {{"expr", r.counts.expr},
                       {"va", r.counts.va},
                       {"au", r.counts.au},
                       {"openface", r.counts.openface}};
  j["au_thresholds"] = r.au_thresholds;
  j["blend_weight"] = r.blend_weight;
  j["tuned_on"] = r.tuned_on;
  j["seed"] = r.seed;
  return j.dump(2) + "\n";
}

std::string lsd_report_to_json(const LsdReport& r) {
  json j;
  j["blend_weight"] = r.weight;
  j["f1"] = r.f1;
  j["pretrained_f1"] = r.pretrained_f1;
  j["finetuned_f1"] = r.finetuned_f1;
  json per_class = json::object();
  for (std::size_t c = 0; c < r.per_class_f1.size(); ++c) {
    per_class[r.blended_confusion.class_names[c]] = r.per_class_f1[c];
  }
  j["per_class_f1"] = per_class;
  return j.dump(2) + "\n";
}

std::string predictions_to_csv(const ModelScores& scores,
                               const CalibrationProfile& profile) {
  std::string out = "id,expression,valence,arousal";
  for (int au : kAuNumbers) out += ",au" + std::to_string(au);
  out += '\n';
  const std::vector<int> expr = decide(blended_expr_scores(scores, profile.blend_weight));
  for (std::size_t i = 0; i < scores.ids.size(); ++i) {
    out += scores.ids[i];
    out += ',' + std::to_string(expr[i]);
    out += ',' + format_double(scores.va(i, 0));
    out += ',' + format_double(scores.va(i, 1));
    for (std::size_t k = 0; k < kNumAus; ++k) {
      out += scores.au(i, k) >= profile.au_thresholds[k] ? ",1" : ",0";
    }
    out += '\n';
  }
  return out;
}

std::string scores_to_csv(const ModelScores& scores, double blend_weight) {
  const Matrix expr = blended_expr_scores(scores, blend_weight);
  std::string out = "id";
  for (std::size_t c = 0; c < expr.cols(); ++c) out += ",s" + std::to_string(c);
  out += ",valence,arousal";
  for (int au : kAuNumbers) out += ",au" + std::to_string(au);
  out += '\n';
  for (std::size_t i = 0; i < scores.ids.size(); ++i) {
    out += scores.ids[i];
    for (double v : expr.row(i)) out += ',' + format_double(v);
    for (double v : scores.va.row(i)) out += ',' + format_double(v);
    for (double v : scores.au.row(i)) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

ModelScores read_scores_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;
  ModelScores s;
  std::size_t classes = 0, width = 0, line_no = 0, pos = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1) {
      if (fields.empty() || fields[0] != "id") fail("header must start with 'id'");
      while (classes + 1 < fields.size() &&
             fields[classes + 1] == "s" + std::to_string(classes)) {
        ++classes;
      }
      width = fields.size();
      if (classes == 0 || width != 1 + classes + 2 + kNumAus) {
        fail("expected header id,s0..s{C-1},valence,arousal,au1..au26");
      }
      continue;
    }
    if (fields.size() != width) fail("wrong field count");
    s.ids.emplace_back(fields[0]);
    std::vector<double> values;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto v = parse_double(fields[k]);
      if (!v || !std::isfinite(*v)) fail("bad number '" + std::string(fields[k]) + "'");
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
  }
  if (width == 0) throw FormatError(path.string() + ": empty scores file");
  s.expr = Matrix(rows.size(), classes);
  s.va = Matrix(rows.size(), 2);
  s.au = Matrix(rows.size(), kNumAus);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < classes; ++c) s.expr(i, c) = rows[i][c];
    s.va(i, 0) = rows[i][classes];
    s.va(i, 1) = rows[i][classes + 1];
    for (std::size_t k = 0; k < kNumAus; ++k) s.au(i, k) = rows[i][classes + 2 + k];
  }
  return s;
}

}  // namespace mtaffect
