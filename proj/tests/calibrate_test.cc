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

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "mtaffect/calibrate.h"
#include "mtaffect/error.h"
#include "mtaffect/textio.h"
#include "oracles.h"
#include "test_util.h"

namespace mtaffect {
namespace {

Matrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

// Records whose embedding is [one-hot class | AU bits] and whose VA labels
// are tanh of the last two logits, so hand-set heads reproduce every label.
Dataset oracle_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.manifest.feature_dim = 8 + kNumAus;
  d.manifest.num_expr_classes = 8;
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    r.features.id = "o" + std::to_string(i);
    const int c = static_cast<int>(i % 8);
    r.features.embedding.assign(8 + kNumAus, 0.0);
    r.features.embedding[static_cast<std::size_t>(c)] = 1.0;
    std::array<std::uint8_t, kNumAus> aus{};
    for (std::size_t j = 0; j < kNumAus; ++j) {
      aus[j] = rng.uniform() < 0.5;
      r.features.embedding[8 + j] = aus[j];
    }
    aus[i % kNumAus] = 1;
    r.features.embedding[8 + i % kNumAus] = 1.0;
    r.features.logits.assign(kLogitsDim, 0.0);
    r.features.logits[kLogitValence] = rng.uniform(-1, 1);
    r.features.logits[kLogitArousal] = rng.uniform(-1, 1);
    r.labels.expression = c;
    r.labels.valence = std::tanh(r.features.logits[kLogitValence]);
    r.labels.arousal = std::tanh(r.features.logits[kLogitArousal]);
    r.labels.aus = aus;
    d.records.push_back(std::move(r));
  }
  return d;
}

HeadBundle oracle_heads() {
  const std::size_t in = 8 + kNumAus + kLogitsDim;
  HeadBundle b;
  b.expr_head = HeadModel(expr_head_specs(8 + kNumAus, 8), 0);
  for (std::size_t c = 0; c < 8; ++c) b.expr_head.weights(0)[c * in + c] = 10.0;
  b.au_head = HeadModel(au_head_specs(8 + kNumAus), 0);
  for (std::size_t j = 0; j < kNumAus; ++j) {
    b.au_head.weights(0)[j * in + 8 + j] = 20.0;
    b.au_head.bias(0)[j] = -10.0;
  }
  b.va_head = HeadModel(va_head_specs(), 0);
  b.va_head.weights(0)[0 * kLogitsDim + kLogitValence] = 1.0;
  b.va_head.weights(0)[1 * kLogitsDim + kLogitArousal] = 1.0;
  return b;
}

TEST_SUITE("calibrate") {

TEST_CASE("grid intervals") {
  CHECK(grid_intervals(0.1) == 10);
  CHECK(grid_intervals(0.25) == 4);
  CHECK(grid_intervals(0.05) == 20);
  CHECK_THROWS_AS(grid_intervals(0.3), RangeError);
  CHECK_THROWS_AS(grid_intervals(0.0), RangeError);
  CHECK_THROWS_AS(grid_intervals(1.5), RangeError);
}

TEST_CASE("blend endpoints and midpoint") {
  Rng rng(1);
  const Matrix a = testing::random_matrix(rng, 4, 3);
  const Matrix b = testing::random_matrix(rng, 4, 3);
  CHECK(blend(1.0, a, b) == a);
  CHECK(blend(0.0, a, b) == b);
  const Matrix mid = blend(0.5, rows_of({{0.8, 0.2}}), rows_of({{0.2, 0.8}}));
  CHECK(mid(0, 0) == 0.5);
  CHECK(mid(0, 1) == 0.5);
  CHECK_THROWS_AS(blend(1.5, a, b), RangeError);
  CHECK_THROWS_AS(blend(-0.1, a, b), RangeError);
  CHECK_THROWS_AS(blend(0.5, a, Matrix(4, 2)), ShapeError);
}

TEST_CASE("decide") {
  CHECK(decide(rows_of({{0.1, 0.7, 0.2}})) == std::vector<int>{1});
  CHECK(decide(rows_of({{0.5, 0.5}})) == std::vector<int>{0});
  CHECK(decide(Matrix(0, 3)).empty());
  CHECK_THROWS_AS(decide(rows_of({{0.1, NAN}})), RangeError);
}

TEST_CASE("decide is invariant to positive scaling of a blend") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = testing::random_matrix(rng, 10, 4, 0, 1);
    const Matrix b = testing::random_matrix(rng, 10, 4, 0, 1);
    const double w = static_cast<double>(rng.index(11)) / 10.0;
    const double k = 0.5 + rng.uniform() * 4;
    Matrix ka = a, kb = b;
    for (double& v : ka.values()) v *= k;
    for (double& v : kb.values()) v *= k;
    CHECK(decide(blend(w, ka, kb)) == decide(blend(w, a, b)));
  }
}

TEST_CASE("blend search worked examples") {
  const std::vector<int> label{0};
  const BlendSearchResult r =
      search_blend_weight(rows_of({{0.8, 0.2}}), rows_of({{0.2, 0.8}}), label, 0.1);
  CHECK(r.weight == 0.5);
  CHECK(r.f1 == 0.5);

  Rng rng(3);
  const Matrix s = testing::random_matrix(rng, 12, 3, 0, 1);
  std::vector<int> y(12);
  for (int& v : y) v = static_cast<int>(rng.index(3));
  CHECK(search_blend_weight(s, s, y, 0.1).weight == 0.0);

  CHECK_THROWS_AS(search_blend_weight(Matrix(0, 2), Matrix(0, 2), std::vector<int>{}, 0.1),
                  ShapeError);
}

TEST_CASE("blend search agrees with brute force and dominates the endpoints") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(50);
    const std::size_t classes = 2 + rng.index(5);
    const Matrix a = testing::lattice_matrix(rng, n, classes);
    const Matrix b = testing::lattice_matrix(rng, n, classes);
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(rng.index(classes));
    const BlendSearchResult got = search_blend_weight(a, b, y, 0.1);
    const oracle::BlendOutcome want = oracle::blend_search(a, b, y, 10);
    CHECK(got.weight == want.weight);
    CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
    const int k = static_cast<int>(classes);
    CHECK(got.f1 >= macro_f1(y, decide(a), k).macro);
    CHECK(got.f1 >= macro_f1(y, decide(b), k).macro);
  }
}

TEST_CASE("threshold search worked examples") {
  BinaryMatrix truth(4, 1);
  truth(0, 0) = 1;
  truth(1, 0) = 1;
  const Matrix scores = rows_of({{0.9}, {0.4}, {0.6}, {0.1}});
  const ThresholdSearchResult r = search_au_thresholds(scores, truth, 0.1);
  CHECK(r.thresholds[0] == 0.2);
  CHECK(r.per_au_f1[0] == doctest::Approx(0.8).epsilon(1e-15));

  BinaryMatrix t(6, 12);
  Matrix s(6, 12);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      t(i, j) = (i + j) % 2;
      s(i, j) = t(i, j);
    }
  }
  const ThresholdSearchResult perfect = search_au_thresholds(s, t, 0.1);
  for (double th : perfect.thresholds) CHECK(th == 0.1);
  for (double f : perfect.per_au_f1) CHECK(f == 1.0);
  CHECK_THROWS_AS(search_au_thresholds(s, BinaryMatrix(6, 11), 0.1), ShapeError);
}

TEST_CASE("threshold search permutes with its columns") {
  Rng rng(5);
  const Matrix s = testing::lattice_matrix(rng, 30, 12);
  BinaryMatrix t(30, 12);
  for (auto& v : t.data) v = rng.uniform() < 0.4;
  std::vector<std::size_t> perm{3, 0, 11, 5, 7, 1, 2, 10, 9, 4, 8, 6};
  Matrix ps(30, 12);
  BinaryMatrix pt(30, 12);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      ps(i, j) = s(i, perm[j]);
      pt(i, j) = t(i, perm[j]);
    }
  }
  const auto a = search_au_thresholds(s, t, 0.1);
  const auto b = search_au_thresholds(ps, pt, 0.1);
  for (std::size_t j = 0; j < 12; ++j) {
    CHECK(b.thresholds[j] == a.thresholds[perm[j]]);
    CHECK(b.per_au_f1[j] == a.per_au_f1[perm[j]]);
  }
}

TEST_CASE("threshold search agrees with brute force and beats 0.5") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(50);
    const Matrix s = trial % 2 ? testing::lattice_matrix(rng, n, 12)
                               : testing::random_matrix(rng, n, 12, 0, 1);
    BinaryMatrix t(n, 12);
    for (auto& v : t.data) v = rng.uniform() < 0.4;
    const int intervals = trial % 3 ? 10 : 20;
    const ThresholdSearchResult got = search_au_thresholds(s, t, 1.0 / intervals);
    const oracle::ThresholdOutcome want = oracle::threshold_search(s, t, intervals);
    CHECK(got.thresholds == want.thresholds);
    const AuF1Result fixed = binary_f1_per_au(t, s, std::vector<double>(12, 0.5));
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(got.per_au_f1[j] == doctest::Approx(want.f1[j]).epsilon(1e-12));
      CHECK(got.per_au_f1[j] >= fixed.per_au[j]);
    }
  }
}

TEST_CASE("perfect heads score P_MTL = 3") {
  const Dataset d = oracle_dataset(64, 1);
  REQUIRE(validate_dataset(d).ok);
  const EvalReport r = evaluate_mtl(oracle_heads(), d, CalibrationProfile{});
  CHECK(*r.p_expr == 1.0);
  CHECK(*r.p_va == 1.0);
  CHECK(*r.p_au == 1.0);
  CHECK(r.p_mtl == 3.0);
  CHECK_FALSE(r.partial);
  CHECK(r.confusion->total() == 64);
  CHECK(r.per_au_f1.size() == kNumAus);
  CHECK(*r.rmse_valence == 0.0);
}

TEST_CASE("missing tasks make a partial report") {
  Dataset d = oracle_dataset(32, 2);
  for (Record& r : d.records) r.labels.valence = r.labels.arousal = std::nullopt;
  const EvalReport r = evaluate_mtl(oracle_heads(), d, CalibrationProfile{});
  CHECK_FALSE(r.p_va);
  CHECK(r.partial);
  CHECK(r.p_mtl == 2.0);
  const std::string json = report_to_json(r);
  CHECK(json.find("\"p_va\"") == std::string::npos);
  CHECK(json.find("\"partial\": true") != std::string::npos);

  Dataset no_au = oracle_dataset(32, 2);
  for (Record& rec : no_au.records) rec.labels.aus.reset();
  const EvalReport s = evaluate_mtl(oracle_heads(), no_au, CalibrationProfile{});
  CHECK_FALSE(s.p_au);
  CHECK(report_to_json(s).find("\"p_au\"") == std::string::npos);
}

TEST_CASE("metrics use each task's labeled subset") {
  Dataset d = oracle_dataset(40, 3);
  // Wrong labels on records that then lose them must not matter.
  for (std::size_t i = 0; i < 40; i += 3) {
    d.records[i].labels.expression.reset();
    d.records[i].features.embedding.assign(8 + kNumAus, 0.0);
  }
  const EvalReport r = evaluate_mtl(oracle_heads(), d, CalibrationProfile{});
  CHECK(*r.p_expr == 1.0);
  CHECK(r.confusion->total() == 26);
}

TEST_CASE("evaluation rejects mismatched heads") {
  const Dataset d = testing::small_dataset(10, 1, 8);
  CHECK_THROWS_AS(evaluate_mtl(oracle_heads(), d, CalibrationProfile{}), ShapeError);
}

TEST_CASE("openface blending in evaluation") {
  const Dataset d = testing::small_dataset(40, 1, 8, true);
  HeadBundle b;
  b.expr_head = init_model(expr_head_specs(8, 8), 1);
  b.va_head = init_model(va_head_specs(), 2);
  b.au_head = init_model(au_head_specs(8), 3);
  const HeadModel mlp = init_model(openface_mlp_specs(8), 4);

  CalibrationProfile p;
  const EvalReport plain = evaluate_mtl(b, d, p);
  const EvalReport w1 = evaluate_mtl(b, d, p, std::make_pair(mlp, 1.0));
  CHECK(*w1.p_expr == *plain.p_expr);

  HeadBundle with = b;
  with.openface_mlp = mlp;
  const ModelScores s = compute_scores(with, d);
  REQUIRE(s.openface);
  const EvalReport w0 = evaluate_mtl(b, d, CalibrationProfile{}, std::make_pair(mlp, 0.0));
  CHECK(*w0.p_expr == macro_f1(expression_labels(d, all_indices(d)), decide(*s.openface), 8).macro);
}

TEST_CASE("published component sums") {
  CHECK(report_from_components(0.447, 0.335, 0.522).p_mtl == 1.304);
  CHECK(report_from_components(0.447, 0.357, 0.522).p_mtl == 1.326);
}

TEST_CASE("lsd evaluation") {
  Rng rng(7);
  const Matrix pre = testing::random_matrix(rng, 30, 6, 0, 1);
  std::vector<int> y(30);
  for (int& v : y) v = static_cast<int>(rng.index(6));
  const LsdReport same = evaluate_lsd(pre, pre, y);
  CHECK(same.f1 == same.pretrained_f1);
  CHECK(same.weight == 0.0);
  CHECK(same.blended_confusion.class_names == lsd_expression_names());

  const Matrix ft = testing::random_matrix(rng, 30, 6, 0, 1);
  const LsdReport r = evaluate_lsd(pre, ft, y);
  CHECK(r.f1 >= r.pretrained_f1);
  CHECK(r.f1 >= r.finetuned_f1);

  const std::vector<int> ones(30, 2);
  const LsdReport one = evaluate_lsd(pre, ft, ones);
  for (std::size_t c = 0; c < 6; ++c) {
    if (c != 2) CHECK(one.per_class_f1[c] == 0.0);
  }
}

TEST_CASE("profile json round-trip") {
  CalibrationProfile p;
  p.blend_weight = 0.3;
  p.au_thresholds = {0.6, 0.7, 0.5, 0.3, 0.4, 0.4, 0.5, 0.9, 0.8, 0.7, 0.2, 0.7};
  p.tuned_on = "validation";
  p.seed = 12;
  const CalibrationProfile back = profile_from_json(profile_to_json(p));
  CHECK(back.blend_weight == p.blend_weight);
  CHECK(back.au_thresholds == p.au_thresholds);
  CHECK(back.grid_step == p.grid_step);
  CHECK(back.tuned_on == "validation");
  CHECK(back.seed == 12);

  CHECK_THROWS_AS(profile_from_json("{}"), FormatError);
  CHECK_THROWS_AS(profile_from_json(R"({"blend_weight": 2, "au_thresholds": []})"),
                  FormatError);
  CHECK_THROWS_AS(
      profile_from_json(R"({"blend_weight": 1, "au_thresholds": [0.5, 0.5]})"),
      FormatError);
}

TEST_CASE("scores csv round-trip and predictions") {
  const Dataset d = oracle_dataset(10, 4);
  const ModelScores s = compute_scores(oracle_heads(), d);
  testing::TempDir dir("scores");
  write_text_file(dir / "scores.csv", scores_to_csv(s, 1.0));
  const ModelScores back = read_scores_csv(dir / "scores.csv");
  CHECK(back.ids == s.ids);
  CHECK(back.expr == s.expr);
  CHECK(back.va == s.va);
  CHECK(back.au == s.au);
  CHECK(evaluate_scores(back, d, CalibrationProfile{}).p_mtl == 3.0);

  const std::string pred = predictions_to_csv(s, CalibrationProfile{});
  CHECK(pred.rfind("id,expression,valence,arousal,au1,au2,au4,", 0) == 0);
  CHECK(pred.find("\no0,0,") != std::string::npos);

  write_text_file(dir / "bad.csv", "id,x\n");
  CHECK_THROWS_AS(read_scores_csv(dir / "bad.csv"), FormatError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace mtaffect
