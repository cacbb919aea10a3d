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
#include <limits>
#include <vector>

#include "doctest.h"
#include "mtaffect/error.h"
#include "mtaffect/net.h"
#include "mtaffect/random.h"
#include "test_util.h"

namespace mtaffect {
namespace {

using A = Activation;

std::vector<LayerSpec> two_layer(std::size_t in, std::size_t hidden, std::size_t out,
                                 A a1, A a2) {
  return {{in, hidden, a1}, {hidden, out, a2}};
}

TEST_SUITE("net") {

TEST_CASE("init is deterministic and shaped") {
  const HeadModel a = init_model({{10, 2, A::kTanh}}, 7);
  const HeadModel b = init_model({{10, 2, A::kTanh}}, 7);
  CHECK(a == b);
  CHECK(init_model({{10, 2, A::kTanh}}, 8) != a);

  const HeadModel big = init_model({{1290, 8, A::kSoftmax}}, 1);
  CHECK(big.weights(0).size() == 8 * 1290);
  CHECK(big.bias(0).size() == 8);
  CHECK(big.num_params() == 8 * 1290 + 8);
  const double limit = std::sqrt(6.0 / (1290 + 8));
  for (double w : big.weights(0)) CHECK(std::abs(w) <= limit);
  for (double b0 : big.bias(0)) CHECK(b0 == 0.0);
}

TEST_CASE("layer chain and activation placement are checked") {
  CHECK_THROWS_AS(init_model({{10, 128, A::kRelu}, {64, 8, A::kSoftmax}}, 0), ShapeError);
  CHECK_THROWS_AS(init_model({{10, 8, A::kSoftmax}, {8, 2, A::kLinear}}, 0), Error);
  CHECK_THROWS_AS(init_model({}, 0), Error);
}

TEST_CASE("parameter layout") {
  const HeadModel m = init_model(two_layer(3, 4, 2, A::kRelu, A::kLinear), 1);
  CHECK(m.offset(0) == 0);
  CHECK(m.offset(1) == 3 * 4 + 4);
  CHECK(m.num_params() == 16 + 4 * 2 + 2);
  CHECK(m.weights(1).data() == m.params().data() + 16);
}

TEST_CASE("zero weights give uniform softmax and zero tanh") {
  HeadModel soft({{5, 8, A::kSoftmax}}, 0);
  Rng rng(1);
  const Matrix x = testing::random_matrix(rng, 3, 5);
  const Matrix out = forward(soft, x).output();
  for (double v : out.values()) CHECK(v == doctest::Approx(1.0 / 8).epsilon(1e-15));

  HeadModel t({{10, 2, A::kTanh}}, 0);
  const Matrix zeros = forward(t, testing::random_matrix(rng, 4, 10)).output();
  for (double v : zeros.values()) CHECK(v == 0.0);
}

TEST_CASE("empty batch keeps the output width") {
  const HeadModel m = init_model(two_layer(6, 5, 3, A::kRelu, A::kSoftmax), 2);
  const Activations acts = forward(m, Matrix(0, 6));
  CHECK(acts.output().rows() == 0);
  CHECK(acts.output().cols() == 3);
  const Gradients g = backward(m, acts, Matrix(0, 3));
  for (double v : g.params) CHECK(v == 0.0);
}

TEST_CASE("forward rejects bad batches") {
  const HeadModel m = init_model({{4, 2, A::kLinear}}, 2);
  CHECK_THROWS_AS(forward(m, Matrix(2, 3)), ShapeError);
  Matrix bad(1, 4);
  bad(0, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(m, bad), RangeError);
}

TEST_CASE("softmax and sigmoid stay finite for large inputs") {
  HeadModel m({{1, 2, A::kSoftmax}}, 0);
  m.weights(0)[0] = 1.0;
  m.weights(0)[1] = -1.0;
  Matrix x(1, 1, 800.0);
  const Matrix out = forward(m, x).output();
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 0.0);

  HeadModel s({{1, 1, A::kSigmoid}}, 0);
  s.weights(0)[0] = 1.0;
  CHECK(forward(s, Matrix(1, 1, -800.0)).output()(0, 0) == 0.0);
  CHECK(forward(s, Matrix(1, 1, 800.0)).output()(0, 0) == 1.0);
}

TEST_CASE("forward is bit-reproducible") {
  const HeadModel m = init_model(two_layer(7, 9, 4, A::kTanh, A::kSigmoid), 5);
  Rng rng(4);
  const Matrix x = testing::random_matrix(rng, 6, 7);
  CHECK(forward(m, x).output() == forward(m, x).output());
}

TEST_CASE("linear layer gradient is the outer product") {
  HeadModel m({{3, 2, A::kLinear}}, 0);
  Matrix x(1, 3);
  x(0, 0) = 1.0;
  x(0, 1) = -2.0;
  x(0, 2) = 0.5;
  Matrix g(1, 2);
  g(0, 0) = 3.0;
  g(0, 1) = -1.0;
  const Gradients grads = backward(m, forward(m, x), g);
  const std::vector<double> expected{3, -6, 1.5, -1, 2, -0.5, 3, -1};
  CHECK(grads.params == expected);
}

TEST_CASE("zero output gradient gives zero parameter gradient") {
  const HeadModel m = init_model(two_layer(4, 6, 3, A::kRelu, A::kSoftmax), 3);
  Rng rng(2);
  const Gradients g =
      backward(m, forward(m, testing::random_matrix(rng, 5, 4)), Matrix(5, 3));
  for (double v : g.params) CHECK(v == 0.0);
}

TEST_CASE("backward matches central differences for every activation") {
  Rng rng(21);
  const A all[] = {A::kLinear, A::kRelu, A::kTanh, A::kSigmoid};
  for (A hidden : all) {
    for (A last : {A::kLinear, A::kTanh, A::kSigmoid, A::kSoftmax}) {
      const HeadModel m = init_model(two_layer(5, 6, 4, hidden, last), rng.next());
      const Matrix x = testing::random_matrix(rng, 3, 5, -2, 2);
      const Matrix r = testing::random_matrix(rng, 3, 4);
      CAPTURE(activation_name(hidden));
      CAPTURE(activation_name(last));
      CHECK(testing::mlp_gradient_error(m, x, r) <= 1e-4);
    }
  }
  // Depth three.
  const HeadModel deep = init_model(
      {{4, 5, A::kTanh}, {5, 5, A::kRelu}, {5, 3, A::kSoftmax}}, 9);
  CHECK(testing::mlp_gradient_error(deep, testing::random_matrix(rng, 4, 4),
                                    testing::random_matrix(rng, 4, 3)) <= 1e-4);
}

TEST_CASE("pre-activation gradients skip the last activation") {
  Rng rng(6);
  const HeadModel m = init_model(two_layer(3, 4, 2, A::kTanh, A::kSigmoid), 4);
  const Matrix x = testing::random_matrix(rng, 2, 3);
  const Activations acts = forward(m, x);
  const Matrix r = testing::random_matrix(rng, 2, 2);
  // Chain the sigmoid derivative by hand and compare both entry points.
  Matrix at_pre(2, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double y = acts.output()(i, j);
      at_pre(i, j) = r(i, j) * y * (1 - y);
    }
  }
  const Gradients a = backward(m, acts, r, GradientAt::kOutput);
  const Gradients b = backward(m, acts, at_pre, GradientAt::kPreActivation);
  for (std::size_t k = 0; k < a.params.size(); ++k) {
    CHECK(a.params[k] == doctest::Approx(b.params[k]).epsilon(1e-12));
  }
}

TEST_CASE("adam first step moves by the learning rate") {
  OptimizerState s = OptimizerState::create(OptimizerKind::kAdam, 1);
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  adam_step(s, p, g);
  CHECK(p[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(s.step_count == 1);
}

TEST_CASE("adam with zero gradients never moves") {
  OptimizerState s = OptimizerState::create(OptimizerKind::kAdam, 3);
  std::vector<double> p{0.5, -1.0, 2.0};
  const std::vector<double> zero(3, 0.0);
  for (int i = 0; i < 50; ++i) adam_step(s, p, zero);
  CHECK(p == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("adam is deterministic") {
  OptimizerState a = OptimizerState::create(OptimizerKind::kAdam, 2);
  OptimizerState b = a;
  std::vector<double> pa{1, 2}, pb{1, 2};
  const std::vector<double> g{0.3, -0.7};
  adam_step(a, pa, g);
  adam_step(b, pb, g);
  CHECK(pa == pb);
  CHECK(a == b);
  CHECK_THROWS_AS(adam_step(a, pa, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("sam on a quadratic perturbs to 1.1 and steps with 2.2") {
  AdamHyperparams hp;
  hp.rho = 0.1;
  OptimizerState s = OptimizerState::create(OptimizerKind::kAdamSam, 1, hp);
  std::vector<double> w{1.0};
  std::vector<double> seen;
  const LossGradientFn quad = [&](std::span<const double> p, std::span<double> g) {
    seen.push_back(p[0]);
    g[0] = 2 * p[0];
    return p[0] * p[0];
  };
  const double loss = sam_step(s, w, quad);
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == 1.0);
  CHECK(seen[1] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(loss == 1.0);
  CHECK(s.first_moment[0] == doctest::Approx(0.1 * 2.2).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-6));
}

TEST_CASE("sam with zero gradient leaves parameters alone") {
  OptimizerState s = OptimizerState::create(OptimizerKind::kAdamSam, 2);
  std::vector<double> w{0.25, -0.5};
  const LossGradientFn flat = [](std::span<const double>, std::span<double> g) {
    g[0] = g[1] = 0.0;
    return 3.0;
  };
  sam_step(s, w, flat);
  CHECK(w == std::vector<double>{0.25, -0.5});
}

TEST_CASE("sam with rho zero is adam bit-for-bit") {
  AdamHyperparams hp;
  hp.rho = 0.0;
  OptimizerState sam = OptimizerState::create(OptimizerKind::kAdamSam, 3, hp);
  OptimizerState adam = OptimizerState::create(OptimizerKind::kAdam, 3, hp);
  std::vector<double> ws{0.3, -0.2, 1.0}, wa = ws;
  auto grad_of = [](std::span<const double> p, std::span<double> g) {
    g[0] = std::sin(p[0]) + p[1];
    g[1] = p[1] * p[2];
    g[2] = std::exp(-p[2] * p[2]);
    return p[0] * p[1];
  };
  for (int i = 0; i < 100; ++i) {
    sam_step(sam, ws, grad_of);
    std::vector<double> g(3);
    grad_of(wa, g);
    adam_step(adam, wa, g);
    REQUIRE(ws == wa);
  }
  CHECK(sam.first_moment == adam.first_moment);
  CHECK(sam.second_moment == adam.second_moment);
}

TEST_CASE("optimizer names") {
  CHECK(parse_optimizer("adam") == OptimizerKind::kAdam);
  CHECK(parse_optimizer("adam_sam") == OptimizerKind::kAdamSam);
  CHECK(parse_optimizer("sam") == OptimizerKind::kAdamSam);
  CHECK_THROWS_AS(parse_optimizer("sgd"), RangeError);
  CHECK(parse_activation(activation_name(A::kSoftmax)) == A::kSoftmax);
}

TEST_CASE("checkpoint round-trip is lossless") {
  const HeadModel m = init_model(
      {{7, 5, A::kRelu}, {5, 3, A::kSoftmax}}, 123);
  const std::string text = checkpoint_to_string(m, 42);
  const Checkpoint back = checkpoint_from_string(text);
  CHECK(back.model == m);
  CHECK(back.step_count == 42);
  CHECK(checkpoint_to_string(back.model, 42) == text);

  testing::TempDir dir("ckpt");
  save_checkpoint(dir / "m.ckpt", m, 3);
  CHECK(load_checkpoint(dir / "m.ckpt").model == m);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const HeadModel m = init_model({{2, 2, A::kTanh}}, 1);
  std::string text = checkpoint_to_string(m);
  CHECK_THROWS_AS(checkpoint_from_string("garbage\n"), FormatError);
  CHECK_THROWS_AS(checkpoint_from_string(text.substr(0, text.size() - 10)), FormatError);
  const auto pos = text.find("layer 0 bias");
  std::string bad = text;
  bad.replace(pos, 12, "layer 0 bain");
  CHECK_THROWS_AS(checkpoint_from_string(bad), FormatError);
  testing::TempDir dir("ckpt2");
  CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), Error);
}

}  // TEST_SUITE

}  // namespace
}  // namespace mtaffect
