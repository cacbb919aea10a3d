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

// Small fully-connected networks with hand-written backpropagation, plus the
// Adam and sharpness-aware (SAM) optimizers.
//
// Parameters of a HeadModel live in one flat vector. Layer k contributes its
// weight matrix (out_dim x in_dim, row-major) followed by its bias vector,
// and layers are laid out in order. Gradients and optimizer moments share the
// same layout, which keeps the optimizers independent of the model shape.

#ifndef MTAFFECT_NET_H_
#define MTAFFECT_NET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtaffect/matrix.h"

namespace mtaffect {

enum class Activation { kLinear, kRelu, kTanh, kSigmoid, kSoftmax };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::kLinear;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

class HeadModel {
 public:
  HeadModel() = default;
  // Zero-initialized parameters. Throws if the specs do not chain.
  HeadModel(std::vector<LayerSpec> layers, std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t in_dim() const { return layers_.front().in_dim; }
  std::size_t out_dim() const { return layers_.back().out_dim; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  // Row-major out_dim x in_dim view of layer k's weights.
  std::span<double> weights(std::size_t k) {
    return {params_.data() + offsets_[k], layers_[k].out_dim * layers_[k].in_dim};
  }
  std::span<const double> weights(std::size_t k) const {
    return {params_.data() + offsets_[k], layers_[k].out_dim * layers_[k].in_dim};
  }
  std::span<double> bias(std::size_t k) {
    return {params_.data() + offsets_[k] + layers_[k].out_dim * layers_[k].in_dim,
            layers_[k].out_dim};
  }
  std::span<const double> bias(std::size_t k) const {
    return {params_.data() + offsets_[k] + layers_[k].out_dim * layers_[k].in_dim,
            layers_[k].out_dim};
  }
  // Offset of layer k's block inside params().
  std::size_t offset(std::size_t k) const { return offsets_[k]; }

  friend bool operator==(const HeadModel&, const HeadModel&) = default;

 private:
  std::vector<LayerSpec> layers_;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Checks the dimension chain and activation placement.
void validate_specs(std::span<const LayerSpec> specs);

// Glorot-uniform weights, U(-a, a) with a = sqrt(6 / (in_dim + out_dim)),
// drawn from Rng(seed) layer by layer in row-major order; zero biases.
HeadModel init_model(std::vector<LayerSpec> specs, std::uint64_t seed);

// Everything backward() needs: the input and each layer's pre-activation and
// output.
struct Activations {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> out;

  const Matrix& output() const { return out.empty() ? input : out.back(); }
};

Activations forward(const HeadModel& model, const Matrix& batch);

struct Gradients {
  std::vector<double> params;  // same layout as HeadModel::params()
  Matrix input;
};

enum class GradientAt {
  // grad is dL/d(final output); backpropagated through the final activation.
  kOutput,
  // grad is dL/d(final pre-activation), e.g. from a softmax-fused
  // cross-entropy or a logit-form sigmoid loss.
  kPreActivation,
};

Gradients backward(const HeadModel& model, const Activations& acts,
                   const Matrix& grad, GradientAt at = GradientAt::kOutput);

enum class OptimizerKind { kAdam, kAdamSam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct AdamHyperparams {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  // SAM neighborhood radius; ignored by plain Adam.
  double rho = 0.05;

  friend bool operator==(const AdamHyperparams&, const AdamHyperparams&) = default;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  AdamHyperparams hp;
  std::int64_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  static OptimizerState create(OptimizerKind kind, std::size_t num_params,
                               AdamHyperparams hp = {});
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// Bias-corrected Adam:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,  t <- t + 1
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_step(OptimizerState& state, std::span<double> params,
               std::span<const double> grads);

// Evaluates the loss at `params` and writes its gradient into `grad`.
using LossGradientFn =
    std::function<double(std::span<const double> params, std::span<double> grad)>;

// Two-pass SAM on top of Adam. With g the gradient at p and rho > 0:
//   p' = p + rho g / ||g||_2   (one global norm over all parameters)
//   adam_step with the gradient evaluated at p', applied to the original p.
// Falls back to a plain adam_step with g when rho == 0 or ||g|| < 1e-12.
// Returns the loss at the original point.
double sam_step(OptimizerState& state, std::span<double> params,
                const LossGradientFn& loss_gradient_fn);

inline double sam_step(OptimizerState& state, HeadModel& model,
                       const LossGradientFn& loss_gradient_fn) {
  return sam_step(state, model.params(), loss_gradient_fn);
}

// Checkpoint format (text, '\n' line endings):
//
//   line 1       JSON header {"format": "mtaffect-head", "version": 1,
//                "seed", "step_count", "num_params",
//                "layers": [{"in", "out", "activation"}, ...]}
//   per layer k  "layer k weights <out> <in>", then <out> lines of <in>
//                space-separated values, then "layer k bias <out>" and one
//                line of <out> values.
//
// Values use 17 significant digits, so a save/load round trip is lossless.
void save_checkpoint(const std::filesystem::path& path, const HeadModel& model,
                     std::int64_t step_count = 0);
std::string checkpoint_to_string(const HeadModel& model,
                                 std::int64_t step_count = 0);

struct Checkpoint {
  HeadModel model;
  std::int64_t step_count = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint checkpoint_from_string(std::string_view text);

}  // namespace mtaffect

#endif  // MTAFFECT_NET_H_
