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

#include "mtaffect/net.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "mtaffect/error.h"
#include "mtaffect/random.h"
#include "mtaffect/textio.h"

namespace mtaffect {
namespace {

using nlohmann::json;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void apply_activation(Activation a, const Matrix& pre, Matrix& out) {
  const std::size_t n = pre.rows(), d = pre.cols();
  out = Matrix(n, d);
  switch (a) {
    case Activation::kLinear:
      out = pre;
      return;
    case Activation::kRelu:
      for (std::size_t i = 0; i < n * d; ++i) {
        out.values()[i] = std::max(0.0, pre.values()[i]);
      }
      return;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n * d; ++i) {
        out.values()[i] = std::tanh(pre.values()[i]);
      }
      return;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n * d; ++i) {
        out.values()[i] = sigmoid(pre.values()[i]);
      }
      return;
    case Activation::kSoftmax:
      for (std::size_t r = 0; r < n; ++r) {
        auto z = pre.row(r);
        auto y = out.row(r);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          y[c] = std::exp(z[c] - zmax);
          sum += y[c];
        }
        for (std::size_t c = 0; c < d; ++c) y[c] /= sum;
      }
      return;
  }
}

// dL/dz from dL/dy for activation y = a(z).
Matrix activation_backward(Activation a, const Matrix& pre, const Matrix& out,
                           const Matrix& grad_out) {
  const std::size_t n = out.rows(), d = out.cols();
  Matrix g(n, d);
  switch (a) {
    case Activation::kLinear:
      return grad_out;
    case Activation::kRelu:
      for (std::size_t i = 0; i < n * d; ++i) {
        g.values()[i] = pre.values()[i] > 0.0 ? grad_out.values()[i] : 0.0;
      }
      return g;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n * d; ++i) {
        const double y = out.values()[i];
        g.values()[i] = grad_out.values()[i] * (1.0 - y * y);
      }
      return g;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n * d; ++i) {
        const double y = out.values()[i];
        g.values()[i] = grad_out.values()[i] * y * (1.0 - y);
      }
      return g;
    case Activation::kSoftmax:
      for (std::size_t r = 0; r < n; ++r) {
        auto y = out.row(r);
        auto go = grad_out.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += go[c] * y[c];
        auto gr = g.row(r);
        for (std::size_t c = 0; c < d; ++c) gr[c] = y[c] * (go[c] - dot);
      }
      return g;
  }
  return g;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear:
      return "linear";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kSoftmax:
      return "softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::kLinear, Activation::kRelu, Activation::kTanh,
                       Activation::kSigmoid, Activation::kSoftmax}) {
    if (name == activation_name(a)) return a;
  }
  throw RangeError("unknown activation '" + std::string(name) + "'");
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "adam_sam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "adam_sam" || name == "sam") return OptimizerKind::kAdamSam;
  throw RangeError("unknown optimizer '" + std::string(name) + "'");
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ShapeError("model needs at least one layer");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].in_dim < 1 || specs[k].out_dim < 1) {
      throw ShapeError("layer " + std::to_string(k) + ": dims must be >= 1");
    }
    if (specs[k].activation == Activation::kSoftmax && k + 1 != specs.size()) {
      throw ShapeError("layer " + std::to_string(k) +
                       ": softmax is only allowed on the final layer");
    }
    if (k > 0 && specs[k - 1].out_dim != specs[k].in_dim) {
      throw ShapeError("layer " + std::to_string(k - 1) + " out_dim " +
                       std::to_string(specs[k - 1].out_dim) + " != layer " +
                       std::to_string(k) + " in_dim " +
                       std::to_string(specs[k].in_dim));
    }
  }
}

HeadModel::HeadModel(std::vector<LayerSpec> layers, std::uint64_t seed)
    : layers_(std::move(layers)), seed_(seed) {
  validate_specs(layers_);
  std::size_t total = 0;
  for (const LayerSpec& l : layers_) {
    offsets_.push_back(total);
    total += l.out_dim * l.in_dim + l.out_dim;
  }
  params_.assign(total, 0.0);
}

HeadModel init_model(std::vector<LayerSpec> specs, std::uint64_t seed) {
  HeadModel model(std::move(specs), seed);
  Rng rng(seed);
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    const LayerSpec& l = model.layers()[k];
    const double a =
        std::sqrt(6.0 / static_cast<double>(l.in_dim + l.out_dim));
    for (double& w : model.weights(k)) w = rng.uniform(-a, a);
  }
  return model;
}

Activations forward(const HeadModel& model, const Matrix& batch) {
  if (batch.cols() != model.in_dim()) {
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " != model input " + std::to_string(model.in_dim()));
  }
  for (double v : batch.values()) {
    if (!std::isfinite(v)) throw RangeError("forward: non-finite input");
  }
  Activations acts;
  acts.input = batch;
  const std::size_t n = batch.rows();
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    const LayerSpec& l = model.layers()[k];
    const Matrix& x = k == 0 ? acts.input : acts.out.back();
    const auto w = model.weights(k);
    const auto b = model.bias(k);
    Matrix z(n, l.out_dim);
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = x.row(r);
      auto zr = z.row(r);
      for (std::size_t o = 0; o < l.out_dim; ++o) {
        const double* wo = w.data() + o * l.in_dim;
        double s = b[o];
        for (std::size_t i = 0; i < l.in_dim; ++i) s += wo[i] * xr[i];
        zr[o] = s;
      }
    }
    Matrix y;
    apply_activation(l.activation, z, y);
    acts.pre.push_back(std::move(z));
    acts.out.push_back(std::move(y));
  }
  return acts;
}

Gradients backward(const HeadModel& model, const Activations& acts,
                   const Matrix& grad, GradientAt at) {
  const std::size_t depth = model.layers().size();
  if (acts.out.size() != depth) {
    throw ShapeError("backward: activations do not match the model depth");
  }
  const Matrix& y = acts.output();
  if (grad.rows() != y.rows() || grad.cols() != y.cols()) {
    throw ShapeError("backward: gradient shape " + std::to_string(grad.rows()) +
                     "x" + std::to_string(grad.cols()) + " != output shape " +
                     std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  }
  Gradients g;
  g.params.assign(model.num_params(), 0.0);
  const std::size_t n = y.rows();

  Matrix dz = at == GradientAt::kPreActivation
                  ? grad
                  : activation_backward(model.layers()[depth - 1].activation,
                                        acts.pre[depth - 1], acts.out[depth - 1],
                                        grad);
  for (std::size_t k = depth; k-- > 0;) {
    const LayerSpec& l = model.layers()[k];
    const Matrix& x = k == 0 ? acts.input : acts.out[k - 1];
    double* gw = g.params.data() + model.offset(k);
    double* gb = gw + l.out_dim * l.in_dim;
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = x.row(r);
      const auto dr = dz.row(r);
      for (std::size_t o = 0; o < l.out_dim; ++o) {
        const double d = dr[o];
        gb[o] += d;
        if (d == 0.0) continue;
        double* gwo = gw + o * l.in_dim;
        for (std::size_t i = 0; i < l.in_dim; ++i) gwo[i] += d * xr[i];
      }
    }
    const auto w = model.weights(k);
    Matrix dx(n, l.in_dim);
    for (std::size_t r = 0; r < n; ++r) {
      const auto dr = dz.row(r);
      auto xr = dx.row(r);
      for (std::size_t o = 0; o < l.out_dim; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        const double* wo = w.data() + o * l.in_dim;
        for (std::size_t i = 0; i < l.in_dim; ++i) xr[i] += d * wo[i];
      }
    }
    if (k == 0) {
      g.input = std::move(dx);
    } else {
      dz = activation_backward(model.layers()[k - 1].activation, acts.pre[k - 1],
                               acts.out[k - 1], dx);
    }
  }
  return g;
}

OptimizerState OptimizerState::create(OptimizerKind kind, std::size_t num_params,
                                      AdamHyperparams hp) {
  if (hp.rho < 0.0) throw RangeError("SAM rho must be >= 0");
  OptimizerState s;
  s.kind = kind;
  s.hp = hp;
  s.first_moment.assign(num_params, 0.0);
  s.second_moment.assign(num_params, 0.0);
  return s;
}

void adam_step(OptimizerState& state, std::span<double> params,
               std::span<const double> grads) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ShapeError("adam_step: parameter/gradient/state sizes differ (" +
                     std::to_string(params.size()) + ", " +
                     std::to_string(grads.size()) + ", " +
                     std::to_string(state.first_moment.size()) + ")");
  }
  const AdamHyperparams& hp = state.hp;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(hp.beta1, t);
  const double correction2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

double sam_step(OptimizerState& state, std::span<double> params,
                const LossGradientFn& loss_gradient_fn) {
  if (state.hp.rho < 0.0) throw RangeError("SAM rho must be >= 0");
  std::vector<double> grad(params.size(), 0.0);
  const double loss = loss_gradient_fn(params, grad);
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (state.hp.rho == 0.0 || norm < 1e-12) {
    adam_step(state, params, grad);
    return loss;
  }
  const std::vector<double> original(params.begin(), params.end());
  const double scale = state.hp.rho / norm;
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += scale * grad[i];
  std::vector<double> sharp_grad(params.size(), 0.0);
  loss_gradient_fn(params, sharp_grad);
  std::copy(original.begin(), original.end(), params.begin());
  adam_step(state, params, sharp_grad);
  return loss;
}

std::string checkpoint_to_string(const HeadModel& model, std::int64_t step_count) {
  json header;
  header["format"] = "mtaffect-head";
  header["version"] = 1;
  header["seed"] = model.seed();
  header["step_count"] = step_count;
  header["num_params"] = model.num_params();
  json layers = json::array();
  for (const LayerSpec& l : model.layers()) {
    layers.push_back({{"in", l.in_dim},
                      {"out", l.out_dim},
                      {"activation", activation_name(l.activation)}});
  }
  header["layers"] = layers;

  std::string out = header.dump();
  out += '\n';
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    const LayerSpec& l = model.layers()[k];
    out += "layer " + std::to_string(k) + " weights " + std::to_string(l.out_dim) +
           " " + std::to_string(l.in_dim) + "\n";
    const auto w = model.weights(k);
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      for (std::size_t i = 0; i < l.in_dim; ++i) {
        if (i) out += ' ';
        out += format_double(w[o * l.in_dim + i]);
      }
      out += '\n';
    }
    out += "layer " + std::to_string(k) + " bias " + std::to_string(l.out_dim) +
           "\n";
    const auto b = model.bias(k);
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      if (o) out += ' ';
      out += format_double(b[o]);
    }
    out += '\n';
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const HeadModel& model,
                     std::int64_t step_count) {
  write_text_file(path, checkpoint_to_string(model, step_count));
}

Checkpoint checkpoint_from_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("checkpoint: empty file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }
  std::vector<LayerSpec> specs;
  Checkpoint ckpt;
  try {
    if (header.at("format").get<std::string>() != "mtaffect-head" ||
        header.at("version").get<int>() != 1) {
      throw FormatError("checkpoint: unsupported format or version");
    }
    for (const json& l : header.at("layers")) {
      specs.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                       parse_activation(l.at("activation").get<std::string>())});
    }
    ckpt.step_count = header.at("step_count").get<std::int64_t>();
    ckpt.model = HeadModel(specs, header.at("seed").get<std::uint64_t>());
    if (header.at("num_params").get<std::size_t>() != ckpt.model.num_params()) {
      throw FormatError("checkpoint: num_params does not match layers");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }

  auto read_values = [&](std::span<double> dst, std::size_t per_line,
                         const std::string& what) {
    std::size_t filled = 0;
    while (filled < dst.size()) {
      if (!std::getline(in, line)) throw FormatError("checkpoint: truncated " + what);
      std::size_t pos = 0, count = 0;
      while (pos <= line.size() && count < per_line) {
        std::size_t end = line.find(' ', pos);
        if (end == std::string::npos) end = line.size();
        const auto v = parse_double(std::string_view(line).substr(pos, end - pos));
        if (!v || !std::isfinite(*v)) {
          throw FormatError("checkpoint: bad value in " + what);
        }
        dst[filled++] = *v;
        ++count;
        pos = end + 1;
      }
      if (count != per_line || pos <= line.size()) {
        throw FormatError("checkpoint: wrong value count in " + what);
      }
    }
  };
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const std::string tag = "layer " + std::to_string(k);
    if (!std::getline(in, line) ||
        line != tag + " weights " + std::to_string(specs[k].out_dim) + " " +
                    std::to_string(specs[k].in_dim)) {
      throw FormatError("checkpoint: expected '" + tag + " weights' block");
    }
    read_values(ckpt.model.weights(k), specs[k].in_dim, tag + " weights");
    if (!std::getline(in, line) ||
        line != tag + " bias " + std::to_string(specs[k].out_dim)) {
      throw FormatError("checkpoint: expected '" + tag + " bias' block");
    }
    read_values(ckpt.model.bias(k), specs[k].out_dim, tag + " bias");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_string(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mtaffect
