// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <algorithm>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdledger/error.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense double-precision array. `grad` is allocated only for parameters.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), values(numel(shape), fill) {}
  Tensor(Shape s, std::vector<double> v);

  static Tensor parameter(Shape s) {
    Tensor t(std::move(s));
    t.grad.assign(t.values.size(), 0.0);
    return t;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

enum class LayerKind { Dense, Embedding, Conv1D, MaxPool1D, Dropout, LSTM, Tanh, Sigmoid };

std::string_view to_string(LayerKind kind);

/// Per-kind dimensions. Dense: in/out. Embedding: in = vocabulary, out = dim.
/// Conv1D: in/out channels + kernel. MaxPool1D: width. Dropout: rate.
/// LSTM: in/out (= hidden) + return_sequences.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t width = 0;
  double rate = 0.0;
  bool return_sequences = false;
};

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerSpec spec() const = 0;
  /// Shape produced for a given input shape; throws ShapeMismatch.
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& input, bool training) = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor backward(const Tensor& upstream) = 0;
  virtual std::vector<Tensor*> parameters() { return {}; }
};

/// y = W·flatten(x) + b. Accepts any input whose element count equals `in`.
class Dense : public Layer {
 public:
  Dense(std::size_t in, std::size_t out);
  LayerSpec spec() const override { return {LayerKind::Dense, in_, out_}; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<Tensor*> parameters() override { return {&weight, &bias}; }

  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

 protected:
  std::size_t in_, out_;
  std::optional<Tensor> cache_;
};

/// Row lookup: input holds integral ids, shape [n]; output [n, dim].
class Embedding : public Layer {
 public:
  Embedding(std::size_t vocab, std::size_t dim);
  LayerSpec spec() const override { return {LayerKind::Embedding, vocab_, dim_}; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  /// Returns a zero tensor shaped like the ids (ids are not differentiable).
  Tensor backward(const Tensor& upstream) override;
  std::vector<Tensor*> parameters() override { return {&table}; }

  Tensor table;  // [vocab, dim]

 private:
  std::size_t vocab_, dim_;
  std::optional<std::vector<std::size_t>> ids_;
};

/// Valid 1-D convolution over time: [T, in] -> [T - k + 1, out].
class Conv1D : public Layer {
 public:
  Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  LayerSpec spec() const override { return {LayerKind::Conv1D, in_, out_, kernel_}; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<Tensor*> parameters() override { return {&weight, &bias}; }

  Tensor weight;  // [out, kernel, in]
  Tensor bias;    // [out]

 private:
  std::size_t in_, out_, kernel_;
  std::optional<Tensor> cache_;
};

/// Non-overlapping max over `width` time steps: [T, C] -> [T / width, C].
/// Gradient goes to the first maximal position.
class MaxPool1D : public Layer {
 public:
  explicit MaxPool1D(std::size_t width) : width_(width) {}
  LayerSpec spec() const override {
    LayerSpec s{LayerKind::MaxPool1D};
    s.width = width_;
    return s;
  }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  std::size_t width_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
  bool cached_ = false;
};

/// Inverted dropout; identity when not training.
class Dropout : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {}
  LayerSpec spec() const override {
    LayerSpec s{LayerKind::Dropout};
    s.rate = rate_;
    return s;
  }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  double rate_;
  Rng rng_;
  std::vector<double> mask_;  // empty when the last forward was in eval mode
  bool cached_ = false;
};

class Tanh : public Layer {
 public:
  LayerSpec spec() const override { return {LayerKind::Tanh}; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  std::optional<Tensor> out_;
};

class Sigmoid : public Layer {
 public:
  LayerSpec spec() const override { return {LayerKind::Sigmoid}; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  std::optional<Tensor> out_;
};

/// Standard LSTM (gates i, f, g, o; sigmoid/tanh), zero initial state.
/// [T, in] -> [T, hidden] with return_sequences, else the last hidden [hidden].
class LSTM : public Layer {
 public:
  LSTM(std::size_t in, std::size_t hidden, bool return_sequences);
  LayerSpec spec() const override {
    return {LayerKind::LSTM, in_, hidden_, 0, 0, 0.0, return_sequences_};
  }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<Tensor*> parameters() override { return {&w_input, &w_recurrent, &bias}; }

  Tensor w_input;      // [4H, in]
  Tensor w_recurrent;  // [4H, H]
  Tensor bias;         // [4H]

 private:
  std::size_t in_, hidden_;
  bool return_sequences_;
  // Cached per-step activations, each [T, ...].
  std::optional<Tensor> x_;
  std::vector<double> gates_;  // [T, 4H] post-activation
  std::vector<double> cells_;  // [T, H]
  std::vector<double> hiddens_;  // [T, H]
};

/// Glorot-uniform initialisation for weight tensors, zero biases and a forget
/// gate bias of 1 for LSTMs.
void initialize(Layer& layer, Rng& rng);

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, std::uint64_t dropout_seed);

class Sequential {
 public:
  Sequential() = default;
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& input, bool training);
  Tensor backward(const Tensor& upstream);
  std::vector<Tensor*> parameters();
  std::vector<LayerSpec> specs() const;
  /// Walks the declared shapes; throws ShapeMismatch on the first bad link.
  Shape output_shape(Shape input) const;

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossValue {
  double loss = 0.0;
  Tensor grad;
};

/// Mean squared error over all elements.
LossValue mse(const Tensor& prediction, const Tensor& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One bias-corrected update using the accumulated gradients divided by
  /// `grad_scale`; gradients are zeroed afterwards.
  void step(std::span<Tensor* const> parameters, double grad_scale = 1.0);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

std::size_t parameter_count(std::span<Tensor* const> parameters);
void zero_grads(std::span<Tensor* const> parameters);

/// Maximum over all parameter entries of |analytic − numeric| /
/// max(|analytic|, |numeric|, 1e-8), numeric by the fourth-order five-point
/// central difference. Each entry is scored at steps 10·`eps`, `eps` and
/// `eps`/10 and keeps the smallest error: long steps can straddle a max-pool
/// kink, short steps lose digits to rounding on tiny gradients. The model is evaluated in eval mode (dropout off) and must
/// expose forward(Tensor, bool), backward(Tensor) and parameters().
template <class Model>
double gradient_check(Model& model, const Tensor& input, const Tensor& target, double eps = 1e-4) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw Error(Errc::ShapeMismatch, "eps must lie in [1e-7, 1e-3]");
  auto params = model.parameters();
  zero_grads(params);
  const auto base = mse(model.forward(input, false), target);
  if (!std::isfinite(base.loss)) throw Error(Errc::NonFiniteLoss, "loss is not finite");
  model.backward(base.grad);

  double worst = 0.0;
  for (Tensor* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->values[i];
      auto loss_at = [&](double offset) {
        p->values[i] = saved + offset;
        const double loss = mse(model.forward(input, false), target).loss;
        if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "perturbed loss is not finite");
        return loss;
      };
      auto numeric_at = [&](double h) {
        const double near = loss_at(h) - loss_at(-h);
        const double far = loss_at(2.0 * h) - loss_at(-2.0 * h);
        return (8.0 * near - far) / (12.0 * h);
      };
      const double analytic = p->grad[i];
      double error = std::numeric_limits<double>::infinity();
      for (const double h : {10.0 * eps, eps, eps / 10.0}) {
        const double numeric = numeric_at(h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        error = std::min(error, std::abs(analytic - numeric) / denom);
      }
      p->values[i] = saved;
      worst = std::max(worst, error);
    }
  }
  zero_grads(params);
  return worst;
}

/// Checkpoint = `<prefix>.json` manifest + `<prefix>.bin` blob ("CLNNW001",
/// u64 count, then count little-endian doubles in parameter order).
void save_checkpoint(const std::filesystem::path& prefix, nlohmann::json manifest,
                     std::span<Tensor* const> parameters);
nlohmann::json load_manifest(const std::filesystem::path& prefix);
void load_parameters(const std::filesystem::path& prefix, std::span<Tensor* const> parameters);

inline constexpr int kCheckpointVersion = 1;

}  // namespace crowdledger::nn
