// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/nn.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace crowdledger::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values) v = rng.uniform(-limit, limit);
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  require(values.size() == numel(shape), "value count does not match shape " + shape_string(shape));
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Embedding: return "Embedding";
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::MaxPool1D: return "MaxPool1D";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::LSTM: return "LSTM";
    case LayerKind::Tanh: return "Tanh";
    case LayerKind::Sigmoid: return "Sigmoid";
  }
  return "Unknown";
}

nlohmann::json to_json(const LayerSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  switch (spec.kind) {
    case LayerKind::Dense:
    case LayerKind::Embedding:
      j["in"] = spec.in;
      j["out"] = spec.out;
      break;
    case LayerKind::Conv1D:
      j["in"] = spec.in;
      j["out"] = spec.out;
      j["kernel"] = spec.kernel;
      break;
    case LayerKind::MaxPool1D:
      j["width"] = spec.width;
      break;
    case LayerKind::Dropout:
      j["rate"] = spec.rate;
      break;
    case LayerKind::LSTM:
      j["in"] = spec.in;
      j["out"] = spec.out;
      j["return_sequences"] = spec.return_sequences;
      break;
    case LayerKind::Tanh:
    case LayerKind::Sigmoid:
      break;
  }
  return j;
}

LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  LayerSpec s;
  const auto kind = j.at("kind").get<std::string>();
  bool found = false;
  for (auto k : {LayerKind::Dense, LayerKind::Embedding, LayerKind::Conv1D, LayerKind::MaxPool1D,
                 LayerKind::Dropout, LayerKind::LSTM, LayerKind::Tanh, LayerKind::Sigmoid}) {
    if (to_string(k) == kind) {
      s.kind = k;
      found = true;
    }
  }
  if (!found) throw Error(Errc::ParseError, "unknown layer kind '" + kind + "'");
  s.in = j.value("in", std::size_t{0});
  s.out = j.value("out", std::size_t{0});
  s.kernel = j.value("kernel", std::size_t{0});
  s.width = j.value("width", std::size_t{0});
  s.rate = j.value("rate", 0.0);
  s.return_sequences = j.value("return_sequences", false);
  return s;
}

// --- Dense -----------------------------------------------------------------

Dense::Dense(std::size_t in, std::size_t out)
    : weight(Tensor::parameter({out, in})), bias(Tensor::parameter({out})), in_(in), out_(out) {}

Shape Dense::output_shape(const Shape& input) const {
  require(numel(input) == in_, "Dense expects " + std::to_string(in_) + " inputs, got " +
                                   shape_string(input));
  return {out_};
}

Tensor Dense::forward(const Tensor& input, bool /*training*/) {
  output_shape(input.shape);
  Tensor y({out_});
  for (std::size_t o = 0; o < out_; ++o) {
    const double* w = &weight.values[o * in_];
    double acc = bias.values[o];
    for (std::size_t i = 0; i < in_; ++i) acc += w[i] * input.values[i];
    y.values[o] = acc;
  }
  cache_ = input;
  return y;
}

Tensor Dense::backward(const Tensor& upstream) {
  if (!cache_) throw Error(Errc::NoForwardCache, "Dense.backward before forward");
  require(upstream.size() == out_, "Dense upstream size");
  const Tensor& x = *cache_;
  Tensor dx(x.shape);
  for (std::size_t o = 0; o < out_; ++o) {
    const double g = upstream.values[o];
    bias.grad[o] += g;
    double* gw = &weight.grad[o * in_];
    const double* w = &weight.values[o * in_];
    for (std::size_t i = 0; i < in_; ++i) {
      gw[i] += g * x.values[i];
      dx.values[i] += g * w[i];
    }
  }
  return dx;
}

// --- Embedding ---------------------------------------------------------------

Embedding::Embedding(std::size_t vocab, std::size_t dim)
    : table(Tensor::parameter({vocab, dim})), vocab_(vocab), dim_(dim) {}

Shape Embedding::output_shape(const Shape& input) const {
  require(input.size() == 1, "Embedding expects a 1-D id tensor");
  return {input[0], dim_};
}

Tensor Embedding::forward(const Tensor& input, bool /*training*/) {
  const auto out_shape = output_shape(input.shape);
  std::vector<std::size_t> ids(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double v = input.values[i];
    if (!(v >= 0.0) || v >= static_cast<double>(vocab_))
      throw Error(Errc::IdOutOfRange, "embedding id " + std::to_string(v));
    ids[i] = static_cast<std::size_t>(v);
  }
  Tensor y(out_shape);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(&table.values[ids[i] * dim_], dim_, &y.values[i * dim_]);
  ids_ = std::move(ids);
  return y;
}

Tensor Embedding::backward(const Tensor& upstream) {
  if (!ids_) throw Error(Errc::NoForwardCache, "Embedding.backward before forward");
  const auto& ids = *ids_;
  require(upstream.size() == ids.size() * dim_, "Embedding upstream size");
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t d = 0; d < dim_; ++d) table.grad[ids[i] * dim_ + d] += upstream.values[i * dim_ + d];
  return Tensor({ids.size()});
}

// --- Conv1D ------------------------------------------------------------------

Conv1D::Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : weight(Tensor::parameter({out_channels, kernel, in_channels})),
      bias(Tensor::parameter({out_channels})),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel) {}

Shape Conv1D::output_shape(const Shape& input) const {
  require(input.size() == 2 && input[1] == in_,
          "Conv1D expects [T, " + std::to_string(in_) + "], got " + shape_string(input));
  require(input[0] >= kernel_, "Conv1D input shorter than kernel");
  return {input[0] - kernel_ + 1, out_};
}

Tensor Conv1D::forward(const Tensor& input, bool /*training*/) {
  const auto shape = output_shape(input.shape);
  const std::size_t t_out = shape[0];
  const std::size_t span = kernel_ * in_;
  Tensor y(shape);
  for (std::size_t t = 0; t < t_out; ++t) {
    // The kernel window over rows t..t+k-1 is contiguous in the input.
    const double* x = &input.values[t * in_];
    for (std::size_t o = 0; o < out_; ++o) {
      const double* w = &weight.values[o * span];
      double acc = bias.values[o];
      for (std::size_t j = 0; j < span; ++j) acc += w[j] * x[j];
      y.values[t * out_ + o] = acc;
    }
  }
  cache_ = input;
  return y;
}

Tensor Conv1D::backward(const Tensor& upstream) {
  if (!cache_) throw Error(Errc::NoForwardCache, "Conv1D.backward before forward");
  const Tensor& input = *cache_;
  const std::size_t t_out = input.shape[0] - kernel_ + 1;
  require(upstream.size() == t_out * out_, "Conv1D upstream size");
  const std::size_t span = kernel_ * in_;
  Tensor dx(input.shape);
  for (std::size_t t = 0; t < t_out; ++t) {
    const double* x = &input.values[t * in_];
    double* gx = &dx.values[t * in_];
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = upstream.values[t * out_ + o];
      if (g == 0.0) continue;
      bias.grad[o] += g;
      double* gw = &weight.grad[o * span];
      const double* w = &weight.values[o * span];
      for (std::size_t j = 0; j < span; ++j) {
        gw[j] += g * x[j];
        gx[j] += g * w[j];
      }
    }
  }
  return dx;
}

// --- MaxPool1D ---------------------------------------------------------------

Shape MaxPool1D::output_shape(const Shape& input) const {
  require(width_ >= 1, "MaxPool1D width must be positive");
  require(input.size() == 2 && input[0] >= width_, "MaxPool1D expects [T >= width, C]");
  return {input[0] / width_, input[1]};
}

Tensor MaxPool1D::forward(const Tensor& input, bool /*training*/) {
  const auto shape = output_shape(input.shape);
  const std::size_t channels = shape[1];
  Tensor y(shape);
  argmax_.assign(y.size(), 0);
  for (std::size_t p = 0; p < shape[0]; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::size_t best = p * width_ * channels + c;
      for (std::size_t j = 1; j < width_; ++j) {
        const std::size_t idx = (p * width_ + j) * channels + c;
        if (input.values[idx] > input.values[best]) best = idx;
      }
      y.values[p * channels + c] = input.values[best];
      argmax_[p * channels + c] = best;
    }
  }
  input_shape_ = input.shape;
  cached_ = true;
  return y;
}

Tensor MaxPool1D::backward(const Tensor& upstream) {
  if (!cached_) throw Error(Errc::NoForwardCache, "MaxPool1D.backward before forward");
  require(upstream.size() == argmax_.size(), "MaxPool1D upstream size");
  Tensor dx(input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx.values[argmax_[i]] += upstream.values[i];
  return dx;
}

// --- Dropout -----------------------------------------------------------------

Tensor Dropout::forward(const Tensor& input, bool training) {
  cached_ = true;
  if (!training || rate_ <= 0.0) {
    mask_.clear();
    return input;
  }
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_.resize(input.size());
  Tensor y = input;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = rng_.uniform() < rate_ ? 0.0 : keep_scale;
    y.values[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& upstream) {
  if (!cached_) throw Error(Errc::NoForwardCache, "Dropout.backward before forward");
  if (mask_.empty()) return upstream;
  Tensor dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] *= mask_[i];
  return dx;
}

// --- Activations -------------------------------------------------------------

Tensor Tanh::forward(const Tensor& input, bool /*training*/) {
  Tensor y = input;
  for (double& v : y.values) v = std::tanh(v);
  out_ = y;
  return y;
}

Tensor Tanh::backward(const Tensor& upstream) {
  if (!out_) throw Error(Errc::NoForwardCache, "Tanh.backward before forward");
  require(upstream.size() == out_->size(), "Tanh upstream size");
  Tensor dx(out_->shape);
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double y = out_->values[i];
    dx.values[i] = upstream.values[i] * (1.0 - y * y);
  }
  return dx;
}

Tensor Sigmoid::forward(const Tensor& input, bool /*training*/) {
  Tensor y = input;
  for (double& v : y.values) v = sigmoid(v);
  out_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& upstream) {
  if (!out_) throw Error(Errc::NoForwardCache, "Sigmoid.backward before forward");
  require(upstream.size() == out_->size(), "Sigmoid upstream size");
  Tensor dx(out_->shape);
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double y = out_->values[i];
    dx.values[i] = upstream.values[i] * y * (1.0 - y);
  }
  return dx;
}

// --- LSTM --------------------------------------------------------------------

LSTM::LSTM(std::size_t in, std::size_t hidden, bool return_sequences)
    : w_input(Tensor::parameter({4 * hidden, in})),
      w_recurrent(Tensor::parameter({4 * hidden, hidden})),
      bias(Tensor::parameter({4 * hidden})),
      in_(in),
      hidden_(hidden),
      return_sequences_(return_sequences) {}

Shape LSTM::output_shape(const Shape& input) const {
  require(input.size() == 2 && input[1] == in_ && input[0] >= 1,
          "LSTM expects [T, " + std::to_string(in_) + "], got " + shape_string(input));
  if (return_sequences_) return {input[0], hidden_};
  return {hidden_};
}

Tensor LSTM::forward(const Tensor& input, bool /*training*/) {
  const auto shape = output_shape(input.shape);
  const std::size_t steps = input.shape[0];
  const std::size_t h4 = 4 * hidden_;
  gates_.assign(steps * h4, 0.0);
  cells_.assign(steps * hidden_, 0.0);
  hiddens_.assign(steps * hidden_, 0.0);
  std::vector<double> z(h4);

  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = &input.values[t * in_];
    const double* h_prev = t ? &hiddens_[(t - 1) * hidden_] : nullptr;
    const double* c_prev = t ? &cells_[(t - 1) * hidden_] : nullptr;
    for (std::size_t r = 0; r < h4; ++r) {
      double acc = bias.values[r];
      const double* wi = &w_input.values[r * in_];
      for (std::size_t i = 0; i < in_; ++i) acc += wi[i] * x[i];
      if (h_prev) {
        const double* wr = &w_recurrent.values[r * hidden_];
        for (std::size_t k = 0; k < hidden_; ++k) acc += wr[k] * h_prev[k];
      }
      z[r] = acc;
    }
    double* gate = &gates_[t * h4];
    double* c = &cells_[t * hidden_];
    double* h = &hiddens_[t * hidden_];
    for (std::size_t k = 0; k < hidden_; ++k) {
      const double ig = sigmoid(z[k]);
      const double fg = sigmoid(z[hidden_ + k]);
      const double gg = std::tanh(z[2 * hidden_ + k]);
      const double og = sigmoid(z[3 * hidden_ + k]);
      gate[k] = ig;
      gate[hidden_ + k] = fg;
      gate[2 * hidden_ + k] = gg;
      gate[3 * hidden_ + k] = og;
      c[k] = (c_prev ? fg * c_prev[k] : 0.0) + ig * gg;
      h[k] = og * std::tanh(c[k]);
    }
  }
  x_ = input;

  if (return_sequences_) return Tensor(shape, hiddens_);
  Tensor last(shape);
  std::copy_n(&hiddens_[(steps - 1) * hidden_], hidden_, last.values.begin());
  return last;
}

Tensor LSTM::backward(const Tensor& upstream) {
  if (!x_) throw Error(Errc::NoForwardCache, "LSTM.backward before forward");
  const Tensor& input = *x_;
  const std::size_t steps = input.shape[0];
  const std::size_t h4 = 4 * hidden_;
  require(upstream.size() == (return_sequences_ ? steps * hidden_ : hidden_),
          "LSTM upstream size");

  Tensor dx(input.shape);
  std::vector<double> dh_next(hidden_, 0.0), dc_next(hidden_, 0.0), dh(hidden_), dz(h4);
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t k = 0; k < hidden_; ++k) {
      double up = 0.0;
      if (return_sequences_) up = upstream.values[t * hidden_ + k];
      else if (t == steps - 1) up = upstream.values[k];
      dh[k] = up + dh_next[k];
    }
    const double* gate = &gates_[t * h4];
    const double* c = &cells_[t * hidden_];
    const double* c_prev = t ? &cells_[(t - 1) * hidden_] : nullptr;
    for (std::size_t k = 0; k < hidden_; ++k) {
      const double ig = gate[k], fg = gate[hidden_ + k], gg = gate[2 * hidden_ + k],
                   og = gate[3 * hidden_ + k];
      const double tc = std::tanh(c[k]);
      const double d_o = dh[k] * tc;
      const double dc = dh[k] * og * (1.0 - tc * tc) + dc_next[k];
      const double d_i = dc * gg;
      const double d_g = dc * ig;
      const double d_f = c_prev ? dc * c_prev[k] : 0.0;
      dc_next[k] = dc * fg;
      dz[k] = d_i * ig * (1.0 - ig);
      dz[hidden_ + k] = d_f * fg * (1.0 - fg);
      dz[2 * hidden_ + k] = d_g * (1.0 - gg * gg);
      dz[3 * hidden_ + k] = d_o * og * (1.0 - og);
    }
    const double* x = &input.values[t * in_];
    double* gx = &dx.values[t * in_];
    const double* h_prev = t ? &hiddens_[(t - 1) * hidden_] : nullptr;
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < h4; ++r) {
      const double g = dz[r];
      if (g == 0.0) continue;
      bias.grad[r] += g;
      double* gwi = &w_input.grad[r * in_];
      const double* wi = &w_input.values[r * in_];
      for (std::size_t i = 0; i < in_; ++i) {
        gwi[i] += g * x[i];
        gx[i] += g * wi[i];
      }
      if (h_prev) {
        double* gwr = &w_recurrent.grad[r * hidden_];
        const double* wr = &w_recurrent.values[r * hidden_];
        for (std::size_t k = 0; k < hidden_; ++k) {
          gwr[k] += g * h_prev[k];
          dh_next[k] += g * wr[k];
        }
      }
    }
  }
  return dx;
}

// --- Construction ------------------------------------------------------------

void initialize(Layer& layer, Rng& rng) {
  if (auto* d = dynamic_cast<Dense*>(&layer)) {
    const auto s = d->spec();
    glorot(d->weight, s.in, s.out, rng);
    d->bias.values.assign(d->bias.size(), 0.0);
  } else if (auto* e = dynamic_cast<Embedding*>(&layer)) {
    for (double& v : e->table.values) v = rng.uniform(-0.05, 0.05);
  } else if (auto* c = dynamic_cast<Conv1D*>(&layer)) {
    const auto s = c->spec();
    glorot(c->weight, s.kernel * s.in, s.kernel * s.out, rng);
    c->bias.values.assign(c->bias.size(), 0.0);
  } else if (auto* l = dynamic_cast<LSTM*>(&layer)) {
    const auto s = l->spec();
    glorot(l->w_input, s.in, 4 * s.out, rng);
    glorot(l->w_recurrent, s.out, 4 * s.out, rng);
    l->bias.values.assign(l->bias.size(), 0.0);
    for (std::size_t k = 0; k < s.out; ++k) l->bias.values[s.out + k] = 1.0;
  }
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, std::uint64_t dropout_seed) {
  switch (spec.kind) {
    case LayerKind::Dense: return std::make_unique<Dense>(spec.in, spec.out);
    case LayerKind::Embedding: return std::make_unique<Embedding>(spec.in, spec.out);
    case LayerKind::Conv1D: return std::make_unique<Conv1D>(spec.in, spec.out, spec.kernel);
    case LayerKind::MaxPool1D: return std::make_unique<MaxPool1D>(spec.width);
    case LayerKind::Dropout: return std::make_unique<Dropout>(spec.rate, dropout_seed);
    case LayerKind::LSTM: return std::make_unique<LSTM>(spec.in, spec.out, spec.return_sequences);
    case LayerKind::Tanh: return std::make_unique<Tanh>();
    case LayerKind::Sigmoid: return std::make_unique<Sigmoid>();
  }
  throw Error(Errc::ParseError, "unknown layer kind");
}

// --- Sequential --------------------------------------------------------------

Tensor Sequential::forward(const Tensor& input, bool training) {
  Tensor x = input;
  for (auto& layer : layers_) x = layer->forward(x, training);
  return x;
}

Tensor Sequential::backward(const Tensor& upstream) {
  Tensor g = upstream;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Tensor*> Sequential::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_)
    for (auto* p : layer->parameters()) out.push_back(p);
  return out;
}

std::vector<LayerSpec> Sequential::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& layer : layers_) out.push_back(layer->spec());
  return out;
}

Shape Sequential::output_shape(Shape input) const {
  for (const auto& layer : layers_) input = layer->output_shape(input);
  return input;
}

// --- Loss and optimiser ------------------------------------------------------

LossValue mse(const Tensor& prediction, const Tensor& target) {
  require(prediction.size() == target.size(), "mse: prediction/target size mismatch");
  LossValue out{0.0, Tensor(prediction.shape)};
  const double n = static_cast<double>(prediction.size());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double diff = prediction.values[i] - target.values[i];
    out.loss += diff * diff / n;
    out.grad.values[i] = 2.0 * diff / n;
  }
  return out;
}

std::size_t parameter_count(std::span<Tensor* const> parameters) {
  std::size_t n = 0;
  for (const auto* p : parameters) n += p->size();
  return n;
}

void zero_grads(std::span<Tensor* const> parameters) {
  for (auto* p : parameters) p->zero_grad();
}

void Adam::step(std::span<Tensor* const> parameters, double grad_scale) {
  if (m_.size() != parameters.size()) {
    m_.assign(parameters.size(), {});
    v_.assign(parameters.size(), {});
    for (std::size_t i = 0; i < parameters.size(); ++i) {
      m_[i].assign(parameters[i]->size(), 0.0);
      v_[i].assign(parameters[i]->size(), 0.0);
    }
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double inv_scale = 1.0 / grad_scale;
  for (std::size_t p = 0; p < parameters.size(); ++p) {
    Tensor& param = *parameters[p];
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = param.grad[i] * inv_scale;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      param.values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    param.zero_grad();
  }
}

// --- Checkpoints -------------------------------------------------------------

namespace {
constexpr char kBlobMagic[8] = {'C', 'L', 'N', 'N', 'W', '0', '0', '1'};

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* ext) {
  return std::filesystem::path(prefix.string() + ext);
}
}  // namespace

void save_checkpoint(const std::filesystem::path& prefix, nlohmann::json manifest,
                     std::span<Tensor* const> parameters) {
  const auto blob_path = with_suffix(prefix, ".bin");
  manifest["format"] = "crowdledger-model";
  manifest["version"] = kCheckpointVersion;
  manifest["parameter_count"] = parameter_count(parameters);
  manifest["blob"] = blob_path.filename().string();

  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob) throw Error(Errc::UnreadableFile, "cannot write " + blob_path.string());
  blob.write(kBlobMagic, sizeof kBlobMagic);
  std::uint64_t count = parameter_count(parameters);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(count >> (8 * i));
  blob.write(reinterpret_cast<const char*>(buf), 8);
  for (const auto* p : parameters) {
    for (double v : p->values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
      blob.write(reinterpret_cast<const char*>(buf), 8);
    }
  }
  if (!blob) throw Error(Errc::UnreadableFile, "short write to " + blob_path.string());

  std::ofstream json(with_suffix(prefix, ".json"), std::ios::trunc);
  if (!json) throw Error(Errc::UnreadableFile, "cannot write manifest for " + prefix.string());
  json << manifest.dump(2) << '\n';
}

nlohmann::json load_manifest(const std::filesystem::path& prefix) {
  const auto path = with_suffix(prefix, ".json");
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingArtifacts, "missing checkpoint manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
  if (j.value("format", "") != "crowdledger-model" || j.value("version", 0) != kCheckpointVersion)
    throw Error(Errc::ParseError, "unsupported checkpoint format in " + path.string());
  return j;
}

void load_parameters(const std::filesystem::path& prefix, std::span<Tensor* const> parameters) {
  const auto path = with_suffix(prefix, ".bin");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingArtifacts, "missing checkpoint blob " + path.string());
  char magic[8];
  unsigned char buf[8];
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in || std::memcmp(magic, kBlobMagic, 8) != 0)
    throw Error(Errc::ParseError, "bad checkpoint blob header in " + path.string());
  std::uint64_t count = 0;
  for (int i = 0; i < 8; ++i) count |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  if (count != parameter_count(parameters))
    throw Error(Errc::ShapeMismatch, "checkpoint holds " + std::to_string(count) +
                                         " parameters, model expects " +
                                         std::to_string(parameter_count(parameters)));
  for (auto* p : parameters) {
    for (double& v : p->values) {
      in.read(reinterpret_cast<char*>(buf), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
      std::memcpy(&v, &bits, sizeof v);
    }
  }
  if (!in) throw Error(Errc::ParseError, "truncated checkpoint blob " + path.string());
}

}  // namespace crowdledger::nn
