#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uhd/dense.hpp"
#include "uhd/error.hpp"
#include "uhd/rng.hpp"
#include "uhd/tokenizer.hpp"

namespace uhd {

enum class Activation : std::uint8_t { identity = 0, tanh = 1, gelu = 2, relu = 3 };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

namespace detail {

template <typename Scalar>
Scalar activate(Activation a, Scalar x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::gelu: return Scalar(0.5) * x * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
    case Activation::relu: return x > Scalar(0) ? x : Scalar(0);
  }
  return x;
}

/// Derivative expressed through the pre-activation `x` and output `y`.
template <typename Scalar>
Scalar activate_grad(Activation a, Scalar x, Scalar y) {
  switch (a) {
    case Activation::identity: return Scalar(1);
    case Activation::tanh: return Scalar(1) - y * y;
    case Activation::gelu: {
      const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
      const Scalar pdf = std::exp(Scalar(-0.5) * x * x) * Scalar(0.3989422804014327);
      return cdf + x * pdf;
    }
    case Activation::relu: return x > Scalar(0) ? Scalar(1) : Scalar(0);
  }
  return Scalar(1);
}

/// Centered sliding-window mean over token positions, clipped at the ends.
template <typename Scalar>
RowMatrix<Scalar> window_mean(const RowMatrix<Scalar>& y, std::uint32_t window) {
  const Eigen::Index t = y.rows();
  const Eigen::Index r = window / 2;
  RowMatrix<Scalar> out(t, y.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - r);
    const Eigen::Index hi = std::min<Eigen::Index>(t - 1, i + r);
    out.row(i) = y.middleRows(lo, hi - lo + 1).colwise().sum() / Scalar(hi - lo + 1);
  }
  return out;
}

/// Transpose of window_mean applied to a gradient.
template <typename Scalar>
RowMatrix<Scalar> window_mean_transpose(const RowMatrix<Scalar>& g, std::uint32_t window) {
  const Eigen::Index t = g.rows();
  const Eigen::Index r = window / 2;
  RowMatrix<Scalar> out = RowMatrix<Scalar>::Zero(t, g.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - r);
    const Eigen::Index hi = std::min<Eigen::Index>(t - 1, i + r);
    const Scalar share = Scalar(1) / Scalar(hi - lo + 1);
    for (Eigen::Index p = lo; p <= hi; ++p) out.row(p) += share * g.row(i);
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
struct MixingLayer {
  Matrix<Scalar> weight;  // h x h
  Vector<Scalar> bias;    // h
  std::uint32_t window = 3;
};

/// Activations kept from a forward pass for the backward pass. Index 0 of
/// `outputs` is the embedding lookup; index j the output of layer j.
template <typename Scalar>
struct EncoderTrace {
  std::vector<TokenId> tokens;
  std::vector<RowMatrix<Scalar>> mixed;       // per layer, window-mean input
  std::vector<RowMatrix<Scalar>> preactive;   // per layer
  std::vector<RowMatrix<Scalar>> outputs;     // V + 1 entries
};

template <typename Scalar>
struct EncoderGradients {
  RowMatrix<Scalar> embeddings;
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  void set_zero() {
    embeddings.setZero();
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }
};

/// Small trainable contextual encoder: an embedding table followed by V
/// layers of window-mean mixing, an h x h projection and a nonlinearity.
template <typename Scalar = float>
class ToyEncoder {
 public:
  ToyEncoder() = default;

  ToyEncoder(RowMatrix<Scalar> embeddings, std::vector<MixingLayer<Scalar>> layers, Activation activation)
      : embeddings_(std::move(embeddings)), layers_(std::move(layers)), activation_(activation) {
    const auto h = embeddings_.cols();
    if (embeddings_.rows() < 1 || h < 1) throw InvalidArgument("toy encoder needs a nonempty embedding table");
    for (const auto& l : layers_) {
      if (l.weight.rows() != h || l.weight.cols() != h || l.bias.size() != h) {
        throw InvalidArgument("toy encoder mixing layer shape mismatch");
      }
      if (l.window % 2 == 0) throw InvalidArgument("toy encoder window width must be odd");
    }
  }

  /// Embeddings uniform in [-1, 1]; mixing weights the identity plus
  /// uniform noise of scale `noise / sqrt(h)`; zero biases.
  static ToyEncoder random(std::size_t vocab_size, std::size_t hidden, std::size_t depth, std::uint32_t window,
                           Activation activation, Rng& rng, double noise = 0.5) {
    RowMatrix<Scalar> emb(vocab_size, hidden);
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
    const double scale = noise / std::sqrt(static_cast<double>(hidden));
    std::vector<MixingLayer<Scalar>> layers(depth);
    for (auto& l : layers) {
      l.weight = Matrix<Scalar>::Identity(hidden, hidden);
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) {
        l.weight.data()[i] += static_cast<Scalar>(rng.uniform(-scale, scale));
      }
      l.bias = Vector<Scalar>::Zero(hidden);
      l.window = window;
    }
    return ToyEncoder(std::move(emb), std::move(layers), activation);
  }

  std::size_t vocab_size() const { return static_cast<std::size_t>(embeddings_.rows()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(embeddings_.cols()); }
  std::size_t depth() const { return layers_.size(); }
  Activation activation() const { return activation_; }
  const RowMatrix<Scalar>& embeddings() const { return embeddings_; }
  RowMatrix<Scalar>& embeddings() { return embeddings_; }
  const std::vector<MixingLayer<Scalar>>& layers() const { return layers_; }
  std::vector<MixingLayer<Scalar>>& layers() { return layers_; }

  EncoderTrace<Scalar> forward(std::span<const TokenId> tokens) const {
    if (tokens.empty()) throw InvalidArgument("encode_layers: empty token sequence");
    EncoderTrace<Scalar> tr;
    tr.tokens.assign(tokens.begin(), tokens.end());
    RowMatrix<Scalar> y(static_cast<Eigen::Index>(tokens.size()), embeddings_.cols());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] >= vocab_size()) {
        throw InvalidArgument("token id " + std::to_string(tokens[i]) + " outside vocabulary of " +
                              std::to_string(vocab_size()));
      }
      y.row(static_cast<Eigen::Index>(i)) = embeddings_.row(tokens[i]);
    }
    tr.outputs.push_back(y);
    for (const auto& layer : layers_) {
      RowMatrix<Scalar> mixed = detail::window_mean(tr.outputs.back(), layer.window);
      RowMatrix<Scalar> pre = mixed * layer.weight;
      pre.rowwise() += layer.bias.transpose();
      RowMatrix<Scalar> out = pre.unaryExpr([a = activation_](Scalar x) { return detail::activate(a, x); });
      tr.mixed.push_back(std::move(mixed));
      tr.preactive.push_back(std::move(pre));
      tr.outputs.push_back(std::move(out));
    }
    return tr;
  }

  /// Outputs of layers 1..V as DenseTokenMatrix values.
  std::vector<DenseTokenMatrix<Scalar>> encode_layers(std::span<const TokenId> tokens) const {
    auto tr = forward(tokens);
    std::vector<DenseTokenMatrix<Scalar>> out;
    out.reserve(layers_.size());
    for (std::size_t j = 1; j < tr.outputs.size(); ++j) {
      out.push_back({static_cast<std::uint32_t>(j), std::move(tr.outputs[j])});
    }
    return out;
  }

  EncoderGradients<Scalar> zero_gradients() const {
    EncoderGradients<Scalar> g;
    g.embeddings = RowMatrix<Scalar>::Zero(embeddings_.rows(), embeddings_.cols());
    for (const auto& l : layers_) {
      g.weights.push_back(Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()));
      g.biases.push_back(Vector<Scalar>::Zero(l.bias.size()));
    }
    return g;
  }

  /// Accumulates parameter gradients given dLoss/dOutput for every layer
  /// output 1..V (`output_grads[j-1]`; empty matrices mean zero).
  void backward(const EncoderTrace<Scalar>& tr, std::vector<RowMatrix<Scalar>> output_grads,
                EncoderGradients<Scalar>& grads) const {
    if (tr.outputs.size() != layers_.size() + 1) throw UsageError("encoder backward without matching forward");
    const Eigen::Index t = tr.outputs.front().rows();
    const Eigen::Index h = embeddings_.cols();
    output_grads.resize(layers_.size());
    RowMatrix<Scalar> carry = RowMatrix<Scalar>::Zero(t, h);
    for (std::size_t j = layers_.size(); j-- > 0;) {
      RowMatrix<Scalar> g = carry;
      if (output_grads[j].size() != 0) g += output_grads[j];
      const auto& pre = tr.preactive[j];
      const auto& out = tr.outputs[j + 1];
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        g.data()[i] *= detail::activate_grad(activation_, pre.data()[i], out.data()[i]);
      }
      grads.weights[j].noalias() += tr.mixed[j].transpose() * g;
      grads.biases[j].noalias() += g.colwise().sum().transpose();
      RowMatrix<Scalar> g_mixed = g * layers_[j].weight.transpose();
      carry = detail::window_mean_transpose(g_mixed, layers_[j].window);
    }
    for (Eigen::Index i = 0; i < t; ++i) grads.embeddings.row(tr.tokens[static_cast<std::size_t>(i)]) += carry.row(i);
  }

  template <typename Other>
  ToyEncoder<Other> cast() const {
    std::vector<MixingLayer<Other>> layers;
    for (const auto& l : layers_) layers.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>(), l.window});
    return ToyEncoder<Other>(embeddings_.template cast<Other>(), std::move(layers), activation_);
  }

 private:
  RowMatrix<Scalar> embeddings_;
  std::vector<MixingLayer<Scalar>> layers_;
  Activation activation_ = Activation::tanh;
};

}  // namespace uhd
