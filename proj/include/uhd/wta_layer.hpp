#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uhd/dense.hpp"
#include "uhd/error.hpp"
#include "uhd/rng.hpp"
#include "uhd/sparse_vector.hpp"

namespace uhd {

/// Winner-take-all projection: z = e (W .* M) + b, keep the top-k of z.
/// Masked weights are stored as exact zeros and stay zero under updates.
template <typename Scalar = float>
class WtaLayer {
 public:
  WtaLayer() = default;

  WtaLayer(Matrix<Scalar> weight, Vector<Scalar> bias, Matrix<Scalar> mask, std::size_t train_k, double sparsity)
      : weight_(std::move(weight)), bias_(std::move(bias)), mask_(std::move(mask)), train_k_(train_k),
        infer_k_(train_k), sparsity_(sparsity) {
    if (weight_.rows() < 1 || weight_.cols() < 1) throw InvalidArgument("WTA layer needs h >= 1 and n >= 1");
    if (bias_.size() != weight_.cols() || mask_.rows() != weight_.rows() || mask_.cols() != weight_.cols()) {
      throw InvalidArgument("WTA layer parameter shapes disagree");
    }
    if (train_k_ == 0 || train_k_ > output_size()) throw InvalidArgument("WTA k must be in [1, n]");
    if (!(sparsity_ >= 0.0 && sparsity_ < 1.0)) throw InvalidArgument("weight sparsity must be in [0, 1)");
    apply_mask();
  }

  /// Uniform fan-in initialization in [-1/sqrt(h), 1/sqrt(h)], zero bias.
  /// For every output a random ceil(s*h)-subset of inputs is severed.
  static WtaLayer random(std::size_t h, std::size_t n, std::size_t k, double sparsity, Rng& rng) {
    if (!(sparsity >= 0.0 && sparsity < 1.0)) throw InvalidArgument("weight sparsity must be in [0, 1)");
    const auto rows = static_cast<Eigen::Index>(h);
    const auto cols = static_cast<Eigen::Index>(n);
    Matrix<Scalar> w(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    Matrix<Scalar> mask = Matrix<Scalar>::Ones(rows, cols);
    const auto severed = static_cast<std::size_t>(std::ceil(sparsity * static_cast<double>(h) - 1e-9));
    std::vector<std::uint32_t> inputs(h);
    for (Eigen::Index d = 0; d < cols; ++d) {
      for (std::uint32_t i = 0; i < h; ++i) inputs[i] = i;
      for (std::size_t s = 0; s < severed; ++s) {
        const auto pick = s + rng.below(h - s);
        std::swap(inputs[s], inputs[pick]);
        mask(inputs[s], d) = Scalar(0);
      }
    }
    return WtaLayer(std::move(w), Vector<Scalar>::Zero(cols), std::move(mask), k, sparsity);
  }

  std::size_t input_size() const { return static_cast<std::size_t>(weight_.rows()); }
  std::size_t output_size() const { return static_cast<std::size_t>(weight_.cols()); }
  std::size_t train_k() const { return train_k_; }
  std::size_t infer_k() const { return infer_k_; }
  double sparsity() const { return sparsity_; }

  void set_infer_k(std::size_t k) {
    if (k == 0 || k > output_size()) throw InvalidArgument("infer_k must be in [1, n]");
    infer_k_ = k;
  }

  const Matrix<Scalar>& weight() const { return weight_; }
  Matrix<Scalar>& weight() { return weight_; }
  const Vector<Scalar>& bias() const { return bias_; }
  Vector<Scalar>& bias() { return bias_; }
  const Matrix<Scalar>& mask() const { return mask_; }

  /// Re-zeroes severed connections.
  void apply_mask() { weight_ = (mask_.array() != Scalar(0)).select(weight_, Scalar(0)); }

  /// Dense activations for each token row. Each coefficient is its own dot
  /// product, so a token's activations never depend on its neighbours.
  RowMatrix<Scalar> activations(const RowMatrix<Scalar>& tokens) const {
    if (static_cast<std::size_t>(tokens.cols()) != input_size()) {
      throw InvalidArgument("WTA input length " + std::to_string(tokens.cols()) + " != h=" +
                            std::to_string(input_size()));
    }
    RowMatrix<Scalar> z = tokens.lazyProduct(weight_);
    z.rowwise() += bias_.transpose();
    return z;
  }

  template <typename Other>
  WtaLayer<Other> cast() const {
    WtaLayer<Other> out(weight_.template cast<Other>(), bias_.template cast<Other>(), mask_.template cast<Other>(),
                        train_k_, sparsity_);
    out.set_infer_k(infer_k_);
    return out;
  }

 private:
  Matrix<Scalar> weight_;  // h x n
  Vector<Scalar> bias_;    // n
  Matrix<Scalar> mask_;    // h x n of 0/1
  std::size_t train_k_ = 1;
  std::size_t infer_k_ = 1;
  double sparsity_ = 0.0;
};

/// Winners of one forward pass, kept for the backward pass.
template <typename Scalar>
struct WtaRecord {
  SparseVector<Scalar> output;
  bool recorded = false;
};

/// Top-k of a dense activation row with exact zeros excluded.
template <typename Scalar>
SparseVector<Scalar> top_k_sparse(std::span<const Scalar> z, std::size_t k) {
  std::vector<SparseEntry<Scalar>> entries;
  entries.reserve(k);
  for (Dim d : select_top_k(z, k)) {
    if (z[d] != Scalar(0)) entries.push_back({d, z[d]});
  }
  return SparseVector<Scalar>(static_cast<Dim>(z.size()), std::move(entries));
}

template <typename Scalar>
WtaRecord<Scalar> wta_forward(std::span<const Scalar> e, const WtaLayer<Scalar>& layer, std::size_t k) {
  if (e.size() != layer.input_size()) {
    throw InvalidArgument("wta_forward: input length " + std::to_string(e.size()) + " != h=" +
                          std::to_string(layer.input_size()));
  }
  if (k == 0 || k > layer.output_size()) throw InvalidArgument("wta_forward: k must be in [1, n]");
  RowMatrix<Scalar> row = Eigen::Map<const RowMatrix<Scalar>>(e.data(), 1, static_cast<Eigen::Index>(e.size()));
  RowMatrix<Scalar> z = layer.activations(row);
  return {top_k_sparse<Scalar>(std::span<const Scalar>(z.data(), layer.output_size()), k), true};
}

template <typename Scalar>
struct WtaGradients {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;

  static WtaGradients zeros(const WtaLayer<Scalar>& layer) {
    return {Matrix<Scalar>::Zero(layer.weight().rows(), layer.weight().cols()),
            Vector<Scalar>::Zero(layer.bias().size())};
  }
  void set_zero() {
    weight.setZero();
    bias.setZero();
  }
};

/// Linear-layer gradients restricted to winner columns. `upstream` holds
/// dLoss/dz for winners only; its support must lie inside the recorded
/// winner set. Adds into `grads` and `grad_e`.
template <typename Scalar>
void wta_backward_accumulate(std::span<const Scalar> e, const WtaLayer<Scalar>& layer, const WtaRecord<Scalar>& record,
                             const SparseVector<Scalar>& upstream, std::span<Scalar> grad_e,
                             WtaGradients<Scalar>& grads) {
  if (!record.recorded) throw UsageError("wta_backward: no recorded forward pass");
  if (e.size() != layer.input_size() || grad_e.size() != layer.input_size()) {
    throw InvalidArgument("wta_backward: input length mismatch");
  }
  const auto& winners = record.output.entries();
  auto it = winners.begin();
  const auto h = static_cast<Eigen::Index>(layer.input_size());
  Eigen::Map<const Vector<Scalar>> ev(e.data(), h);
  Eigen::Map<Vector<Scalar>> ge(grad_e.data(), h);
  for (const auto& g : upstream) {
    while (it != winners.end() && it->dim < g.dim) ++it;
    if (it == winners.end() || it->dim != g.dim) {
      throw InvalidArgument("wta_backward: gradient on non-winner dimension " + std::to_string(g.dim));
    }
    const auto d = static_cast<Eigen::Index>(g.dim);
    grads.bias[d] += g.weight;
    grads.weight.col(d) += (g.weight * ev).cwiseProduct(layer.mask().col(d));
    ge += g.weight * layer.weight().col(d);
  }
}

template <typename Scalar>
struct WtaBackwardResult {
  Vector<Scalar> grad_e;
  WtaGradients<Scalar> grads;
};

template <typename Scalar>
WtaBackwardResult<Scalar> wta_backward(std::span<const Scalar> e, const WtaLayer<Scalar>& layer,
                                       const WtaRecord<Scalar>& record, const SparseVector<Scalar>& upstream) {
  WtaBackwardResult<Scalar> r{Vector<Scalar>::Zero(static_cast<Eigen::Index>(layer.input_size())),
                              WtaGradients<Scalar>::zeros(layer)};
  wta_backward_accumulate(e, layer, record, upstream, std::span<Scalar>(r.grad_e.data(), layer.input_size()), r.grads);
  return r;
}

}  // namespace uhd
