#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uhd/bucket_plan.hpp"
#include "uhd/bucketed.hpp"
#include "uhd/tokenizer.hpp"
#include "uhd/toy_encoder.hpp"

namespace uhd {

/// Forward state of one text through encoder and every bucket.
template <typename Scalar>
struct TextTrace {
  EncoderTrace<Scalar> encoder;
  std::vector<BucketTrace<Scalar>> buckets;
  BucketedRepresentation<Scalar> representation;
};

template <typename Scalar>
struct ModelGradients {
  std::optional<EncoderGradients<Scalar>> encoder;
  std::vector<WtaGradients<Scalar>> buckets;

  void set_zero() {
    if (encoder) encoder->set_zero();
    for (auto& b : buckets) b.set_zero();
  }
};

/// A named view over one parameter array and its gradient. `mask` is empty
/// unless the parameter carries a fixed sparsity mask.
template <typename Scalar>
struct ParamView {
  std::string name;
  std::span<Scalar> value;
  std::span<Scalar> grad;
  std::span<const Scalar> mask;
};

/// Tokenizer, optional toy encoder and the bucket plan on top of it.
template <typename Scalar = float>
struct Model {
  TokenizerConfig tokenizer;
  std::optional<ToyEncoder<Scalar>> encoder;
  BucketPlan<Scalar> plan;

  std::size_t hidden_size() const { return plan.empty() ? 0 : plan[0].wta.input_size(); }

  std::vector<TokenId> tokens(std::string_view text, bool is_query) const { return tokenize(text, tokenizer, is_query); }

  std::vector<DenseTokenMatrix<Scalar>> dense_layers(std::span<const TokenId> ids) const {
    if (!encoder) throw UsageError("model has no built-in encoder; supply dense embeddings");
    return encoder->encode_layers(ids);
  }

  BucketedRepresentation<Scalar> encode_tokens(std::span<const TokenId> ids, bool training = false) const {
    return encode_representation(dense_layers(ids), plan, training);
  }

  BucketedRepresentation<Scalar> encode_text(std::string_view text, bool is_query, bool training = false) const {
    const auto ids = tokens(text, is_query);
    return encode_tokens(ids, training);
  }

  BucketedRepresentation<Scalar> encode_dense(const std::vector<DenseTokenMatrix<Scalar>>& layers) const {
    return encode_representation(layers, plan, false);
  }

  /// Forward pass keeping all intermediate state; uses train_k when
  /// `training`, infer_k otherwise.
  TextTrace<Scalar> trace(std::span<const TokenId> ids, bool training = true) const {
    TextTrace<Scalar> tr;
    tr.encoder = encoder ? encoder->forward(ids) : throw UsageError("model has no built-in encoder");
    trace_buckets(tr, training);
    return tr;
  }

  /// Forward pass from externally supplied dense layers (no encoder state).
  TextTrace<Scalar> trace_dense(const std::vector<DenseTokenMatrix<Scalar>>& layers, bool training = true) const {
    TextTrace<Scalar> tr;
    tr.encoder.outputs.resize(max_layer_count(layers) + 1);
    for (const auto& l : layers) tr.encoder.outputs[l.layer] = l.values;
    trace_buckets(tr, training);
    return tr;
  }

  ModelGradients<Scalar> zero_gradients() const {
    ModelGradients<Scalar> g;
    if (encoder) g.encoder = encoder->zero_gradients();
    for (const auto& e : plan) g.buckets.push_back(WtaGradients<Scalar>::zeros(e.wta));
    return g;
  }

  /// Accumulates parameter gradients given dLoss/d(normalized bucket) for
  /// each bucket, aligned with that bucket's entries.
  void backward(const TextTrace<Scalar>& tr, const std::vector<std::vector<Scalar>>& bucket_grads,
                ModelGradients<Scalar>& grads) const {
    if (bucket_grads.size() != plan.size() || tr.buckets.size() != plan.size()) {
      throw UsageError("model backward: bucket count mismatch");
    }
    const std::size_t layer_count = tr.encoder.outputs.size();
    std::vector<RowMatrix<Scalar>> layer_grads(layer_count);
    for (std::size_t b = 0; b < plan.size(); ++b) {
      const auto& bt = tr.buckets[b];
      const auto& g = bucket_grads[b];
      if (g.size() != bt.normalized.nnz()) throw UsageError("model backward: gradient length mismatch");
      if (bt.normalized.empty()) continue;
      // d(x/|x|)/dx applied to g: (g - u (u.g)) / |x|
      double ug = 0.0;
      const auto& u = bt.normalized.entries();
      for (std::size_t i = 0; i < u.size(); ++i) ug += static_cast<double>(u[i].weight) * static_cast<double>(g[i]);
      std::vector<std::vector<SparseEntry<Scalar>>> per_token(bt.tokens.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double gx = (static_cast<double>(g[i]) - static_cast<double>(u[i].weight) * ug) / bt.norm;
        if (gx != 0.0) per_token[bt.argmax[i]].push_back({u[i].dim, static_cast<Scalar>(gx)});
      }
      const auto& wta = plan[b].wta;
      const auto j = plan[b].layer;
      const auto& rows = tr.encoder.outputs[j];
      auto& lg = layer_grads[j];
      if (lg.size() == 0) lg = RowMatrix<Scalar>::Zero(rows.rows(), rows.cols());
      for (std::size_t t = 0; t < per_token.size(); ++t) {
        if (per_token[t].empty()) continue;
        const auto ti = static_cast<Eigen::Index>(t);
        SparseVector<Scalar> upstream(static_cast<Dim>(wta.output_size()), std::move(per_token[t]));
        wta_backward_accumulate<Scalar>(std::span<const Scalar>(rows.row(ti).data(), wta.input_size()), wta,
                                        bt.tokens[t], upstream,
                                        std::span<Scalar>(lg.row(ti).data(), wta.input_size()), grads.buckets[b]);
      }
    }
    if (encoder && grads.encoder) {
      std::vector<RowMatrix<Scalar>> out_grads(encoder->depth());
      for (std::size_t j = 1; j < layer_count; ++j) out_grads[j - 1] = std::move(layer_grads[j]);
      encoder->backward(tr.encoder, std::move(out_grads), *grads.encoder);
    }
  }

  /// Every trainable array paired with its gradient, in a fixed order.
  std::vector<ParamView<Scalar>> parameters(ModelGradients<Scalar>& grads) {
    std::vector<ParamView<Scalar>> out;
    auto view = [](auto& m) { return std::span<Scalar>(m.data(), static_cast<std::size_t>(m.size())); };
    if (encoder && grads.encoder) {
      out.push_back({"embeddings", view(encoder->embeddings()), view(grads.encoder->embeddings), {}});
      for (std::size_t j = 0; j < encoder->depth(); ++j) {
        auto& l = encoder->layers()[j];
        const auto tag = "mix" + std::to_string(j + 1);
        out.push_back({tag + ".weight", view(l.weight), view(grads.encoder->weights[j]), {}});
        out.push_back({tag + ".bias", view(l.bias), view(grads.encoder->biases[j]), {}});
      }
    }
    for (std::size_t b = 0; b < plan.size(); ++b) {
      auto& wta = plan[b].wta;
      const auto tag = "wta" + std::to_string(plan[b].layer) + "." + std::to_string(plan[b].aspect);
      const auto& mask = wta.mask();
      out.push_back({tag + ".weight", view(wta.weight()), view(grads.buckets[b].weight),
                     std::span<const Scalar>(mask.data(), static_cast<std::size_t>(mask.size()))});
      out.push_back({tag + ".bias", view(wta.bias()), view(grads.buckets[b].bias), {}});
    }
    return out;
  }

  template <typename Other>
  Model<Other> cast() const {
    Model<Other> m;
    m.tokenizer = tokenizer;
    if (encoder) m.encoder = encoder->template cast<Other>();
    m.plan = plan.template cast<Other>();
    return m;
  }

 private:
  static std::size_t max_layer_count(const std::vector<DenseTokenMatrix<Scalar>>& layers) {
    std::size_t m = 0;
    for (const auto& l : layers) m = std::max<std::size_t>(m, l.layer);
    return m;
  }

  void trace_buckets(TextTrace<Scalar>& tr, bool training) const {
    for (const auto& e : plan) {
      if (e.layer >= tr.encoder.outputs.size() || tr.encoder.outputs[e.layer].size() == 0) {
        throw InvalidArgument("source layer " + std::to_string(e.layer) + " not available");
      }
      const auto k = training ? e.wta.train_k() : e.wta.infer_k();
      tr.buckets.push_back(trace_bucket(tr.encoder.outputs[e.layer], e.wta, k));
      tr.representation.add({e.layer, e.aspect, static_cast<Dim>(e.wta.output_size()), 1.0f},
                            tr.buckets.back().normalized);
    }
  }
};

}  // namespace uhd
