#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "uhd/bucketed.hpp"
#include "uhd/dense.hpp"
#include "uhd/error.hpp"
#include "uhd/wta_layer.hpp"

namespace uhd {

enum class BucketMode : std::uint8_t { single, vertical, horizontal };

BucketMode parse_bucket_mode(const std::string& name);
std::string to_string(BucketMode m);

template <typename Scalar = float>
struct PlanEntry {
  std::uint32_t layer = 1;
  std::uint32_t aspect = 1;
  WtaLayer<Scalar> wta;
};

/// The WTA layers that turn dense layer outputs into buckets, in bucket order.
template <typename Scalar = float>
class BucketPlan {
 public:
  BucketPlan() = default;

  BucketPlan(BucketMode mode, std::vector<PlanEntry<Scalar>> entries) : mode_(mode), entries_(std::move(entries)) {
    validate();
  }

  /// Vertical: one bucket per layer in `layers`. Horizontal: `aspects`
  /// buckets on the single layer. Single: one bucket on the single layer.
  static BucketPlan random(BucketMode mode, const std::vector<std::uint32_t>& layers, std::uint32_t aspects,
                           std::size_t h, std::size_t n, std::size_t k, double sparsity, Rng& rng) {
    std::vector<PlanEntry<Scalar>> entries;
    if (mode == BucketMode::vertical) {
      for (auto j : layers) entries.push_back({j, 1, WtaLayer<Scalar>::random(h, n, k, sparsity, rng)});
    } else {
      if (layers.size() != 1) throw InvalidArgument(to_string(mode) + " plan needs exactly one source layer");
      const std::uint32_t count = mode == BucketMode::horizontal ? aspects : 1;
      for (std::uint32_t m = 1; m <= count; ++m) {
        entries.push_back({layers.front(), m, WtaLayer<Scalar>::random(h, n, k, sparsity, rng)});
      }
    }
    return BucketPlan(mode, std::move(entries));
  }

  BucketMode mode() const { return mode_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const PlanEntry<Scalar>& operator[](std::size_t i) const { return entries_[i]; }
  PlanEntry<Scalar>& operator[](std::size_t i) { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  std::uint32_t max_layer() const {
    std::uint32_t m = 0;
    for (const auto& e : entries_) m = std::max(m, e.layer);
    return m;
  }

  std::vector<BucketDescriptor> descriptors() const {
    std::vector<BucketDescriptor> out;
    for (const auto& e : entries_) out.push_back({e.layer, e.aspect, static_cast<Dim>(e.wta.output_size()), 1.0f});
    return out;
  }

  void set_infer_k(std::size_t k) {
    for (auto& e : entries_) e.wta.set_infer_k(std::min(k, e.wta.output_size()));
  }

  template <typename Other>
  BucketPlan<Other> cast() const {
    std::vector<PlanEntry<Other>> out;
    for (const auto& e : entries_) out.push_back({e.layer, e.aspect, e.wta.template cast<Other>()});
    return BucketPlan<Other>(mode_, std::move(out));
  }

 private:
  void validate() const {
    if (entries_.empty()) throw InvalidArgument("bucket plan is empty");
    std::set<std::pair<std::uint32_t, std::uint32_t>> slots;
    std::set<std::uint32_t> layers;
    for (const auto& e : entries_) {
      if (e.layer < 1 || e.aspect < 1) throw InvalidArgument("bucket layer and aspect indices are 1-based");
      if (!slots.emplace(e.layer, e.aspect).second) throw InvalidArgument("duplicate (layer, aspect) in bucket plan");
      layers.insert(e.layer);
    }
    switch (mode_) {
      case BucketMode::single:
        if (entries_.size() != 1) throw InvalidArgument("single-mode plan must have exactly one bucket");
        break;
      case BucketMode::vertical:
        for (const auto& e : entries_) {
          if (e.aspect != 1) throw InvalidArgument("vertical plan buckets must have aspect 1");
        }
        if (layers.size() != entries_.size()) throw InvalidArgument("vertical plan needs distinct layers");
        break;
      case BucketMode::horizontal:
        if (layers.size() != 1) throw InvalidArgument("horizontal plan buckets must share one layer");
        break;
    }
  }

  BucketMode mode_ = BucketMode::single;
  std::vector<PlanEntry<Scalar>> entries_;
};

/// Everything from one bucket's forward pass needed for its backward pass.
template <typename Scalar>
struct BucketTrace {
  std::vector<WtaRecord<Scalar>> tokens;
  SparseVector<Scalar> pooled;
  std::vector<std::uint32_t> argmax;  // source token of each pooled entry
  double norm = 0.0;
  SparseVector<Scalar> normalized;
};

/// Max-pool across per-token winners with the source token recorded for
/// every surviving dimension (first token wins ties).
template <typename Scalar>
void pool_with_argmax(BucketTrace<Scalar>& tr, Dim n) {
  std::vector<std::pair<Dim, std::pair<Scalar, std::uint32_t>>> cand;
  for (std::uint32_t t = 0; t < tr.tokens.size(); ++t) {
    for (const auto& e : tr.tokens[t].output) {
      if (e.weight > Scalar(0)) cand.push_back({e.dim, {e.weight, t}});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::vector<SparseEntry<Scalar>> entries;
  tr.argmax.clear();
  for (const auto& c : cand) {
    if (!entries.empty() && entries.back().dim == c.first) continue;
    entries.push_back({c.first, c.second.first});
    tr.argmax.push_back(c.second.second);
  }
  tr.pooled = SparseVector<Scalar>(n, std::move(entries));
  tr.norm = tr.pooled.norm();
  tr.normalized = l2_normalize(tr.pooled);
}

/// WTA per token, max-pool across tokens, L2-normalize.
template <typename Scalar>
BucketTrace<Scalar> trace_bucket(const RowMatrix<Scalar>& token_rows, const WtaLayer<Scalar>& wta, std::size_t k) {
  if (token_rows.rows() < 1) throw InvalidArgument("bucket needs at least one token");
  if (k == 0 || k > wta.output_size()) throw InvalidArgument("bucket k must be in [1, n]");
  const RowMatrix<Scalar> z = wta.activations(token_rows);
  const auto n = wta.output_size();
  BucketTrace<Scalar> tr;
  tr.tokens.reserve(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    tr.tokens.push_back({top_k_sparse<Scalar>(std::span<const Scalar>(z.row(t).data(), n), k), true});
  }
  pool_with_argmax(tr, static_cast<Dim>(n));
  return tr;
}

template <typename Scalar>
const DenseTokenMatrix<Scalar>& find_layer(const std::vector<DenseTokenMatrix<Scalar>>& layers, std::uint32_t j) {
  for (const auto& l : layers) {
    if (l.layer == j) return l;
  }
  throw InvalidArgument("source layer " + std::to_string(j) + " not present in dense input");
}

/// One bucket from dense layers. `training` selects train_k over infer_k.
template <typename Scalar>
SparseVector<Scalar> build_bucket(const std::vector<DenseTokenMatrix<Scalar>>& layers, const PlanEntry<Scalar>& entry,
                                  bool training = false) {
  const auto k = training ? entry.wta.train_k() : entry.wta.infer_k();
  return trace_bucket(find_layer(layers, entry.layer).values, entry.wta, k).normalized;
}

template <typename Scalar>
BucketedRepresentation<Scalar> encode_representation(const std::vector<DenseTokenMatrix<Scalar>>& layers,
                                                     const BucketPlan<Scalar>& plan, bool training = false) {
  if (plan.empty()) throw InvalidArgument("encode_representation: empty plan");
  BucketedRepresentation<Scalar> rep;
  for (const auto& e : plan) {
    rep.add({e.layer, e.aspect, static_cast<Dim>(e.wta.output_size()), 1.0f}, build_bucket(layers, e, training));
  }
  return rep;
}

}  // namespace uhd
