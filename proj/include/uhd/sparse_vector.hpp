#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uhd/error.hpp"

namespace uhd {

using Dim = std::uint32_t;

template <typename Scalar>
struct SparseEntry {
  Dim dim;
  Scalar weight;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// A vector in an n-dimensional space holding only its nonzero entries,
/// sorted by ascending dimension. Exact zeros are never stored.
template <typename Scalar = float>
class SparseVector {
 public:
  using Entry = SparseEntry<Scalar>;

  SparseVector() = default;
  explicit SparseVector(Dim n) : n_(n) {}

  /// Takes entries that are already sorted; throws if the invariants fail.
  SparseVector(Dim n, std::vector<Entry> entries) : n_(n), entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].dim >= n_) throw InvalidArgument("sparse entry dim out of range");
      if (entries_[i].weight == Scalar(0)) throw InvalidArgument("sparse entry with zero weight");
      if (!std::isfinite(entries_[i].weight)) throw InvalidArgument("sparse entry with nonfinite weight");
      if (i > 0 && entries_[i - 1].dim >= entries_[i].dim) {
        throw InvalidArgument("sparse entries not strictly ascending");
      }
    }
  }

  /// Builds from arbitrary (dim, weight) pairs: sorts, drops zeros, rejects
  /// duplicate dims.
  static SparseVector from_pairs(Dim n, std::vector<Entry> pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const Entry& a, const Entry& b) { return a.dim < b.dim; });
    std::erase_if(pairs, [](const Entry& e) { return e.weight == Scalar(0); });
    return SparseVector(n, std::move(pairs));
  }

  Dim dimension() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Weight at `dim`, 0 when absent.
  Scalar at(Dim dim) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), dim,
                               [](const Entry& e, Dim d) { return e.dim < d; });
    return (it != entries_.end() && it->dim == dim) ? it->weight : Scalar(0);
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += static_cast<double>(e.weight) * static_cast<double>(e.weight);
    return s;
  }

  double norm() const { return std::sqrt(squared_norm()); }

  SparseVector scaled(double factor) const {
    std::vector<Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
      const auto w = static_cast<Scalar>(static_cast<double>(e.weight) * factor);
      if (w != Scalar(0)) out.push_back({e.dim, w});
    }
    return SparseVector(n_, std::move(out));
  }

  template <typename Other>
  SparseVector<Other> cast() const {
    std::vector<SparseEntry<Other>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
      const auto w = static_cast<Other>(e.weight);
      if (w != Other(0)) out.push_back({e.dim, w});
    }
    return SparseVector<Other>(n_, std::move(out));
  }

  std::vector<Dim> support() const {
    std::vector<Dim> dims;
    dims.reserve(entries_.size());
    for (const auto& e : entries_) dims.push_back(e.dim);
    return dims;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  Dim n_ = 0;
  std::vector<Entry> entries_;
};

using SparseVectorf = SparseVector<float>;
using SparseVectord = SparseVector<double>;

/// Sum over shared dimensions of the products of weights, accumulated in
/// double precision.
template <typename Scalar>
double dot(const SparseVector<Scalar>& a, const SparseVector<Scalar>& b) {
  if (a.dimension() != b.dimension()) {
    throw InvalidArgument("dot: dimensionality mismatch (" + std::to_string(a.dimension()) + " vs " +
                          std::to_string(b.dimension()) + ")");
  }
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->dim < ib->dim) {
      ++ia;
    } else if (ib->dim < ia->dim) {
      ++ib;
    } else {
      sum += static_cast<double>(ia->weight) * static_cast<double>(ib->weight);
      ++ia;
      ++ib;
    }
  }
  return sum;
}

/// Elementwise maximum where absent entries count as 0.0. Only strictly
/// positive maxima survive, so a dimension whose every stored weight is
/// negative is dropped against the implicit zeros.
template <typename Scalar>
SparseVector<Scalar> max_pool(std::span<const SparseVector<Scalar>> vectors) {
  if (vectors.empty()) throw InvalidArgument("max_pool: empty input");
  const Dim n = vectors.front().dimension();
  std::size_t total = 0;
  for (const auto& v : vectors) {
    if (v.dimension() != n) throw InvalidArgument("max_pool: dimensionality mismatch");
    total += v.nnz();
  }
  std::vector<SparseEntry<Scalar>> all;
  all.reserve(total);
  for (const auto& v : vectors) {
    for (const auto& e : v) {
      if (e.weight > Scalar(0)) all.push_back(e);
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.dim < b.dim || (a.dim == b.dim && a.weight > b.weight);
  });
  std::vector<SparseEntry<Scalar>> out;
  for (const auto& e : all) {
    if (out.empty() || out.back().dim != e.dim) out.push_back(e);
  }
  return SparseVector<Scalar>(n, std::move(out));
}

template <typename Scalar>
SparseVector<Scalar> max_pool(const std::vector<SparseVector<Scalar>>& vectors) {
  return max_pool(std::span<const SparseVector<Scalar>>(vectors));
}

/// Divides by the Euclidean norm; the empty vector is returned unchanged.
template <typename Scalar>
SparseVector<Scalar> l2_normalize(const SparseVector<Scalar>& v) {
  if (v.empty()) return v;
  return v.scaled(1.0 / v.norm());
}

/// Strict total order used by every top-k selection: larger value first,
/// lower index on ties.
template <typename Scalar>
struct TopKOrder {
  bool operator()(const SparseEntry<Scalar>& a, const SparseEntry<Scalar>& b) const {
    return a.weight > b.weight || (a.weight == b.weight && a.dim < b.dim);
  }
};

/// Keeps the `k_prime` largest entries (signed comparison, lower dim wins
/// ties).
template <typename Scalar>
SparseVector<Scalar> truncate_top_k(const SparseVector<Scalar>& v, std::size_t k_prime) {
  if (k_prime == 0) throw InvalidArgument("truncate_top_k: k must be positive");
  if (v.nnz() <= k_prime) return v;
  std::vector<SparseEntry<Scalar>> kept(v.begin(), v.end());
  std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(k_prime - 1), kept.end(),
                   TopKOrder<Scalar>{});
  kept.resize(k_prime);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.dim < b.dim; });
  return SparseVector<Scalar>(v.dimension(), std::move(kept));
}

/// Indices of the k largest values of a dense vector under TopKOrder,
/// returned in ascending index order.
template <typename Scalar>
std::vector<Dim> select_top_k(std::span<const Scalar> values, std::size_t k) {
  std::vector<Dim> idx(values.size());
  std::iota(idx.begin(), idx.end(), Dim{0});
  k = std::min(k, values.size());
  if (k == 0) return {};
  auto before = [&](Dim a, Dim b) { return values[a] > values[b] || (values[a] == values[b] && a < b); };
  if (k < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), before);
    idx.resize(k);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace uhd
