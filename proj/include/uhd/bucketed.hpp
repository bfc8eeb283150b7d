#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "uhd/error.hpp"
#include "uhd/sparse_vector.hpp"

namespace uhd {

/// Identifies one bucket: the encoder layer it reads (1-based), the aspect
/// index among buckets on that layer (1-based), its dimensionality and the
/// weight it carries in the relevance sum.
struct BucketDescriptor {
  std::uint32_t layer = 1;
  std::uint32_t aspect = 1;
  Dim dim = 0;
  float weight = 1.0f;

  /// Equality of structure, ignoring the weight.
  bool same_slot(const BucketDescriptor& o) const {
    return layer == o.layer && aspect == o.aspect && dim == o.dim;
  }
  friend bool operator==(const BucketDescriptor&, const BucketDescriptor&) = default;
};

template <typename Scalar = float>
struct Bucket {
  BucketDescriptor descriptor;
  SparseVector<Scalar> vector;
};

template <typename Scalar = float>
class BucketedRepresentation {
 public:
  BucketedRepresentation() = default;

  void add(BucketDescriptor d, SparseVector<Scalar> v) {
    if (v.dimension() != d.dim) throw InvalidArgument("bucket vector dimensionality differs from descriptor");
    if (d.weight < 0.0f) throw InvalidArgument("bucket weight must be nonnegative");
    for (const auto& b : buckets_) {
      if (b.descriptor.layer == d.layer && b.descriptor.aspect == d.aspect) {
        throw InvalidArgument("duplicate bucket (layer " + std::to_string(d.layer) + ", aspect " +
                              std::to_string(d.aspect) + ")");
      }
    }
    buckets_.push_back({d, std::move(v)});
  }

  std::size_t size() const noexcept { return buckets_.size(); }
  bool empty() const noexcept { return buckets_.empty(); }
  const Bucket<Scalar>& operator[](std::size_t i) const { return buckets_[i]; }
  Bucket<Scalar>& operator[](std::size_t i) { return buckets_[i]; }
  auto begin() const noexcept { return buckets_.begin(); }
  auto end() const noexcept { return buckets_.end(); }

  std::vector<BucketDescriptor> descriptors() const {
    std::vector<BucketDescriptor> out;
    out.reserve(buckets_.size());
    for (const auto& b : buckets_) out.push_back(b.descriptor);
    return out;
  }

  /// True when both carry the same bucket sequence, weights ignored.
  bool same_structure(const BucketedRepresentation& o) const {
    if (o.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (!buckets_[i].descriptor.same_slot(o.buckets_[i].descriptor)) return false;
    }
    return true;
  }

  void set_weights(const std::vector<float>& weights) {
    if (weights.size() != buckets_.size()) throw InvalidArgument("bucket weight count mismatch");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] < 0.0f) throw InvalidArgument("bucket weight must be nonnegative");
      buckets_[i].descriptor.weight = weights[i];
    }
  }

  std::size_t total_nnz() const {
    std::size_t s = 0;
    for (const auto& b : buckets_) s += b.vector.nnz();
    return s;
  }

  std::size_t total_dim() const {
    std::size_t s = 0;
    for (const auto& b : buckets_) s += b.descriptor.dim;
    return s;
  }

 private:
  std::vector<Bucket<Scalar>> buckets_;
};

/// Weighted bucket-wise dot product; weights come from the query side.
template <typename Scalar>
double relevance(const BucketedRepresentation<Scalar>& q, const BucketedRepresentation<Scalar>& d) {
  if (!q.same_structure(d)) throw InvalidArgument("relevance: bucket structure mismatch");
  double score = 0.0;
  for (std::size_t b = 0; b < q.size(); ++b) {
    const double w = q[b].descriptor.weight;
    if (w == 0.0) continue;
    score += w * dot(q[b].vector, d[b].vector);
  }
  return score;
}

/// Per-bucket unweighted dot products.
template <typename Scalar>
std::vector<double> bucket_dots(const BucketedRepresentation<Scalar>& q, const BucketedRepresentation<Scalar>& d) {
  if (!q.same_structure(d)) throw InvalidArgument("bucket_dots: bucket structure mismatch");
  std::vector<double> out(q.size());
  for (std::size_t b = 0; b < q.size(); ++b) out[b] = dot(q[b].vector, d[b].vector);
  return out;
}

}  // namespace uhd
