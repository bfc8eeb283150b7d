#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uhd/bucketed.hpp"

namespace uhd {

using DocOrdinal = std::uint32_t;

struct Posting {
  DocOrdinal doc;
  float weight;
  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Postings of one bucket, directory indexed by dimension.
struct BucketIndex {
  BucketDescriptor descriptor;
  std::vector<std::vector<Posting>> postings;  // size == descriptor.dim

  std::size_t posting_count() const;
  std::size_t active_dims() const;
};

/// Per-bucket inverted index plus the ordinal -> external id table.
/// Immutable once built.
class InvertedIndex {
 public:
  InvertedIndex() = default;
  InvertedIndex(std::vector<BucketIndex> buckets, std::vector<std::string> doc_ids);

  const std::vector<BucketIndex>& buckets() const { return buckets_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t posting_count() const;
  std::vector<BucketDescriptor> descriptors() const;

  /// Ordinal of an external id, or -1.
  long ordinal_of(const std::string& id) const;

 private:
  std::vector<BucketIndex> buckets_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, DocOrdinal> ordinals_;
};

/// Accumulates documents in arrival order; ordinals follow that order.
class IndexBuilder {
 public:
  IndexBuilder() = default;
  explicit IndexBuilder(std::vector<BucketDescriptor> structure);

  void add(const std::string& id, const BucketedRepresentation<float>& rep);
  InvertedIndex finish() &&;

 private:
  std::vector<BucketIndex> buckets_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, DocOrdinal> seen_;
  bool structured_ = false;
};

InvertedIndex build_index(const std::vector<std::pair<std::string, BucketedRepresentation<float>>>& docs);

struct ScoredDoc {
  std::string id;
  DocOrdinal ordinal;
  double score;
};

/// Descending score, ties by ascending ordinal.
using SearchResult = std::vector<ScoredDoc>;

/// Term-at-a-time scoring: only documents sharing a nonzero dimension
/// with the query in some positively weighted bucket are ever scored.
/// Bucket weights come from the query's descriptors.
SearchResult search(const InvertedIndex& index, const BucketedRepresentation<float>& query, std::size_t k);

struct BucketStats {
  BucketDescriptor descriptor;
  std::size_t postings = 0;
  std::size_t active_dims = 0;
  double mean_posting_length = 0.0;     // over dimensions with postings
  std::map<std::size_t, std::size_t> nnz_histogram;  // doc nnz -> doc count
  std::map<Dim, std::size_t> activation_frequency;   // dim -> docs active
};

struct IndexStats {
  std::size_t docs = 0;
  std::size_t postings = 0;
  std::vector<BucketStats> buckets;
};

IndexStats index_stats(const InvertedIndex& index);

}  // namespace uhd
