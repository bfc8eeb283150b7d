#include "uhd/inverted_index.hpp"

#include <algorithm>

#include "uhd/error.hpp"

namespace uhd {

std::size_t BucketIndex::posting_count() const {
  std::size_t n = 0;
  for (const auto& p : postings) n += p.size();
  return n;
}

std::size_t BucketIndex::active_dims() const {
  return static_cast<std::size_t>(std::count_if(postings.begin(), postings.end(), [](const auto& p) { return !p.empty(); }));
}

InvertedIndex::InvertedIndex(std::vector<BucketIndex> buckets, std::vector<std::string> doc_ids)
    : buckets_(std::move(buckets)), doc_ids_(std::move(doc_ids)) {
  for (DocOrdinal i = 0; i < doc_ids_.size(); ++i) {
    if (!ordinals_.emplace(doc_ids_[i], i).second) throw DataError("duplicate document id: " + doc_ids_[i]);
  }
  for (std::size_t b = 0; b < buckets_.size(); ++b) {
    const auto& bucket = buckets_[b];
    if (bucket.postings.size() != bucket.descriptor.dim) throw InvalidArgument("bucket posting directory size != n");
    for (std::size_t o = 0; o < b; ++o) {
      const auto& other = buckets_[o].descriptor;
      if (other.layer == bucket.descriptor.layer && other.aspect == bucket.descriptor.aspect) {
        throw DataError("duplicate bucket in index");
      }
    }
    for (const auto& list : bucket.postings) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].doc >= doc_ids_.size()) throw DataError("posting ordinal beyond corpus size");
        if (list[i].weight == 0.0f) throw DataError("posting with zero weight");
        if (i > 0 && list[i - 1].doc >= list[i].doc) throw DataError("posting ordinals not strictly ascending");
      }
    }
  }
}

std::size_t InvertedIndex::posting_count() const {
  std::size_t n = 0;
  for (const auto& b : buckets_) n += b.posting_count();
  return n;
}

std::vector<BucketDescriptor> InvertedIndex::descriptors() const {
  std::vector<BucketDescriptor> out;
  for (const auto& b : buckets_) out.push_back(b.descriptor);
  return out;
}

long InvertedIndex::ordinal_of(const std::string& id) const {
  auto it = ordinals_.find(id);
  return it == ordinals_.end() ? -1 : static_cast<long>(it->second);
}

IndexBuilder::IndexBuilder(std::vector<BucketDescriptor> structure) : structured_(true) {
  for (const auto& d : structure) buckets_.push_back({d, std::vector<std::vector<Posting>>(d.dim)});
}

void IndexBuilder::add(const std::string& id, const BucketedRepresentation<float>& rep) {
  if (!structured_) {
    for (const auto& b : rep) buckets_.push_back({b.descriptor, std::vector<std::vector<Posting>>(b.descriptor.dim)});
    structured_ = true;
  }
  if (rep.size() != buckets_.size()) throw DataError("document " + id + ": bucket structure mismatch");
  for (std::size_t b = 0; b < rep.size(); ++b) {
    if (!rep[b].descriptor.same_slot(buckets_[b].descriptor)) throw DataError("document " + id + ": bucket structure mismatch");
  }
  const auto ordinal = static_cast<DocOrdinal>(doc_ids_.size());
  if (!seen_.emplace(id, ordinal).second) throw DataError("duplicate document id: " + id);
  doc_ids_.push_back(id);
  for (std::size_t b = 0; b < rep.size(); ++b) {
    for (const auto& e : rep[b].vector) buckets_[b].postings[e.dim].push_back({ordinal, e.weight});
  }
}

InvertedIndex IndexBuilder::finish() && { return InvertedIndex(std::move(buckets_), std::move(doc_ids_)); }

InvertedIndex build_index(const std::vector<std::pair<std::string, BucketedRepresentation<float>>>& docs) {
  IndexBuilder builder;
  for (const auto& [id, rep] : docs) builder.add(id, rep);
  return std::move(builder).finish();
}

SearchResult search(const InvertedIndex& index, const BucketedRepresentation<float>& query, std::size_t k) {
  if (k == 0) throw InvalidArgument("search: K must be positive");
  if (index.doc_count() == 0) return {};
  const auto& buckets = index.buckets();
  if (query.size() != buckets.size()) throw InvalidArgument("search: query bucket structure does not match index");
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (!query[b].descriptor.same_slot(buckets[b].descriptor)) {
      throw InvalidArgument("search: query bucket structure does not match index");
    }
  }
  // Per-bucket partial sums are folded in bucket order so each score is
  // bit-identical to the bucket-wise relevance sum.
  std::vector<double> total(index.doc_count(), 0.0);
  std::vector<double> partial(index.doc_count(), 0.0);
  std::vector<char> hit(index.doc_count(), 0);
  std::vector<char> hit_bucket(index.doc_count(), 0);
  std::vector<DocOrdinal> touched, touched_bucket;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const double w = query[b].descriptor.weight;
    if (w == 0.0) continue;
    touched_bucket.clear();
    for (const auto& qe : query[b].vector) {
      const double qw = qe.weight;
      for (const auto& p : buckets[b].postings[qe.dim]) {
        if (!hit_bucket[p.doc]) {
          hit_bucket[p.doc] = 1;
          touched_bucket.push_back(p.doc);
        }
        partial[p.doc] += qw * static_cast<double>(p.weight);
      }
    }
    for (auto doc : touched_bucket) {
      total[doc] += w * partial[doc];
      partial[doc] = 0.0;
      hit_bucket[doc] = 0;
      if (!hit[doc]) {
        hit[doc] = 1;
        touched.push_back(doc);
      }
    }
  }
  auto better = [&](DocOrdinal a, DocOrdinal b) { return total[a] > total[b] || (total[a] == total[b] && a < b); };
  const std::size_t keep = std::min(k, touched.size());
  std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(keep), touched.end(), better);
  SearchResult out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back({index.doc_ids()[touched[i]], touched[i], total[touched[i]]});
  return out;
}

IndexStats index_stats(const InvertedIndex& index) {
  IndexStats s;
  s.docs = index.doc_count();
  for (const auto& bucket : index.buckets()) {
    BucketStats bs;
    bs.descriptor = bucket.descriptor;
    std::vector<std::size_t> doc_nnz(index.doc_count(), 0);
    for (Dim d = 0; d < bucket.postings.size(); ++d) {
      const auto& list = bucket.postings[d];
      if (list.empty()) continue;
      bs.postings += list.size();
      ++bs.active_dims;
      bs.activation_frequency[d] = list.size();
      for (const auto& p : list) ++doc_nnz[p.doc];
    }
    for (auto nnz : doc_nnz) ++bs.nnz_histogram[nnz];
    bs.mean_posting_length = bs.active_dims ? static_cast<double>(bs.postings) / static_cast<double>(bs.active_dims) : 0.0;
    s.postings += bs.postings;
    s.buckets.push_back(std::move(bs));
  }
  return s;
}

}  // namespace uhd
