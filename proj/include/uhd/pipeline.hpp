#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uhd/embedding_file.hpp"
#include "uhd/eval.hpp"
#include "uhd/inverted_index.hpp"
#include "uhd/model.hpp"

namespace uhd {

struct IdText {
  std::string id;
  std::string text;
};

/// Reads `id TAB text` lines (collections and query sets).
std::vector<IdText> read_id_text(const std::string& path);

/// Copy of `model` with every bucket's infer_k set to min(k, n).
Model<float> with_infer_k(const Model<float>& model, std::size_t k);

/// Encodes texts in parallel; output order follows input order.
std::vector<BucketedRepresentation<float>> encode_texts(const Model<float>& model, const std::vector<IdText>& texts,
                                                        bool is_query, std::size_t threads = 1);

/// Encodes UHDE records through the model's WTA layers only.
std::vector<BucketedRepresentation<float>> encode_embeddings(const Model<float>& model,
                                                             const std::vector<EmbeddingRecord>& records,
                                                             std::size_t threads = 1);

InvertedIndex index_representations(const std::vector<BucketDescriptor>& structure, const std::vector<std::string>& ids,
                                    const std::vector<BucketedRepresentation<float>>& reps);

/// Searches every query; each query's ranking keeps search order.
Run search_all(const InvertedIndex& index, const std::vector<std::string>& qids,
               std::vector<BucketedRepresentation<float>> queries, std::size_t k,
               const std::optional<std::vector<float>>& weights = std::nullopt, std::size_t threads = 1);

struct SweepPoint {
  std::size_t infer_k = 0;
  double mrr = 0.0;
  std::size_t postings = 0;
};

/// Re-encodes documents and queries at each infer_k without retraining,
/// indexes, retrieves the top `depth` and scores MRR@10.
std::vector<SweepPoint> k_sweep(const Model<float>& model, const std::vector<IdText>& docs,
                                const std::vector<IdText>& queries, const Qrels& qrels,
                                const std::vector<std::size_t>& ks, std::size_t depth = 100, std::size_t threads = 1);

}  // namespace uhd
