#pragma once

#include <map>
#include <string>
#include <vector>

#include "uhd/bucketed.hpp"
#include "uhd/eval.hpp"

namespace uhd {

/// Per query, its rerank candidates with precomputed per-bucket dot
/// products. Scoring under any weight vector is then a weighted sum.
struct RerankCandidate {
  std::string doc;
  std::vector<double> bucket_dots;
};

struct RerankQuery {
  std::string qid;
  std::vector<RerankCandidate> candidates;
};

using RerankSet = std::vector<RerankQuery>;

/// Looks up representations by id; candidates missing a representation are
/// dropped.
RerankSet make_rerank_set(const std::map<std::string, BucketedRepresentation<float>>& queries,
                          const std::map<std::string, std::vector<std::string>>& candidates,
                          const std::map<std::string, BucketedRepresentation<float>>& docs);

/// Candidate weights for every bucket.
struct WeightGrid {
  std::vector<std::vector<double>> per_bucket;

  /// {0, 1/3, 2/3, 1} for each bucket.
  static WeightGrid thirds(std::size_t buckets);
  static WeightGrid uniform(std::size_t buckets, std::vector<double> values);

  /// Number of grid points, saturating at SIZE_MAX.
  std::size_t size() const;
  void validate() const;
};

inline constexpr std::size_t kMaxGridPoints = 10'000'000;

/// MRR@cutoff of the rerank set scored with the given bucket weights.
double rerank_mrr(const RerankSet& set, const Qrels& qrels, const std::vector<double>& weights, std::size_t cutoff = 10);

struct TuneResult {
  std::vector<double> weights;
  double mrr = 0.0;
  std::size_t evaluated_points = 0;
};

/// Exhaustive grid search maximizing MRR@cutoff; among equal maxima the
/// lexicographically smallest weight vector wins.
TuneResult tune_bucket_weights(const RerankSet& set, const Qrels& qrels, const WeightGrid& grid, std::size_t cutoff = 10);

struct OracleResult {
  double mrr = 0.0;
  std::map<std::string, std::size_t> chosen_bucket;  // qid -> best bucket
  std::vector<double> single_bucket_mrr;
};

/// Per query, the best reciprocal rank achievable by scoring with any one
/// bucket alone (lowest bucket index on ties).
OracleResult ideal_layer_oracle(const RerankSet& set, const Qrels& qrels, std::size_t cutoff = 10);

/// Colon-separated weights with up to 4 decimals, e.g. "1:0:0.3333".
std::string format_weights(const std::vector<double>& w);
std::vector<double> parse_weights(const std::string& text);

}  // namespace uhd
