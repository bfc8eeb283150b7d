#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uhd/bucketed.hpp"

namespace uhd {

/// Fraction of nonzero dimensions over all buckets: sum nnz / sum n.
double density(const BucketedRepresentation<float>& rep);

struct LengthDensity {
  std::size_t token_length = 0;
  const BucketedRepresentation<float>* rep = nullptr;
};

/// token length -> mean density of representations with that length.
std::map<std::size_t, double> density_profile(const std::vector<LengthDensity>& items);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// dim -> number of representations whose bucket `bucket` is nonzero there.
std::map<Dim, std::size_t> activation_frequency(const std::vector<const BucketedRepresentation<float>*>& reps,
                                                std::size_t bucket);

struct TermCount {
  std::string term;
  std::size_t count = 0;
};

struct QueryTerms {
  std::vector<std::string> terms;
  const BucketedRepresentation<float>* rep = nullptr;
};

inline constexpr std::size_t kDefaultMinTermCount = 5;

/// For every dimension of bucket `bucket`, the query terms co-occurring with
/// its activation, counted over activating queries, kept when the count is
/// at least `min_term_count`, ranked by count (ties by term). Dimensions
/// without any surviving term are absent.
std::map<Dim, std::vector<TermCount>> interpret_dimensions(const std::vector<QueryTerms>& queries, std::size_t bucket,
                                                           std::size_t min_term_count = kDefaultMinTermCount);

}  // namespace uhd
