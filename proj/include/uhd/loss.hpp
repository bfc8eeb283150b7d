#pragma once

#include <cstddef>
#include <vector>

#include "uhd/bucketed.hpp"
#include "uhd/error.hpp"

namespace uhd {

/// max(0, 1 - pos + neg)
inline double hinge_loss(double rel_pos, double rel_neg) {
  const double v = 1.0 - rel_pos + rel_neg;
  return v > 0.0 ? v : 0.0;
}

struct BatchLossReport {
  double mean_loss = 0.0;
  std::size_t active_pairs = 0;  // pairs with nonzero loss
  std::size_t pairs = 0;
  double mean_pos = 0.0;
  double mean_neg = 0.0;
};

/// Loss and dLoss/dScore for a B x D score matrix where column i < B is
/// query i's positive and every other column is one of its negatives.
/// The loss is the mean hinge over all (query, negative) pairs.
struct ScoredBatchLoss {
  BatchLossReport report;
  std::vector<std::vector<double>> grad;
};

ScoredBatchLoss batch_loss_from_scores(const std::vector<std::vector<double>>& scores);

/// In-batch negatives: the positives of the other queries serve as each
/// query's negatives. `extra_negatives`, when given, join every query's
/// negative set.
template <typename Scalar>
std::vector<std::vector<double>> batch_scores(const std::vector<BucketedRepresentation<Scalar>>& queries,
                                              const std::vector<BucketedRepresentation<Scalar>>& positives,
                                              const std::vector<BucketedRepresentation<Scalar>>& extra_negatives = {}) {
  if (queries.size() != positives.size()) throw InvalidArgument("batch_loss: query/positive count mismatch");
  if (queries.size() < 2) throw InvalidArgument("batch_loss: in-batch negatives require batch size >= 2");
  const std::size_t b = queries.size();
  std::vector<std::vector<double>> s(b, std::vector<double>(b + extra_negatives.size()));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) s[i][j] = relevance(queries[i], positives[j]);
    for (std::size_t j = 0; j < extra_negatives.size(); ++j) s[i][b + j] = relevance(queries[i], extra_negatives[j]);
  }
  return s;
}

template <typename Scalar>
BatchLossReport batch_loss(const std::vector<BucketedRepresentation<Scalar>>& queries,
                           const std::vector<BucketedRepresentation<Scalar>>& positives,
                           const std::vector<BucketedRepresentation<Scalar>>& extra_negatives = {}) {
  return batch_loss_from_scores(batch_scores(queries, positives, extra_negatives)).report;
}

/// Adds g * dRel(q, d)/dq and g * dRel(q, d)/dd into per-bucket gradient
/// arrays aligned with the entries of q and d.
template <typename Scalar>
void relevance_backward(const BucketedRepresentation<Scalar>& q, const BucketedRepresentation<Scalar>& d, double g,
                        std::vector<std::vector<double>>& grad_q, std::vector<std::vector<double>>& grad_d) {
  if (g == 0.0) return;
  for (std::size_t b = 0; b < q.size(); ++b) {
    const double w = q[b].descriptor.weight;
    if (w == 0.0) continue;
    const auto& qe = q[b].vector.entries();
    const auto& de = d[b].vector.entries();
    std::size_t iq = 0, id = 0;
    while (iq < qe.size() && id < de.size()) {
      if (qe[iq].dim < de[id].dim) {
        ++iq;
      } else if (de[id].dim < qe[iq].dim) {
        ++id;
      } else {
        grad_q[b][iq] += g * w * static_cast<double>(de[id].weight);
        grad_d[b][id] += g * w * static_cast<double>(qe[iq].weight);
        ++iq;
        ++id;
      }
    }
  }
}

}  // namespace uhd
