#include "uhd/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uhd/error.hpp"

namespace uhd {

RerankSet make_rerank_set(const std::map<std::string, BucketedRepresentation<float>>& queries,
                          const std::map<std::string, std::vector<std::string>>& candidates,
                          const std::map<std::string, BucketedRepresentation<float>>& docs) {
  RerankSet set;
  for (const auto& [qid, cands] : candidates) {
    auto q = queries.find(qid);
    if (q == queries.end()) continue;
    RerankQuery rq{qid, {}};
    for (const auto& doc : cands) {
      auto d = docs.find(doc);
      if (d == docs.end()) continue;
      rq.candidates.push_back({doc, bucket_dots(q->second, d->second)});
    }
    set.push_back(std::move(rq));
  }
  return set;
}

WeightGrid WeightGrid::thirds(std::size_t buckets) { return uniform(buckets, {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}); }

WeightGrid WeightGrid::uniform(std::size_t buckets, std::vector<double> values) {
  return WeightGrid{std::vector<std::vector<double>>(buckets, std::move(values))};
}

std::size_t WeightGrid::size() const {
  std::size_t total = 1;
  for (const auto& c : per_bucket) {
    if (c.empty()) return 0;
    if (total > std::numeric_limits<std::size_t>::max() / c.size()) return std::numeric_limits<std::size_t>::max();
    total *= c.size();
  }
  return total;
}

void WeightGrid::validate() const {
  if (per_bucket.empty()) throw InvalidArgument("weight grid has no buckets");
  bool any_nonzero = false;
  for (const auto& c : per_bucket) {
    if (c.empty()) throw InvalidArgument("weight grid has a bucket without candidates");
    for (double v : c) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("weight grid candidates must be finite and >= 0");
    }
  }
  // A nonzero combination exists unless every bucket only offers zero.
  for (const auto& c : per_bucket) {
    any_nonzero = any_nonzero || std::any_of(c.begin(), c.end(), [](double v) { return v > 0.0; });
  }
  if (!any_nonzero) throw InvalidArgument("weight grid has no nonzero combination");
  if (size() > kMaxGridPoints) {
    throw InvalidArgument("weight grid has more than " + std::to_string(kMaxGridPoints) + " combinations");
  }
}

double rerank_mrr(const RerankSet& set, const Qrels& qrels, const std::vector<double>& weights, std::size_t cutoff) {
  double sum = 0.0;
  std::size_t evaluated = 0;
  std::vector<RankedDoc> ranking;
  for (const auto& q : set) {
    auto rel = qrels.find(q.qid);
    if (rel == qrels.end() || rel->second.empty()) continue;
    ranking.clear();
    for (const auto& c : q.candidates) {
      if (c.bucket_dots.size() != weights.size()) throw InvalidArgument("rerank weights do not match bucket count");
      double s = 0.0;
      for (std::size_t b = 0; b < weights.size(); ++b) s += weights[b] * c.bucket_dots[b];
      ranking.push_back({c.doc, s});
    }
    sum += reciprocal_rank(rank_documents(std::move(ranking)), rel->second, cutoff);
    ranking = {};
    ++evaluated;
  }
  return evaluated ? sum / static_cast<double>(evaluated) : 0.0;
}

TuneResult tune_bucket_weights(const RerankSet& set, const Qrels& qrels, const WeightGrid& grid, std::size_t cutoff) {
  grid.validate();
  std::vector<std::vector<double>> axes = grid.per_bucket;
  for (auto& a : axes) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  TuneResult best;
  if (std::all_of(axes.begin(), axes.end(), [](const auto& a) { return a.size() == 1; })) {
    for (const auto& a : axes) best.weights.push_back(a.front());
    best.evaluated_points = 1;
    best.mrr = rerank_mrr(set, qrels, best.weights, cutoff);
    return best;
  }
  // Odometer over the grid in lexicographic order; strict improvement keeps
  // the lexicographically smallest maximizer.
  std::vector<std::size_t> pos(axes.size(), 0);
  std::vector<double> w(axes.size());
  best.mrr = -1.0;
  for (;;) {
    for (std::size_t b = 0; b < axes.size(); ++b) w[b] = axes[b][pos[b]];
    if (std::any_of(w.begin(), w.end(), [](double v) { return v > 0.0; })) {
      const double m = rerank_mrr(set, qrels, w, cutoff);
      ++best.evaluated_points;
      if (m > best.mrr) {
        best.mrr = m;
        best.weights = w;
      }
    }
    std::size_t b = axes.size();
    while (b > 0) {
      --b;
      if (++pos[b] < axes[b].size()) break;
      pos[b] = 0;
      if (b == 0) return best;
    }
  }
}

OracleResult ideal_layer_oracle(const RerankSet& set, const Qrels& qrels, std::size_t cutoff) {
  OracleResult out;
  std::size_t buckets = 0;
  for (const auto& q : set) {
    for (const auto& c : q.candidates) buckets = std::max(buckets, c.bucket_dots.size());
  }
  if (buckets < 2) throw InvalidArgument("ideal_layer_oracle needs at least two buckets");
  out.single_bucket_mrr.assign(buckets, 0.0);
  double sum = 0.0;
  std::size_t evaluated = 0;
  for (const auto& q : set) {
    auto rel = qrels.find(q.qid);
    if (rel == qrels.end() || rel->second.empty()) continue;
    double best = -1.0;
    std::size_t best_bucket = 0;
    for (std::size_t b = 0; b < buckets; ++b) {
      std::vector<RankedDoc> ranking;
      for (const auto& c : q.candidates) ranking.push_back({c.doc, c.bucket_dots.at(b)});
      const double rr = reciprocal_rank(rank_documents(std::move(ranking)), rel->second, cutoff);
      out.single_bucket_mrr[b] += rr;
      if (rr > best) {
        best = rr;
        best_bucket = b;
      }
    }
    out.chosen_bucket[q.qid] = best_bucket;
    sum += best;
    ++evaluated;
  }
  if (evaluated) {
    out.mrr = sum / static_cast<double>(evaluated);
    for (auto& m : out.single_bucket_mrr) m /= static_cast<double>(evaluated);
  }
  return out;
}

std::string format_weights(const std::vector<double>& w) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) ss << ':';
    const double r = std::round(w[i] * 10000.0) / 10000.0;
    ss << r;
  }
  return ss.str();
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("bad weight '" + part + "' in '" + text + "'");
    }
    if (!(out.back() >= 0.0)) throw InvalidArgument("bucket weights must be >= 0");
  }
  if (out.empty()) throw InvalidArgument("empty weight list");
  return out;
}

}  // namespace uhd
