#include "uhd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uhd/error.hpp"

namespace uhd {

double density(const BucketedRepresentation<float>& rep) {
  const auto dim = rep.total_dim();
  return dim ? static_cast<double>(rep.total_nnz()) / static_cast<double>(dim) : 0.0;
}

std::map<std::size_t, double> density_profile(const std::vector<LengthDensity>& items) {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& it : items) {
    auto& a = acc[it.token_length];
    a.first += density(*it.rep);
    ++a.second;
  }
  std::map<std::size_t, double> out;
  for (const auto& [len, a] : acc) out[len] = a.first / static_cast<double>(a.second);
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs two equal-length series of >= 2");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::map<Dim, std::size_t> activation_frequency(const std::vector<const BucketedRepresentation<float>*>& reps,
                                                std::size_t bucket) {
  std::map<Dim, std::size_t> freq;
  for (const auto* r : reps) {
    for (const auto& e : (*r)[bucket].vector) ++freq[e.dim];
  }
  return freq;
}

std::map<Dim, std::vector<TermCount>> interpret_dimensions(const std::vector<QueryTerms>& queries, std::size_t bucket,
                                                           std::size_t min_term_count) {
  std::map<Dim, std::map<std::string, std::size_t>> counts;
  for (const auto& q : queries) {
    if (bucket >= q.rep->size()) throw InvalidArgument("interpret_dimensions: bucket index out of range");
    for (const auto& e : (*q.rep)[bucket].vector) {
      auto& c = counts[e.dim];
      for (const auto& t : q.terms) ++c[t];
    }
  }
  std::map<Dim, std::vector<TermCount>> out;
  for (const auto& [dim, terms] : counts) {
    std::vector<TermCount> kept;
    for (const auto& [t, c] : terms) {
      if (c >= min_term_count) kept.push_back({t, c});
    }
    if (kept.empty()) continue;
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
    out[dim] = std::move(kept);
  }
  return out;
}

}  // namespace uhd
