#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace uhd {

/// query id -> relevant doc ids
using Qrels = std::map<std::string, std::set<std::string>>;

struct RankedDoc {
  std::string doc;
  double score = 0.0;
};

/// query id -> documents in rank order (rank 1 first).
using Run = std::map<std::string, std::vector<RankedDoc>>;

/// Reads `qid 0 docid rel` lines; rel > 0 marks a relevant document.
Qrels parse_qrels(std::istream& in, const std::string& context);
Qrels read_qrels(const std::string& path);

/// Reads `qid Q0 docid rank score tag` lines; ranks must be contiguous
/// from 1 and scores non-increasing.
Run parse_run(std::istream& in, const std::string& context);
Run read_run(const std::string& path);
void write_run(const Run& run, std::ostream& out, const std::string& tag = "uhd");

/// Orders (doc, score) pairs by descending score, ties by ascending doc id.
std::vector<RankedDoc> rank_documents(std::vector<RankedDoc> docs);

struct MetricResult {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // run queries without judgments
};

/// Mean reciprocal rank of the first relevant document within `cutoff`.
MetricResult mrr_at(const Run& run, const Qrels& qrels, std::size_t cutoff = 10);

/// Mean fraction of relevant documents found within `cutoff`.
MetricResult recall_at(const Run& run, const Qrels& qrels, std::size_t cutoff);

/// Reciprocal rank of the first relevant entry in `ranking` within cutoff.
double reciprocal_rank(const std::vector<RankedDoc>& ranking, const std::set<std::string>& relevant, std::size_t cutoff);

}  // namespace uhd
