#include "uhd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "uhd/error.hpp"

namespace uhd {

namespace {

std::vector<std::string> fields_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

std::string where(const std::string& context, std::size_t line) { return context + ":" + std::to_string(line) + ": "; }

}  // namespace

Qrels parse_qrels(std::istream& in, const std::string& context) {
  Qrels q;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto f = fields_of(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw DataError(where(context, no) + "expected 'qid 0 docid rel'");
    long rel = 0;
    try {
      std::size_t used = 0;
      rel = std::stol(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(where(context, no) + "relevance '" + f[3] + "' is not an integer");
    }
    auto& rel_set = q[f[0]];
    if (rel > 0) rel_set.insert(f[2]);
  }
  return q;
}

Qrels read_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open qrels " + path);
  return parse_qrels(in, path);
}

Run parse_run(std::istream& in, const std::string& context) {
  std::map<std::string, std::vector<std::pair<std::size_t, RankedDoc>>> raw;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto f = fields_of(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw DataError(where(context, no) + "expected 'qid Q0 docid rank score tag'");
    std::size_t rank = 0;
    double score = 0.0;
    try {
      rank = std::stoul(f[3]);
      score = std::stod(f[4]);
    } catch (const std::exception&) {
      throw DataError(where(context, no) + "rank or score is not numeric");
    }
    if (!std::isfinite(score)) throw DataError(where(context, no) + "nonfinite score");
    raw[f[0]].push_back({rank, {f[2], score}});
  }
  Run run;
  for (auto& [qid, entries] : raw) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& out = run[qid];
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first != i + 1) throw DataError(context + ": query " + qid + ": ranks not contiguous from 1");
      if (i > 0 && entries[i].second.score > entries[i - 1].second.score) {
        throw DataError(context + ": query " + qid + ": scores increase with rank");
      }
      out.push_back(std::move(entries[i].second));
    }
  }
  return run;
}

Run read_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open run file " + path);
  return parse_run(in, path);
}

void write_run(const Run& run, std::ostream& out, const std::string& tag) {
  out << std::setprecision(9);
  for (const auto& [qid, docs] : run) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      out << qid << " Q0 " << docs[i].doc << ' ' << (i + 1) << ' ' << docs[i].score << ' ' << tag << '\n';
    }
  }
}

std::vector<RankedDoc> rank_documents(std::vector<RankedDoc> docs) {
  std::sort(docs.begin(), docs.end(), [](const RankedDoc& a, const RankedDoc& b) {
    return a.score > b.score || (a.score == b.score && a.doc < b.doc);
  });
  return docs;
}

double reciprocal_rank(const std::vector<RankedDoc>& ranking, const std::set<std::string>& relevant, std::size_t cutoff) {
  const std::size_t limit = std::min(cutoff, ranking.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (relevant.count(ranking[i].doc)) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

MetricResult mrr_at(const Run& run, const Qrels& qrels, std::size_t cutoff) {
  if (cutoff == 0) throw InvalidArgument("mrr cutoff must be >= 1");
  MetricResult r;
  double sum = 0.0;
  for (const auto& [qid, docs] : run) {
    auto it = qrels.find(qid);
    if (it == qrels.end() || it->second.empty()) {
      ++r.skipped;
      continue;
    }
    sum += reciprocal_rank(docs, it->second, cutoff);
    ++r.evaluated;
  }
  r.value = r.evaluated ? sum / static_cast<double>(r.evaluated) : 0.0;
  return r;
}

MetricResult recall_at(const Run& run, const Qrels& qrels, std::size_t cutoff) {
  if (cutoff == 0) throw InvalidArgument("recall cutoff must be >= 1");
  MetricResult r;
  double sum = 0.0;
  for (const auto& [qid, docs] : run) {
    auto it = qrels.find(qid);
    if (it == qrels.end() || it->second.empty()) {
      ++r.skipped;
      continue;
    }
    std::size_t found = 0;
    const std::size_t limit = std::min(cutoff, docs.size());
    for (std::size_t i = 0; i < limit; ++i) found += it->second.count(docs[i].doc);
    sum += static_cast<double>(found) / static_cast<double>(it->second.size());
    ++r.evaluated;
  }
  r.value = r.evaluated ? sum / static_cast<double>(r.evaluated) : 0.0;
  return r;
}

}  // namespace uhd
