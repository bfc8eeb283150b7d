#include "uhd/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "uhd/error.hpp"
#include "uhd/rng.hpp"

namespace uhd {

namespace {

std::string make_word(Rng& rng) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st", "pl"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::string w;
  const auto syllables = 2 + rng.below(2);
  for (std::uint64_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
  }
  return w;
}

std::string padded(char prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  return prefix + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') + digits;
}

void write_tsv(const std::string& path, const std::vector<SyntheticText>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& r : rows) out << r.id << '\t' << r.text << '\n';
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.topics == 0 || spec.docs < spec.topics || spec.held_out > spec.queries || spec.topic_words == 0 ||
      spec.max_query_len == 0 || spec.min_doc_len == 0 || spec.min_doc_len > spec.max_doc_len) {
    throw InvalidArgument("inconsistent synthetic corpus spec");
  }
  Rng rng(spec.seed);
  SyntheticCorpus c;
  std::set<std::string> used;
  auto fresh = [&] {
    for (;;) {
      auto w = make_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  c.topic_vocabulary.resize(spec.topics);
  for (auto& words : c.topic_vocabulary) {
    for (std::size_t i = 0; i < spec.topic_words; ++i) words.push_back(fresh());
  }
  std::vector<std::string> filler;
  for (std::size_t i = 0; i < spec.filler_words; ++i) filler.push_back(fresh());

  std::vector<std::vector<std::string>> docs_by_topic(spec.topics);
  for (std::size_t d = 0; d < spec.docs; ++d) {
    const std::size_t topic = d % spec.topics;
    const auto len = spec.min_doc_len + rng.below(spec.max_doc_len - spec.min_doc_len + 1);
    std::string text;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) text += ' ';
      const bool topical = filler.empty() || rng.uniform() < spec.topic_word_rate;
      text += topical ? c.topic_vocabulary[topic][rng.below(spec.topic_words)] : filler[rng.below(filler.size())];
    }
    c.docs.push_back({padded('d', d, 4), text, topic});
    docs_by_topic[topic].push_back(c.docs.back().id);
  }

  const std::size_t train_count = spec.queries - spec.held_out;
  for (std::size_t q = 0; q < spec.queries; ++q) {
    const std::size_t topic = q % spec.topics;
    const auto len = std::min<std::size_t>(1 + rng.below(spec.max_query_len), spec.topic_words);
    std::vector<std::string> words = c.topic_vocabulary[topic];
    rng.shuffle(words);
    std::string text;
    for (std::size_t i = 0; i < len; ++i) text += (i ? " " : "") + words[i];
    SyntheticText query{padded('q', q, 4), text, topic};
    c.qrels[query.id].insert(docs_by_topic[topic].begin(), docs_by_topic[topic].end());
    (q < train_count ? c.train_queries : c.heldout_queries).push_back(std::move(query));
  }

  for (const auto& q : c.train_queries) {
    for (const auto& pos : docs_by_topic[q.topic]) {
      std::size_t other = rng.below(spec.topics - 1);
      if (other >= q.topic) ++other;
      const auto& pool = docs_by_topic[spec.topics > 1 ? other : q.topic];
      c.triples.push_back({q.text, pos, pool[rng.below(pool.size())]});
    }
  }
  // Swap the document ids collected above for their texts.
  std::map<std::string, const std::string*> text_of;
  for (const auto& d : c.docs) text_of[d.id] = &d.text;
  for (auto& t : c.triples) {
    t.positive = *text_of.at(t.positive);
    t.negative = *text_of.at(t.negative);
  }

  for (const auto& q : c.heldout_queries) {
    std::vector<std::string> rel = docs_by_topic[q.topic];
    rng.shuffle(rel);
    rel.resize(std::min(spec.rerank_relevant, rel.size()));
    std::vector<std::string> others;
    for (const auto& d : c.docs) {
      if (d.topic != q.topic) others.push_back(d.id);
    }
    rng.shuffle(others);
    others.resize(std::min(spec.rerank_size - std::min(spec.rerank_size, rel.size()), others.size()));
    std::vector<std::string> cands = rel;
    cands.insert(cands.end(), others.begin(), others.end());
    std::sort(cands.begin(), cands.end());
    c.rerank[q.id] = std::move(cands);
  }
  return c;
}

void write_synthetic_corpus(const SyntheticCorpus& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_tsv(dir + "/collection.tsv", c.docs);
  write_tsv(dir + "/queries.train.tsv", c.train_queries);
  write_tsv(dir + "/queries.heldout.tsv", c.heldout_queries);
  std::vector<SyntheticText> all = c.train_queries;
  all.insert(all.end(), c.heldout_queries.begin(), c.heldout_queries.end());
  write_tsv(dir + "/queries.tsv", all);
  {
    std::ofstream out(dir + "/qrels.txt");
    for (const auto& [qid, docs] : c.qrels) {
      for (const auto& d : docs) out << qid << " 0 " << d << " 1\n";
    }
  }
  {
    std::ofstream out(dir + "/triples.tsv");
    for (const auto& t : c.triples) out << t.query << '\t' << t.positive << '\t' << t.negative << '\n';
  }
  {
    std::ofstream out(dir + "/rerank.run");
    for (const auto& [qid, cands] : c.rerank) {
      for (std::size_t i = 0; i < cands.size(); ++i) out << qid << " Q0 " << cands[i] << ' ' << (i + 1) << " 0 candidates\n";
    }
  }
}

}  // namespace uhd
