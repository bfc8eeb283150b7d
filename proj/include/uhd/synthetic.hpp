#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace uhd {

/// Parameters of the topic-separable synthetic corpus. Every topic owns a
/// disjoint set of content words; documents mix their topic's words with
/// shared filler; queries name one topic with 1..max_query_len distinct
/// topic words.
struct SyntheticSpec {
  std::size_t topics = 20;
  std::size_t docs = 500;
  std::size_t queries = 200;
  std::size_t held_out = 50;          // the last queries, never trained on
  std::size_t topic_words = 8;
  std::size_t filler_words = 40;
  std::size_t min_doc_len = 20;
  std::size_t max_doc_len = 40;
  double topic_word_rate = 0.5;       // chance a document token is a topic word
  std::size_t max_query_len = 8;
  std::size_t rerank_relevant = 5;    // relevant docs in each rerank list
  std::size_t rerank_size = 50;
  std::uint64_t seed = 20210101;
};

struct SyntheticText {
  std::string id;
  std::string text;
  std::size_t topic = 0;
};

struct SyntheticCorpus {
  std::vector<SyntheticText> docs;
  std::vector<SyntheticText> train_queries;
  std::vector<SyntheticText> heldout_queries;
  std::map<std::string, std::set<std::string>> qrels;  // every doc of the query's topic
  struct Triple {
    std::string query, positive, negative;
  };
  std::vector<Triple> triples;                          // training queries only
  std::map<std::string, std::vector<std::string>> rerank;  // held-out qid -> candidates
  std::vector<std::vector<std::string>> topic_vocabulary;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec = {});

/// Writes collection.tsv, queries.train.tsv, queries.heldout.tsv,
/// queries.tsv, qrels.txt, triples.tsv and rerank.run into `dir`.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::string& dir);

}  // namespace uhd
