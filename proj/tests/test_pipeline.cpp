#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "uhd/error.hpp"
#include "uhd/pipeline.hpp"
#include "uhd/synthetic.hpp"
#include "uhd/trainer.hpp"

using namespace uhd;

namespace {

std::set<std::string> words_of(const std::string& text) {
  std::istringstream in(text);
  std::set<std::string> out;
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.topics = 5;
  s.docs = 60;
  s.queries = 40;
  s.held_out = 10;
  s.rerank_size = 12;
  s.rerank_relevant = 3;
  return s;
}

Model<float> small_model(const SyntheticCorpus& c) {
  TrainConfig cfg = parse_train_config(R"({"h": 8, "n": 128, "k": 6, "weight_sparsity": 0.3, "layers": [1],
    "mode": "single", "batch_size": 4, "steps": 40, "lr": 0.01, "warmup_steps": 4, "seed": 9})");
  std::vector<TrainingTriple> triples;
  for (const auto& t : c.triples) triples.push_back({t.query, t.positive, t.negative, 0});
  return train(triples, cfg).model;
}

std::vector<IdText> as_id_text(const std::vector<SyntheticText>& rows) {
  std::vector<IdText> out;
  for (const auto& r : rows) out.push_back({r.id, r.text});
  return out;
}

}  // namespace

TEST_CASE("synthetic corpus is topic-separable and deterministic") {
  const auto spec = small_spec();
  const auto c = generate_synthetic_corpus(spec);
  CHECK(c.docs.size() == 60);
  CHECK(c.train_queries.size() == 30);
  CHECK(c.heldout_queries.size() == 10);

  std::set<std::string> all_topic;
  for (const auto& v : c.topic_vocabulary) {
    CHECK(v.size() == spec.topic_words);
    for (const auto& w : v) CHECK(all_topic.insert(w).second);
  }
  for (const auto* set : {&c.train_queries, &c.heldout_queries}) {
    for (const auto& q : *set) {
      const auto& vocab = c.topic_vocabulary[q.topic];
      for (const auto& w : words_of(q.text)) CHECK(std::find(vocab.begin(), vocab.end(), w) != vocab.end());
      std::set<std::string> expected;
      for (const auto& d : c.docs) {
        if (d.topic == q.topic) expected.insert(d.id);
      }
      CHECK(c.qrels.at(q.id) == expected);
    }
  }

  std::set<std::string> heldout_text;
  for (const auto& q : c.heldout_queries) heldout_text.insert(q.text);
  std::set<std::string> doc_text;
  for (const auto& d : c.docs) doc_text.insert(d.text);
  for (const auto& t : c.triples) {
    CHECK(doc_text.count(t.positive) == 1);
    CHECK(doc_text.count(t.negative) == 1);
  }

  for (const auto& q : c.heldout_queries) {
    const auto& cands = c.rerank.at(q.id);
    CHECK(cands.size() == spec.rerank_size);
    std::size_t relevant = 0;
    for (const auto& d : cands) relevant += c.qrels.at(q.id).count(d);
    CHECK(relevant == spec.rerank_relevant);
  }

  const auto again = generate_synthetic_corpus(spec);
  CHECK(again.docs.back().text == c.docs.back().text);
  CHECK(again.triples.back().negative == c.triples.back().negative);

  auto bad = spec;
  bad.held_out = bad.queries + 1;
  CHECK_THROWS_AS(generate_synthetic_corpus(bad), InvalidArgument);
}

TEST_CASE("read_id_text reports the bad line") {
  testing::TempDir dir("pipeline");
  std::ofstream(dir.file("a.tsv")) << "x\tone two\ny\tthree\n";
  const auto rows = read_id_text(dir.file("a.tsv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].id == "y");
  CHECK(rows[1].text == "three");
  std::ofstream(dir.file("b.tsv")) << "x\tone\nno tab here\n";
  CHECK_THROWS_WITH_AS(read_id_text(dir.file("b.tsv")), doctest::Contains("b.tsv:2"), DataError);
}

TEST_CASE("pipeline helpers agree with the single-query paths") {
  const auto c = generate_synthetic_corpus(small_spec());
  const auto model = small_model(c);
  const auto docs = as_id_text(c.docs);
  const auto queries = as_id_text(c.heldout_queries);

  const auto clamped = with_infer_k(model, 100000);
  CHECK(clamped.plan[0].wta.infer_k() == 128);
  CHECK(with_infer_k(model, 3).plan[0].wta.infer_k() == 3);

  const auto dreps = encode_texts(model, docs, false, 3);
  CHECK(dreps[7][0].vector == model.encode_text(docs[7].text, false)[0].vector);
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  const auto index = index_representations(model.plan.descriptors(), ids, dreps);

  const auto qreps = encode_texts(model, queries, true);
  std::vector<std::string> qids;
  for (const auto& q : queries) qids.push_back(q.id);
  const auto run = search_all(index, qids, qreps, 20, std::nullopt, 2);
  for (std::size_t i = 0; i < qids.size(); ++i) {
    const auto single = search(index, qreps[i], 20);
    const auto& got = run.at(qids[i]);
    REQUIRE(got.size() == single.size());
    for (std::size_t r = 0; r < got.size(); ++r) CHECK(got[r].doc == single[r].id);
  }

  CHECK_THROWS_AS(encode_texts(model, {{"e", "   "}}, true), DataError);

  const auto sweep = k_sweep(model, docs, queries, c.qrels, {2, 4, 6});
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].postings < sweep[1].postings);
  CHECK(sweep[1].postings < sweep[2].postings);
  CHECK(sweep[2].postings == index.posting_count());
}
