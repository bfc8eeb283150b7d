#include "uhd/pipeline.hpp"

#include <fstream>

#include "uhd/error.hpp"
#include "uhd/parallel.hpp"

namespace uhd {

std::vector<IdText> read_id_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<IdText> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(path + ":" + std::to_string(no) + ": expected 'id TAB text'");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

Model<float> with_infer_k(const Model<float>& model, std::size_t k) {
  Model<float> m = model;
  m.plan.set_infer_k(k);
  return m;
}

std::vector<BucketedRepresentation<float>> encode_texts(const Model<float>& model, const std::vector<IdText>& texts,
                                                        bool is_query, std::size_t threads) {
  std::vector<BucketedRepresentation<float>> out(texts.size());
  parallel_for(texts.size(), threads, [&](std::size_t i) {
    try {
      out[i] = model.encode_text(texts[i].text, is_query);
    } catch (const EmptyInput&) {
      throw DataError((is_query ? "query " : "document ") + texts[i].id + " has no tokens");
    }
  });
  return out;
}

std::vector<BucketedRepresentation<float>> encode_embeddings(const Model<float>& model,
                                                             const std::vector<EmbeddingRecord>& records,
                                                             std::size_t threads) {
  for (const auto& e : model.plan) {
    for (const auto& r : records) {
      if (r.layers.front().values.cols() != static_cast<Eigen::Index>(e.wta.input_size())) {
        throw DataError("embedding hidden size " + std::to_string(r.layers.front().values.cols()) +
                        " does not match checkpoint h=" + std::to_string(e.wta.input_size()));
      }
      if (e.layer > r.layers.size()) {
        throw DataError("checkpoint reads layer " + std::to_string(e.layer) + " but embeddings have " +
                        std::to_string(r.layers.size()));
      }
    }
  }
  std::vector<BucketedRepresentation<float>> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) { out[i] = model.encode_dense(records[i].layers); });
  return out;
}

InvertedIndex index_representations(const std::vector<BucketDescriptor>& structure, const std::vector<std::string>& ids,
                                    const std::vector<BucketedRepresentation<float>>& reps) {
  if (ids.size() != reps.size()) throw InvalidArgument("id/representation count mismatch");
  IndexBuilder builder(structure);
  for (std::size_t i = 0; i < ids.size(); ++i) builder.add(ids[i], reps[i]);
  return std::move(builder).finish();
}

Run search_all(const InvertedIndex& index, const std::vector<std::string>& qids,
               std::vector<BucketedRepresentation<float>> queries, std::size_t k,
               const std::optional<std::vector<float>>& weights, std::size_t threads) {
  if (qids.size() != queries.size()) throw InvalidArgument("query id/representation count mismatch");
  const auto stored = index.descriptors();
  std::vector<float> w;
  if (weights) {
    w = *weights;
  } else {
    for (const auto& d : stored) w.push_back(d.weight);
  }
  std::vector<SearchResult> results(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    if (!w.empty()) queries[i].set_weights(w);
    results[i] = search(index, queries[i], k);
  });
  Run run;
  for (std::size_t i = 0; i < qids.size(); ++i) {
    auto& ranking = run[qids[i]];
    for (const auto& r : results[i]) ranking.push_back({r.id, r.score});
  }
  return run;
}

std::vector<SweepPoint> k_sweep(const Model<float>& model, const std::vector<IdText>& docs,
                                const std::vector<IdText>& queries, const Qrels& qrels,
                                const std::vector<std::size_t>& ks, std::size_t depth, std::size_t threads) {
  std::vector<std::string> doc_ids, qids;
  for (const auto& d : docs) doc_ids.push_back(d.id);
  for (const auto& q : queries) qids.push_back(q.id);
  std::vector<SweepPoint> out;
  for (auto k : ks) {
    const auto m = with_infer_k(model, k);
    const auto index = index_representations(m.plan.descriptors(), doc_ids, encode_texts(m, docs, false, threads));
    const auto run = search_all(index, qids, encode_texts(m, queries, true, threads), depth, std::nullopt, threads);
    out.push_back({k, mrr_at(run, qrels, 10).value, index.posting_count()});
  }
  return out;
}

}  // namespace uhd
