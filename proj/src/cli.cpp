#include "uhd/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "uhd/analysis.hpp"
#include "uhd/checkpoint.hpp"
#include "uhd/embedding_file.hpp"
#include "uhd/error.hpp"
#include "uhd/eval.hpp"
#include "uhd/gradient_audit.hpp"
#include "uhd/index_io.hpp"
#include "uhd/parallel.hpp"
#include "uhd/pipeline.hpp"
#include "uhd/synthetic.hpp"
#include "uhd/trainer.hpp"
#include "uhd/tuning.hpp"

namespace uhd {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void check_structure(const Model<float>& model, const InvertedIndex& index) {
  const auto a = model.plan.descriptors();
  const auto b = index.descriptors();
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].same_slot(b[i]);
  if (!same) throw DataError("checkpoint bucket structure does not match the index");
}

Model<float> load_model(const std::string& path, std::size_t infer_k) {
  auto model = read_checkpoint(path);
  if (infer_k > 0) model = with_infer_k(model, infer_k);
  return model;
}

std::vector<float> weights_for(const std::string& text, std::size_t buckets) {
  const auto w = parse_weights(text);
  if (w.size() != buckets) {
    throw InvalidArgument("--weights has " + std::to_string(w.size()) + " entries, index has " +
                          std::to_string(buckets) + " buckets");
  }
  return {w.begin(), w.end()};
}

WeightGrid grid_for(const std::string& spec, std::size_t buckets) {
  if (spec == "thirds") return WeightGrid::thirds(buckets);
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad --grid value '" + item + "'");
    }
  }
  return WeightGrid::uniform(buckets, values);
}

std::vector<std::string> ids_of(const std::vector<IdText>& items) {
  std::vector<std::string> ids;
  for (const auto& i : items) ids.push_back(i.id);
  return ids;
}

struct Options {
  std::string triples, config, out, log, checkpoint, collection, embeddings, index, query, queries, run, qrels,
      candidates, grid = "thirds", weights, density, frequency, interpret, ks = "4,8,16";
  std::uint64_t seed = 0;
  bool seed_set = false, oracle = false, stats = false;
  std::size_t threads = default_threads(), infer_k = 0, k = 10, depth = 100, bucket = 0,
              min_count = kDefaultMinTermCount, instances = 20, mrr_cutoff = 10, recall_cutoff = 100;
};

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = read_train_config(o.config);
  if (o.seed_set) cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.validate();
  const auto triples = read_triples(o.triples);
  const std::size_t every = std::max<std::size_t>(1, cfg.steps / 10);
  const auto result = train(triples, cfg, [&](const LossLogRow& row) {
    if (row.step % every == 0) err << "step " << row.step << " loss " << fixed(row.report.mean_loss, 6) << "\n";
  });
  write_checkpoint(result.model, o.out);
  auto log = open_output(o.log.empty() ? o.out + ".loss.csv" : o.log);
  write_loss_log(result.log, log);
  out << "steps\t" << result.log.size() << "\n";
  if (!result.log.empty()) out << "final_loss\t" << fixed(result.log.back().report.mean_loss, 6) << "\n";
  return kExitOk;
}

int cmd_index(const Options& o, std::ostream& out) {
  const auto model = load_model(o.checkpoint, o.infer_k);
  std::vector<std::string> ids;
  std::vector<BucketedRepresentation<float>> reps;
  if (!o.embeddings.empty()) {
    const auto records = read_embedding_file(o.embeddings);
    for (const auto& r : records) ids.push_back(r.id);
    reps = encode_embeddings(model, records, o.threads);
  } else {
    const auto docs = read_id_text(o.collection);
    ids = ids_of(docs);
    reps = encode_texts(model, docs, false, o.threads);
  }
  const auto index = index_representations(model.plan.descriptors(), ids, reps);
  write_index(index, o.out);
  out << "docs\t" << index.doc_count() << "\n";
  out << "postings\t" << index.posting_count() << "\n";
  return kExitOk;
}

int cmd_search(const Options& o, std::ostream& out) {
  const auto index = read_index(o.index);
  const auto model = load_model(o.checkpoint, o.infer_k);
  check_structure(model, index);
  std::optional<std::vector<float>> weights;
  if (!o.weights.empty()) weights = weights_for(o.weights, index.buckets().size());
  if (!o.query.empty()) {
    const auto run = search_all(index, {"query"}, {model.encode_text(o.query, true)}, o.k, weights, 1);
    std::size_t rank = 0;
    for (const auto& d : run.at("query")) out << ++rank << " " << d.doc << " " << fixed(d.score, 6) << "\n";
    return kExitOk;
  }
  const auto queries = read_id_text(o.queries);
  const auto run = search_all(index, ids_of(queries), encode_texts(model, queries, true, o.threads), o.k, weights,
                              o.threads);
  if (o.out.empty()) {
    write_run(run, out);
  } else {
    auto f = open_output(o.out);
    write_run(run, f);
  }
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto run = read_run(o.run);
  const auto qrels = read_qrels(o.qrels);
  const auto mrr = mrr_at(run, qrels, o.mrr_cutoff);
  const auto recall = recall_at(run, qrels, o.recall_cutoff);
  out << "mrr@" << o.mrr_cutoff << "\t" << fixed(mrr.value, 4) << "\n";
  out << "recall@" << o.recall_cutoff << "\t" << fixed(recall.value, 4) << "\n";
  out << "queries\t" << mrr.evaluated << "\n";
  return kExitOk;
}

std::map<std::string, BucketedRepresentation<float>> encode_map(const Model<float>& model,
                                                                const std::vector<IdText>& items, bool is_query,
                                                                std::size_t threads) {
  const auto reps = encode_texts(model, items, is_query, threads);
  std::map<std::string, BucketedRepresentation<float>> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!out.emplace(items[i].id, reps[i]).second) throw DataError("duplicate id " + items[i].id);
  }
  return out;
}

int cmd_tune(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = load_model(o.checkpoint, o.infer_k);
  const auto qrels = read_qrels(o.qrels);
  const auto candidates_run = read_run(o.candidates);
  std::map<std::string, std::vector<std::string>> candidates;
  std::set<std::string> wanted_docs;
  for (const auto& [qid, ranking] : candidates_run) {
    for (const auto& d : ranking) {
      candidates[qid].push_back(d.doc);
      wanted_docs.insert(d.doc);
    }
  }
  std::vector<IdText> docs, queries;
  for (auto& d : read_id_text(o.collection)) {
    if (wanted_docs.count(d.id)) docs.push_back(std::move(d));
  }
  for (auto& q : read_id_text(o.queries)) {
    if (candidates.count(q.id)) queries.push_back(std::move(q));
  }
  const auto set = make_rerank_set(encode_map(model, queries, true, o.threads), candidates,
                                   encode_map(model, docs, false, o.threads));
  const auto buckets = model.plan.size();
  const auto grid = grid_for(o.grid, buckets);
  const auto tuned = tune_bucket_weights(set, qrels, grid);
  out << format_weights(tuned.weights) << "\n";
  err << "mrr@10 " << fixed(tuned.mrr, 4) << " over " << tuned.evaluated_points << " grid points\n";
  err << "all-ones mrr@10 " << fixed(rerank_mrr(set, qrels, std::vector<double>(buckets, 1.0)), 4) << "\n";
  if (o.oracle) {
    const auto oracle = ideal_layer_oracle(set, qrels);
    err << "oracle mrr@10 " << fixed(oracle.mrr, 4) << "\n";
    for (std::size_t b = 0; b < oracle.single_bucket_mrr.size(); ++b) {
      err << "bucket " << b << " mrr@10 " << fixed(oracle.single_bucket_mrr[b], 4) << "\n";
    }
  }
  return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  if (o.density.empty() && o.frequency.empty() && o.interpret.empty() && !o.stats) {
    throw InvalidArgument("analyze needs --density, --frequency, --interpret or --stats");
  }
  if (!o.frequency.empty() || o.stats) {
    if (o.index.empty()) throw InvalidArgument("--frequency and --stats need --index");
    const auto stats = index_stats(read_index(o.index));
    if (o.stats) {
      out << "docs\t" << stats.docs << "\n";
      out << "postings\t" << stats.postings << "\n";
      for (std::size_t b = 0; b < stats.buckets.size(); ++b) {
        const auto& s = stats.buckets[b];
        out << "bucket" << b << ".layer\t" << s.descriptor.layer << "\n";
        out << "bucket" << b << ".aspect\t" << s.descriptor.aspect << "\n";
        out << "bucket" << b << ".postings\t" << s.postings << "\n";
        out << "bucket" << b << ".active_dims\t" << s.active_dims << "\n";
        out << "bucket" << b << ".mean_posting_length\t" << fixed(s.mean_posting_length, 4) << "\n";
      }
    }
    if (!o.frequency.empty()) {
      auto f = open_output(o.frequency);
      f << "bucket,dim,docs\n";
      for (std::size_t b = 0; b < stats.buckets.size(); ++b) {
        for (const auto& [dim, count] : stats.buckets[b].activation_frequency) f << b << "," << dim << "," << count << "\n";
      }
    }
  }
  if (!o.density.empty() || !o.interpret.empty()) {
    if (o.checkpoint.empty() || o.queries.empty()) throw InvalidArgument("--density and --interpret need --checkpoint and --queries");
    const auto model = load_model(o.checkpoint, o.infer_k);
    const auto queries = read_id_text(o.queries);
    const auto reps = encode_texts(model, queries, true, o.threads);
    if (!o.density.empty()) {
      std::vector<LengthDensity> items;
      for (std::size_t i = 0; i < queries.size(); ++i) items.push_back({model.tokens(queries[i].text, true).size(), &reps[i]});
      auto f = open_output(o.density);
      f << "length,mean_density\n";
      for (const auto& [len, d] : density_profile(items)) f << len << "," << fixed(d, 8) << "\n";
    }
    if (!o.interpret.empty()) {
      if (o.bucket >= model.plan.size()) throw InvalidArgument("--bucket out of range");
      std::vector<QueryTerms> items;
      for (std::size_t i = 0; i < queries.size(); ++i) {
        auto words = split_words(queries[i].text, model.tokenizer.lowercase);
        if (words.size() > model.tokenizer.max_query_tokens) words.resize(model.tokenizer.max_query_tokens);
        items.push_back({std::move(words), &reps[i]});
      }
      auto f = open_output(o.interpret);
      f << "dim,term,count\n";
      for (const auto& [dim, terms] : interpret_dimensions(items, o.bucket, o.min_count)) {
        for (const auto& t : terms) f << dim << "," << t.term << "," << t.count << "\n";
      }
    }
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  std::vector<std::size_t> ks;
  std::stringstream ss(o.ks);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      ks.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw InvalidArgument("bad --ks value '" + item + "'");
    }
  }
  const auto model = read_checkpoint(o.checkpoint);
  const auto points = k_sweep(model, read_id_text(o.collection), read_id_text(o.queries), read_qrels(o.qrels), ks,
                              o.depth, o.threads);
  out << "infer_k\tmrr@10\tpostings\n";
  for (const auto& p : points) out << p.infer_k << "\t" << fixed(p.mrr, 4) << "\t" << p.postings << "\n";
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SyntheticSpec spec;
  if (o.seed_set) spec.seed = o.seed;
  std::filesystem::create_directories(o.out);
  const auto corpus = generate_synthetic_corpus(spec);
  write_synthetic_corpus(corpus, o.out);
  out << "docs\t" << corpus.docs.size() << "\n";
  out << "train_queries\t" << corpus.train_queries.size() << "\n";
  out << "heldout_queries\t" << corpus.heldout_queries.size() << "\n";
  out << "triples\t" << corpus.triples.size() << "\n";
  return kExitOk;
}

int cmd_audit(const Options& o, std::ostream& out) {
  const std::uint64_t base = o.seed_set ? o.seed : 1;
  double worst = 0.0;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < o.instances; ++i) {
    const auto r = finite_difference_audit(base + i);
    worst = std::max(worst, r.max_relative_error);
    bad += r.loser_nonzero + r.masked_nonzero;
    out << "instance " << i << "\tmax_rel_err " << r.max_relative_error << "\tcompared " << r.compared
        << "\tskipped " << r.skipped_nonsmooth << "\n";
  }
  out << "worst\t" << worst << "\n";
  out << "nonzero_on_losers_or_masked\t" << bad << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultra-high dimensional sparse retrieval"};
  app.require_subcommand(1);
  Options o;

  auto seed_option = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { o.seed = s, o.seed_set = true; }, "Random seed");
  };
  auto threads_option = [&](CLI::App* sub) {
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model from query/positive/negative triples");
  train_cmd->add_option("--triples", o.triples, "Triples TSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", o.config, "JSON config")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", o.out, "Checkpoint to write")->required();
  train_cmd->add_option("--log", o.log, "Loss CSV (default <out>.loss.csv)");
  seed_option(train_cmd);
  threads_option(train_cmd);

  auto* index_cmd = app.add_subcommand("index", "Encode a collection and write an inverted index");
  index_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  auto* coll = index_cmd->add_option("--collection", o.collection, "doc_id TAB text")->check(CLI::ExistingFile);
  auto* emb = index_cmd->add_option("--embeddings", o.embeddings, "Dense token embeddings file")->check(CLI::ExistingFile);
  coll->excludes(emb);
  index_cmd->add_option("--out", o.out, "Index to write")->required();
  index_cmd->add_option("--infer-k", o.infer_k, "Override k at encoding")->check(CLI::PositiveNumber);
  threads_option(index_cmd);

  auto* search_cmd = app.add_subcommand("search", "Retrieve top-K documents");
  search_cmd->add_option("--index", o.index, "Inverted index")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  auto* q1 = search_cmd->add_option("--query", o.query, "Single query text");
  auto* qn = search_cmd->add_option("--queries", o.queries, "query_id TAB text")->check(CLI::ExistingFile);
  q1->excludes(qn);
  search_cmd->add_option("--out", o.out, "Run file for batch mode (default stdout)");
  search_cmd->add_option("--k", o.k, "Results per query")->check(CLI::PositiveNumber);
  search_cmd->add_option("--infer-k", o.infer_k, "Override k at encoding")->check(CLI::PositiveNumber);
  search_cmd->add_option("--weights", o.weights, "Bucket weights, e.g. 1:0:0.5");
  threads_option(search_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Score a run against relevance judgments");
  eval_cmd->add_option("--run", o.run, "Run file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--qrels", o.qrels, "Qrels file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mrr-cutoff", o.mrr_cutoff, "MRR cutoff")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--recall-cutoff", o.recall_cutoff, "Recall cutoff")->check(CLI::PositiveNumber);

  auto* tune_cmd = app.add_subcommand("tune", "Grid-search bucket weights on a rerank set");
  tune_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--collection", o.collection, "doc_id TAB text")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--queries", o.queries, "query_id TAB text")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--candidates", o.candidates, "Candidate run file")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--qrels", o.qrels, "Qrels file")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--grid", o.grid, "'thirds' or comma-separated values per bucket");
  tune_cmd->add_option("--infer-k", o.infer_k, "Override k at encoding")->check(CLI::PositiveNumber);
  tune_cmd->add_flag("--oracle", o.oracle, "Also report the ideal per-query bucket choice");
  threads_option(tune_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "Density, activation frequency and dimension terms");
  analyze_cmd->add_option("--index", o.index, "Inverted index")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--queries", o.queries, "query_id TAB text")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--density", o.density, "Write length,mean_density CSV");
  analyze_cmd->add_option("--frequency", o.frequency, "Write bucket,dim,docs CSV");
  analyze_cmd->add_option("--interpret", o.interpret, "Write dim,term,count CSV");
  analyze_cmd->add_option("--bucket", o.bucket, "Bucket for --interpret");
  analyze_cmd->add_option("--min-count", o.min_count, "Minimum term count for --interpret");
  analyze_cmd->add_option("--infer-k", o.infer_k, "Override k at encoding")->check(CLI::PositiveNumber);
  analyze_cmd->add_flag("--stats", o.stats, "Print index statistics");
  threads_option(analyze_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "MRR@10 at several inference k without retraining");
  sweep_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--collection", o.collection, "doc_id TAB text")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--queries", o.queries, "query_id TAB text")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--qrels", o.qrels, "Qrels file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--ks", o.ks, "Comma-separated k values");
  sweep_cmd->add_option("--depth", o.depth, "Retrieval depth")->check(CLI::PositiveNumber);
  threads_option(sweep_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic topic corpus");
  synth_cmd->add_option("--out", o.out, "Output directory")->required();
  seed_option(synth_cmd);

  auto* audit_cmd = app.add_subcommand("audit", "Finite-difference gradient check");
  audit_cmd->add_option("--instances", o.instances, "Random instances")->check(CLI::PositiveNumber);
  seed_option(audit_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(o, out, err);
    if (*index_cmd) {
      if (o.collection.empty() && o.embeddings.empty()) throw InvalidArgument("index needs --collection or --embeddings");
      return cmd_index(o, out);
    }
    if (*search_cmd) {
      if (o.query.empty() && o.queries.empty()) throw InvalidArgument("search needs --query or --queries");
      return cmd_search(o, out);
    }
    if (*eval_cmd) return cmd_eval(o, out);
    if (*tune_cmd) return cmd_tune(o, out, err);
    if (*analyze_cmd) return cmd_analyze(o, out);
    if (*sweep_cmd) return cmd_sweep(o, out);
    if (*synth_cmd) return cmd_synth(o, out);
    if (*audit_cmd) return cmd_audit(o, out);
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace uhd
