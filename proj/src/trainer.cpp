#include "uhd/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "uhd/parallel.hpp"

namespace uhd {

std::vector<TrainingTriple> parse_triples(std::istream& in, const std::string& context) {
  std::vector<TrainingTriple> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw DataError(context + ":" + std::to_string(no) + ": expected 3 tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw DataError(context + ":" + std::to_string(no) + ": empty query or positive passage");
    }
    out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2]), no});
  }
  return out;
}

std::vector<TrainingTriple> read_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triples file " + path);
  return parse_triples(in, path);
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw InvalidArgument("config key '" + key + "': " + why); };
  if (h == 0) fail("h", "must be positive");
  if (n == 0) fail("n", "must be positive");
  if (k == 0 || k > n) fail("k", "must be in [1, n]");
  if (!(weight_sparsity >= 0.0 && weight_sparsity < 1.0)) fail("weight_sparsity", "must be in [0, 1)");
  if (layers.empty()) fail("layers", "must list at least one layer");
  for (auto j : layers) {
    if (j < 1 || j > encoder_layers) fail("layers", "layer indices must be in [1, encoder_layers]");
  }
  if (mode != BucketMode::vertical && layers.size() != 1) fail("layers", "single and horizontal modes take one layer");
  if (mode == BucketMode::horizontal && aspects == 0) fail("aspects", "must be positive");
  if (batch_size < 2) fail("batch_size", "in-batch negatives require batch size >= 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr", "must be positive");
  if (window % 2 == 0) fail("window", "must be odd");
  if (vocab_size == 0) fail("vocab_size", "must be positive");
  if (max_query_tokens == 0) fail("max_query_tokens", "must be positive");
  if (max_doc_tokens == 0) fail("max_doc_tokens", "must be positive");
}

TrainConfig parse_train_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  TrainConfig c;
  auto required = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw InvalidArgument(std::string("missing config key: ") + key);
    return j.at(key);
  };
  try {
    c.h = required("h").get<std::size_t>();
    c.n = required("n").get<std::size_t>();
    c.k = required("k").get<std::size_t>();
    c.weight_sparsity = required("weight_sparsity").get<double>();
    const auto& layers = required("layers");
    c.layers = layers.is_array() ? layers.get<std::vector<std::uint32_t>>() : std::vector<std::uint32_t>{layers.get<std::uint32_t>()};
    c.mode = parse_bucket_mode(required("mode").get<std::string>());
    c.batch_size = required("batch_size").get<std::size_t>();
    c.steps = required("steps").get<std::size_t>();
    c.lr = required("lr").get<double>();
    c.warmup_steps = required("warmup_steps").get<std::size_t>();
    c.seed = required("seed").get<std::uint64_t>();
    c.aspects = j.value("aspects", c.aspects);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.window = j.value("window", c.window);
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_query_tokens = j.value("max_query_tokens", c.max_query_tokens);
    c.max_doc_tokens = j.value("max_doc_tokens", c.max_doc_tokens);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.explicit_negatives = j.value("explicit_negatives", c.explicit_negatives);
    c.threads = j.value("threads", c.threads);
    c.train_wta_bias = j.value("train_wta_bias", c.train_wta_bias);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config value has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig read_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

void write_loss_log(const std::vector<LossLogRow>& rows, std::ostream& out) {
  out << "step,mean_loss,mean_pos,mean_neg\n";
  out << std::setprecision(9);
  for (const auto& r : rows) {
    out << r.step << ',' << r.report.mean_loss << ',' << r.report.mean_pos << ',' << r.report.mean_neg << '\n';
  }
}

Model<float> initialize_model(const TrainConfig& cfg, const std::vector<TrainingTriple>& triples) {
  cfg.validate();
  std::vector<std::string> texts;
  texts.reserve(triples.size() * 3);
  for (const auto& t : triples) {
    texts.push_back(t.query);
    texts.push_back(t.positive);
    if (cfg.explicit_negatives) texts.push_back(t.negative);
  }
  Model<float> m;
  m.tokenizer = build_vocabulary(texts, cfg.vocab_size);
  m.tokenizer.max_query_tokens = cfg.max_query_tokens;
  m.tokenizer.max_doc_tokens = cfg.max_doc_tokens;
  Rng rng(cfg.seed);
  Rng encoder_rng = rng.fork();
  Rng plan_rng = rng.fork();
  m.encoder = ToyEncoder<float>::random(m.tokenizer.vocab_size(), cfg.h, cfg.encoder_layers, cfg.window,
                                        cfg.activation, encoder_rng);
  m.plan = BucketPlan<float>::random(cfg.mode, cfg.layers, cfg.aspects, cfg.h, cfg.n, cfg.k, cfg.weight_sparsity,
                                     plan_rng);
  return m;
}

template <typename Scalar>
BatchLossReport batch_gradients(const Model<Scalar>& model, const std::vector<std::vector<TokenId>>& queries,
                                const std::vector<std::vector<TokenId>>& positives,
                                const std::vector<std::vector<TokenId>>& negatives, ModelGradients<Scalar>& grads,
                                std::size_t threads) {
  const std::size_t b = queries.size();
  if (positives.size() != b) throw InvalidArgument("batch: query/positive count mismatch");
  if (b < 2) throw InvalidArgument("batch: in-batch negatives require batch size >= 2");
  // texts: queries, then positives, then explicit negatives
  std::vector<const std::vector<TokenId>*> texts;
  for (const auto& q : queries) texts.push_back(&q);
  for (const auto& p : positives) texts.push_back(&p);
  for (const auto& n : negatives) texts.push_back(&n);
  std::vector<TextTrace<Scalar>> traces(texts.size());
  parallel_for(texts.size(), threads, [&](std::size_t i) { traces[i] = model.trace(*texts[i], true); });

  const std::size_t cols = b + negatives.size();
  std::vector<std::vector<double>> scores(b, std::vector<double>(cols));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < cols; ++j) scores[i][j] = relevance(traces[i].representation, traces[b + j].representation);
  }
  auto loss = batch_loss_from_scores(scores);

  std::vector<std::vector<std::vector<double>>> rep_grads(texts.size());
  for (std::size_t t = 0; t < texts.size(); ++t) {
    for (const auto& bucket : traces[t].representation) rep_grads[t].emplace_back(bucket.vector.nnz(), 0.0);
  }
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      relevance_backward(traces[i].representation, traces[b + j].representation, loss.grad[i][j], rep_grads[i],
                         rep_grads[b + j]);
    }
  }
  for (std::size_t t = 0; t < texts.size(); ++t) {
    std::vector<std::vector<Scalar>> g;
    for (const auto& v : rep_grads[t]) {
      g.emplace_back(v.size());
      std::transform(v.begin(), v.end(), g.back().begin(), [](double x) { return static_cast<Scalar>(x); });
    }
    model.backward(traces[t], g, grads);
  }
  return loss.report;
}

template BatchLossReport batch_gradients<float>(const Model<float>&, const std::vector<std::vector<TokenId>>&,
                                                const std::vector<std::vector<TokenId>>&,
                                                const std::vector<std::vector<TokenId>>&, ModelGradients<float>&,
                                                std::size_t);
template BatchLossReport batch_gradients<double>(const Model<double>&, const std::vector<std::vector<TokenId>>&,
                                                 const std::vector<std::vector<TokenId>>&,
                                                 const std::vector<std::vector<TokenId>>&, ModelGradients<double>&,
                                                 std::size_t);

namespace {

struct TokenizedTriple {
  std::vector<TokenId> query, positive, negative;
};

std::vector<TokenizedTriple> tokenize_triples(const Model<float>& model, const std::vector<TrainingTriple>& triples,
                                              bool with_negatives) {
  std::vector<TokenizedTriple> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    try {
      TokenizedTriple tt{model.tokens(t.query, true), model.tokens(t.positive, false), {}};
      if (with_negatives) tt.negative = model.tokens(t.negative, false);
      out.push_back(std::move(tt));
    } catch (const EmptyInput& e) {
      throw DataError("triples line " + std::to_string(t.line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

TrainResult train(const std::vector<TrainingTriple>& triples, const TrainConfig& cfg, const StepCallback& on_step) {
  return train(initialize_model(cfg, triples), triples, cfg, on_step);
}

TrainResult train(Model<float> model, const std::vector<TrainingTriple>& triples, const TrainConfig& cfg,
                  const StepCallback& on_step) {
  cfg.validate();
  TrainResult result{std::move(model), {}};
  if (cfg.steps == 0) return result;
  if (triples.size() < 2) throw DataError("training needs at least two triples");
  const auto data = tokenize_triples(result.model, triples, cfg.explicit_negatives);

  AdamConfig adam{cfg.lr, cfg.warmup_steps, cfg.steps, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay};
  auto grads = result.model.zero_gradients();
  auto params = result.model.parameters(grads);
  if (!cfg.train_wta_bias) {
    std::erase_if(params, [](const auto& p) { return p.name.starts_with("wta") && p.name.ends_with(".bias"); });
  }
  AdamW<float> optimizer(adam, params);

  Rng order_rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (order.size() - cursor < 2) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      order_rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t take = std::min(cfg.batch_size, order.size() - cursor);
    std::vector<std::vector<TokenId>> qs, ps, ns;
    for (std::size_t i = 0; i < take; ++i) {
      const auto& t = data[order[cursor + i]];
      qs.push_back(t.query);
      ps.push_back(t.positive);
      if (cfg.explicit_negatives) ns.push_back(t.negative);
    }
    cursor += take;

    grads.set_zero();
    const auto report = batch_gradients(result.model, qs, ps, ns, grads, cfg.threads);
    if (!std::isfinite(report.mean_loss)) throw TrainingDiverged(static_cast<long>(step), "nonfinite loss");
    for (const auto& p : params) {
      for (float g : p.grad) {
        if (!std::isfinite(g)) throw TrainingDiverged(static_cast<long>(step), "nonfinite gradient in " + p.name);
      }
    }
    optimizer.step(params);
    for (const auto& p : params) {
      for (float v : p.value) {
        if (!std::isfinite(v)) throw TrainingDiverged(static_cast<long>(step), "nonfinite parameter in " + p.name);
      }
    }
    LossLogRow row{step, report};
    result.log.push_back(row);
    if (on_step) on_step(row);
  }
  return result;
}

}  // namespace uhd
