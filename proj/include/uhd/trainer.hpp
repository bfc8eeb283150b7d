#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "uhd/bucket_plan.hpp"
#include "uhd/loss.hpp"
#include "uhd/model.hpp"
#include "uhd/optimizer.hpp"

namespace uhd {

struct TrainingTriple {
  std::string query;
  std::string positive;
  std::string negative;  // unused unless explicit negatives are enabled
  std::size_t line = 0;
};

/// Reads `query TAB positive TAB negative` lines. Errors name file and line.
std::vector<TrainingTriple> read_triples(const std::string& path);
std::vector<TrainingTriple> parse_triples(std::istream& in, const std::string& context);

struct TrainConfig {
  // required keys
  std::size_t h = 32;
  std::size_t n = 8192;
  std::size_t k = 16;
  double weight_sparsity = 0.3;
  std::vector<std::uint32_t> layers{6};
  BucketMode mode = BucketMode::single;
  std::size_t batch_size = 32;
  std::size_t steps = 1000;
  double lr = 1e-3;
  std::size_t warmup_steps = 0;
  std::uint64_t seed = 0;
  // optional keys
  std::uint32_t aspects = 6;
  std::size_t encoder_layers = 6;
  std::uint32_t window = 3;
  Activation activation = Activation::tanh;
  std::size_t vocab_size = 30000;
  std::size_t max_query_tokens = 32;
  std::size_t max_doc_tokens = 180;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool explicit_negatives = false;
  bool train_wta_bias = true;  // false keeps WTA biases at their initial zero
  std::size_t threads = 1;

  /// Throws InvalidArgument naming the offending key.
  void validate() const;
};

/// Parses the JSON config text; missing required keys throw
/// InvalidArgument naming the key.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig read_train_config(const std::string& path);

struct LossLogRow {
  std::size_t step = 0;
  BatchLossReport report;
};

void write_loss_log(const std::vector<LossLogRow>& rows, std::ostream& out);

/// Builds the vocabulary from the triples and draws every parameter from
/// the config seed.
Model<float> initialize_model(const TrainConfig& cfg, const std::vector<TrainingTriple>& triples);

struct TrainResult {
  Model<float> model;
  std::vector<LossLogRow> log;  // one row per step; row 0 precedes any update
};

using StepCallback = std::function<void(const LossLogRow&)>;

/// Runs `cfg.steps` optimizer steps of in-batch-negative hinge training.
TrainResult train(const std::vector<TrainingTriple>& triples, const TrainConfig& cfg, const StepCallback& on_step = {});

/// Same, continuing from an existing model.
TrainResult train(Model<float> model, const std::vector<TrainingTriple>& triples, const TrainConfig& cfg,
                  const StepCallback& on_step = {});

/// One forward/backward over a batch of tokenized texts: returns the loss
/// report and leaves parameter gradients in `grads`.
template <typename Scalar>
BatchLossReport batch_gradients(const Model<Scalar>& model, const std::vector<std::vector<TokenId>>& queries,
                                const std::vector<std::vector<TokenId>>& positives,
                                const std::vector<std::vector<TokenId>>& negatives, ModelGradients<Scalar>& grads,
                                std::size_t threads = 1);

}  // namespace uhd
