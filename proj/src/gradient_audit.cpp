#include "uhd/gradient_audit.hpp"

#include <cmath>
#include <set>

#include "uhd/loss.hpp"
#include "uhd/trainer.hpp"

namespace uhd {

namespace {

constexpr double kStep = 1e-4;
constexpr double kMinGradient = 1e-8;

struct Evaluation {
  double loss = 0.0;
  std::vector<std::uint32_t> signature;  // winner sets, pooling argmax, active pairs
};

Evaluation evaluate(const Model<double>& model, const std::vector<std::vector<TokenId>>& queries,
                    const std::vector<std::vector<TokenId>>& positives) {
  Evaluation ev;
  std::vector<TextTrace<double>> traces;
  for (const auto& q : queries) traces.push_back(model.trace(q, true));
  for (const auto& p : positives) traces.push_back(model.trace(p, true));
  for (const auto& tr : traces) {
    for (const auto& bucket : tr.buckets) {
      for (const auto& token : bucket.tokens) {
        for (const auto& e : token.output) ev.signature.push_back(e.dim);
        ev.signature.push_back(~0u);
      }
      for (auto a : bucket.argmax) ev.signature.push_back(a);
      ev.signature.push_back(~1u);
    }
  }
  const std::size_t b = queries.size();
  std::vector<std::vector<double>> scores(b, std::vector<double>(b));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) scores[i][j] = relevance(traces[i].representation, traces[b + j].representation);
  }
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (i != j) ev.signature.push_back(1.0 - scores[i][i] + scores[i][j] > 0.0 ? 1u : 0u);
    }
  }
  ev.loss = batch_loss_from_scores(scores).report.mean_loss;
  return ev;
}

}  // namespace

AuditReport finite_difference_audit(std::uint64_t seed, const AuditInstance& inst) {
  if (inst.hidden > 8 || inst.dims > 32 || inst.max_tokens > 4 || inst.batch != 2) {
    throw InvalidArgument("finite_difference_audit: instance exceeds h<=8, n<=32, |t|<=4, B=2");
  }
  Rng rng(seed);
  Model<double> model;
  Rng enc_rng = rng.fork();
  model.encoder = ToyEncoder<double>::random(inst.vocab, inst.hidden, inst.depth, inst.window, inst.activation, enc_rng,
                                             inst.identity_encoder ? 0.0 : 0.5);
  std::vector<std::uint32_t> layers;
  for (std::uint32_t j = 1; j <= inst.depth; ++j) layers.push_back(j);
  Rng plan_rng = rng.fork();
  model.plan = BucketPlan<double>::random(inst.depth > 1 ? BucketMode::vertical : BucketMode::single, layers, 1,
                                          inst.hidden, inst.dims, inst.k, inst.weight_sparsity, plan_rng);
  // Nonzero biases so the bias path is exercised.
  for (auto& e : model.plan) {
    for (Eigen::Index d = 0; d < e.wta.bias().size(); ++d) e.wta.bias()[d] = rng.uniform(-0.1, 0.1);
  }

  auto draw_text = [&] {
    std::vector<TokenId> t(1 + rng.below(inst.max_tokens));
    for (auto& id : t) id = static_cast<TokenId>(rng.below(inst.vocab));
    return t;
  };
  std::vector<std::vector<TokenId>> queries, positives;
  for (std::size_t i = 0; i < inst.batch; ++i) {
    queries.push_back(draw_text());
    positives.push_back(draw_text());
  }

  auto grads = model.zero_gradients();
  batch_gradients(model, queries, positives, {}, grads);
  const auto base = evaluate(model, queries, positives);

  AuditReport report;
  // Winner-only and mask rules, checked on the analytic gradients directly.
  {
    std::vector<TextTrace<double>> traces;
    for (const auto& q : queries) traces.push_back(model.trace(q, true));
    for (const auto& p : positives) traces.push_back(model.trace(p, true));
    for (std::size_t b = 0; b < model.plan.size(); ++b) {
      std::set<Dim> winners;
      for (const auto& tr : traces) {
        for (const auto& tok : tr.buckets[b].tokens) {
          for (const auto& e : tok.output) winners.insert(e.dim);
        }
      }
      const auto& wta = model.plan[b].wta;
      const auto& g = grads.buckets[b];
      for (Eigen::Index d = 0; d < g.weight.cols(); ++d) {
        const bool loser = !winners.count(static_cast<Dim>(d));
        if (loser && g.bias[d] != 0.0) ++report.loser_nonzero;
        for (Eigen::Index i = 0; i < g.weight.rows(); ++i) {
          if (loser && g.weight(i, d) != 0.0) ++report.loser_nonzero;
          if (wta.mask()(i, d) == 0.0 && g.weight(i, d) != 0.0) ++report.masked_nonzero;
        }
      }
    }
  }

  auto params = model.parameters(grads);
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double analytic = p.grad[i];
      if (!p.mask.empty() && p.mask[i] == 0.0) {
        // Severed connections are not free parameters.
        if (analytic == 0.0) ++report.zero_gradient;
        continue;
      }
      const double original = p.value[i];
      p.value[i] = original + kStep;
      const auto plus = evaluate(model, queries, positives);
      p.value[i] = original - kStep;
      const auto minus = evaluate(model, queries, positives);
      p.value[i] = original;
      if (plus.signature != base.signature || minus.signature != base.signature) {
        ++report.skipped_nonsmooth;
        continue;
      }
      const double fd = (plus.loss - minus.loss) / (2.0 * kStep);
      if (analytic == 0.0) {
        ++report.zero_gradient;
        report.max_abs_fd_on_zero = std::max(report.max_abs_fd_on_zero, std::abs(fd));
        continue;
      }
      if (std::abs(analytic) <= kMinGradient) continue;
      ++report.compared;
      const double rel = std::abs(analytic - fd) / std::max(std::abs(analytic), std::abs(fd));
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace uhd
