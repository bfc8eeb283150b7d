#include "uhd/loss.hpp"

namespace uhd {

ScoredBatchLoss batch_loss_from_scores(const std::vector<std::vector<double>>& scores) {
  const std::size_t b = scores.size();
  if (b < 2) throw InvalidArgument("batch_loss: in-batch negatives require batch size >= 2");
  const std::size_t cols = scores.front().size();
  if (cols < b) throw InvalidArgument("batch_loss: score matrix narrower than the batch");
  ScoredBatchLoss out;
  out.grad.assign(b, std::vector<double>(cols, 0.0));
  const std::size_t pairs = b * (cols - 1);
  double total = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (scores[i].size() != cols) throw InvalidArgument("batch_loss: ragged score matrix");
    pos += scores[i][i];
    for (std::size_t j = 0; j < cols; ++j) {
      if (j == i) continue;
      neg += scores[i][j];
      const double l = hinge_loss(scores[i][i], scores[i][j]);
      if (l > 0.0) {
        total += l;
        ++out.report.active_pairs;
        out.grad[i][i] -= 1.0 / static_cast<double>(pairs);
        out.grad[i][j] += 1.0 / static_cast<double>(pairs);
      }
    }
  }
  out.report.pairs = pairs;
  out.report.mean_loss = total / static_cast<double>(pairs);
  out.report.mean_pos = pos / static_cast<double>(b);
  out.report.mean_neg = neg / static_cast<double>(pairs);
  return out;
}

}  // namespace uhd
