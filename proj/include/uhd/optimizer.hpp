#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "uhd/error.hpp"
#include "uhd/model.hpp"

namespace uhd {

struct AdamConfig {
  double learning_rate = 1e-3;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;  // linear decay reaches zero here; 0 disables decay
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Learning rate for 1-based `step`: linear warmup, then linear decay.
inline double scheduled_rate(const AdamConfig& cfg, std::size_t step) {
  if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps) {
    return cfg.learning_rate * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.total_steps > cfg.warmup_steps) {
    const double remaining = static_cast<double>(cfg.total_steps) - static_cast<double>(step);
    const double span = static_cast<double>(cfg.total_steps - cfg.warmup_steps);
    return cfg.learning_rate * std::max(0.0, remaining / span);
  }
  return cfg.learning_rate;
}

/// Adam with decoupled weight decay. Masked entries are never updated.
template <typename Scalar>
class AdamW {
 public:
  AdamW(AdamConfig cfg, const std::vector<ParamView<Scalar>>& params) : cfg_(cfg) {
    for (const auto& p : params) {
      first_.emplace_back(p.value.size(), 0.0);
      second_.emplace_back(p.value.size(), 0.0);
    }
  }

  std::size_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  /// Applies one update from the gradients held in `params`.
  void step(std::vector<ParamView<Scalar>>& params) {
    if (params.size() != first_.size()) throw UsageError("optimizer parameter layout changed");
    ++step_;
    const double lr = scheduled_rate(cfg_, step_);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& view = params[p];
      if (view.value.size() != first_[p].size() || view.grad.size() != view.value.size()) {
        throw UsageError("optimizer parameter shape changed");
      }
      auto& m = first_[p];
      auto& v = second_[p];
      const bool masked = !view.mask.empty();
      for (std::size_t i = 0; i < view.value.size(); ++i) {
        if (masked && view.mask[i] == Scalar(0)) {
          view.value[i] = Scalar(0);
          continue;
        }
        const double g = static_cast<double>(view.grad[i]);
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
        const double x = static_cast<double>(view.value[i]);
        view.value[i] = static_cast<Scalar>(x - lr * (update + cfg_.weight_decay * x));
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace uhd
