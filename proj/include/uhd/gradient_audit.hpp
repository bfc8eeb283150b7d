#pragma once

#include <cstdint>
#include <string>

#include "uhd/model.hpp"

namespace uhd {

struct AuditInstance {
  std::size_t hidden = 6;      // h <= 8
  std::size_t dims = 24;       // n <= 32
  std::size_t k = 3;
  std::size_t max_tokens = 4;  // |t| <= 4
  std::size_t vocab = 12;
  std::size_t depth = 2;
  std::uint32_t window = 3;
  double weight_sparsity = 0.3;
  Activation activation = Activation::tanh;
  bool identity_encoder = false;  // mixing weights exactly I
  std::size_t batch = 2;
};

struct AuditReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t compared = 0;            // parameters with |analytic| > 1e-8
  std::size_t skipped_nonsmooth = 0;   // perturbation crossed a kink
  std::size_t zero_gradient = 0;       // analytic gradient exactly 0
  std::size_t loser_nonzero = 0;       // nonzero analytic grad on a loser WTA column
  std::size_t masked_nonzero = 0;      // nonzero analytic grad on a masked weight
  double max_abs_fd_on_zero = 0.0;     // finite difference where analytic is exactly 0 (smooth points)
};

/// Builds a random small double-precision model and batch from `seed`,
/// then compares every parameter's analytic gradient of the mean in-batch
/// hinge loss against central differences with step 1e-4. Parameters
/// whose perturbation changes any winner set, pooling argmax or active
/// hinge pair are skipped as nonsmooth.
AuditReport finite_difference_audit(std::uint64_t seed, const AuditInstance& instance = {});

}  // namespace uhd
