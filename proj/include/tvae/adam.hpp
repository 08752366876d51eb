// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tvae {

struct AdamHyperparams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t num_params, AdamHyperparams hyper)
      : first_moment(num_params, 0.0), second_moment(num_params, 0.0), hyper(hyper) {}

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  AdamHyperparams hyper;
};

// One bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
// Throws TrainingDivergence if any gradient entry is not finite; nothing is modified in that case.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

}  // namespace tvae
