#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tpn2f/tensor.hpp"

namespace tpn2f {

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;
  // Global-norm clipping threshold; disabled when empty.
  std::optional<double> grad_clip;

  static AdamState for_params(std::span<const Tensor> params, double learning_rate);
};

/// One bias-corrected Adam update over `params`, then zeroes their grads.
/// Moment buffers are created on the first call if `state` has none.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace tpn2f
