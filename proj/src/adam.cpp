#include "tpn2f/adam.hpp"

#include <cmath>

#include "tpn2f/error.hpp"

namespace tpn2f {

AdamState AdamState::for_params(std::span<const Tensor> params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const auto& p : params) {
    state.m.emplace_back(p.numel(), 0.0);
    state.v.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw StateError("adam: state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].has_grad()) {
      throw StateError("adam: parameter " + std::to_string(k) + " " +
                       shape_str(params[k].shape()) + " has no gradient");
    }
    if (state.m[k].size() != params[k].numel() || state.v[k].size() != params[k].numel()) {
      throw StateError("adam: moment buffer shape mismatch for parameter " + std::to_string(k));
    }
  }

  double clip_scale = 1.0;
  if (state.grad_clip) {
    double sq = 0.0;
    for (const auto& p : params)
      for (double g : p.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > *state.grad_clip) clip_scale = *state.grad_clip / norm;
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].mutable_data();
    auto g = params[k].mutable_grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip_scale;
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    params[k].zero_grad();
  }
}

}  // namespace tpn2f
