#pragma once

#include "mlp.hpp"

#include <cmath>
#include <cstdint>

namespace wavebound {

template <typename Scalar> struct AdamState
{
  ModelParams<Scalar> first_moment;
  ModelParams<Scalar> second_moment;
  std::int64_t step_count = 0;
};

struct AdamConfig
{
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

template <typename Scalar> AdamState<Scalar> adam_init(ModelParams<Scalar> const &params)
{
  return {zeros_like(params), zeros_like(params), 0};
}

/// Bias-corrected Adam, in place. Throws NumericError on non-finite
/// gradients and leaves params and state untouched in that case.
template <typename Scalar>
void adam_step(ModelParams<Scalar> &params, ModelParams<Scalar> const &grads, AdamState<Scalar> &state,
               AdamConfig const &cfg)
{
  if (!same_shape(params, grads) || !same_shape(params, state.first_moment) ||
      !same_shape(params, state.second_moment)) {
    throw ConfigError("adam: parameter, gradient and moment shapes differ");
  }
  if (state.step_count < 0) {
    throw ConfigError("adam: negative step count");
  }
  if (!all_finite(grads)) {
    throw NumericError("adam: non-finite gradient at step " + std::to_string(state.step_count));
  }
  state.step_count += 1;
  auto const t = static_cast<double>(state.step_count);
  auto const b1 = static_cast<Scalar>(cfg.beta1);
  auto const b2 = static_cast<Scalar>(cfg.beta2);
  auto const correction1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, t));
  auto const correction2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, t));
  auto const lr = static_cast<Scalar>(cfg.learning_rate);
  auto const eps = static_cast<Scalar>(cfg.eps_hat);

  auto update = [&](auto &theta, auto const &g, auto &m, auto &v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grads.layers[i].weight, state.first_moment.layers[i].weight,
           state.second_moment.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
}

} // namespace wavebound
