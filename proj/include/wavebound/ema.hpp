#pragma once

#include "mlp.hpp"

namespace wavebound {

/// Target network kept as an exponential moving average of the source.
template <typename Scalar> struct EmaMirror
{
  ModelParams<Scalar> target;
  double decay = 0.99;
};

template <typename Scalar> EmaMirror<Scalar> ema_init(ModelParams<Scalar> const &source, double decay)
{
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw ConfigError("EMA decay must lie in [0, 1], got " + std::to_string(decay));
  }
  return {source, decay};
}

/// target <- decay * target + (1 - decay) * source, entrywise.
///
/// Evaluated as source - decay * (source - target): a frozen source is an
/// exact fixed point and decay = 0 copies the source bit for bit.
template <typename Scalar> void ema_update(EmaMirror<Scalar> &mirror, ModelParams<Scalar> const &source)
{
  if (!same_shape(mirror.target, source)) {
    throw ConfigError("EMA target and source shapes differ");
  }
  if (mirror.decay == 1.0) {
    return;
  }
  auto const a = static_cast<Scalar>(mirror.decay);
  for_each_tensor(mirror.target, source, [&](auto &t, auto const &s) { t = s - a * (s - t); });
}

} // namespace wavebound
