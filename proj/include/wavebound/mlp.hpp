#pragma once

// Dense tanh MLP forecaster with hand-written reverse mode.
//
// Batches are column-major: one column per sample. A window of shape L x K is
// flattened time-major, so entry (t, k) lands at row t * K + k.

#include "core.hpp"
#include "rng.hpp"

#include <cmath>
#include <vector>

namespace wavebound {

template <typename Scalar> struct Layer
{
  Matrix<Scalar> weight; // out x in
  Vector<Scalar> bias;   // out

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
};

/// Ordered affine layers. Every layer but the last is followed by tanh.
template <typename Scalar> struct ModelParams
{
  std::vector<Layer<Scalar>> layers;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  Index size() const
  {
    Index n = 0;
    for (auto const &l : layers) {
      n += l.weight.size() + l.bias.size();
    }
    return n;
  }

  bool operator==(ModelParams const &other) const
  {
    if (layers.size() != other.layers.size()) {
      return false;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto const &a = layers[i];
      auto const &b = other.layers[i];
      if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.bias.size() != b.bias.size()) {
        return false;
      }
      if (a.weight != b.weight || a.bias != b.bias) {
        return false;
      }
    }
    return true;
  }
};

using Params = ModelParams<double>;

inline constexpr std::size_t kForecasterLayers = 3;

template <typename Scalar> bool same_shape(ModelParams<Scalar> const &a, ModelParams<Scalar> const &b)
{
  if (a.layers.size() != b.layers.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight.rows() != b.layers[i].weight.rows() ||
        a.layers[i].weight.cols() != b.layers[i].weight.cols() ||
        a.layers[i].bias.size() != b.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

/// Throws ConfigError unless layer shapes chain and all entries are finite.
template <typename Scalar> void validate(ModelParams<Scalar> const &p)
{
  if (p.layers.empty()) {
    throw ConfigError("model has no layers");
  }
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto const &l = p.layers[i];
    if (l.bias.size() != l.weight.rows()) {
      throw ConfigError("layer " + std::to_string(i) + ": bias length " + std::to_string(l.bias.size()) +
                        " does not match weight " + shape_string(l.weight.rows(), l.weight.cols()));
    }
    if (i > 0 && p.layers[i - 1].out_dim() != l.in_dim()) {
      throw ConfigError("layer " + std::to_string(i) + ": input dim " + std::to_string(l.in_dim()) +
                        " does not match previous output dim " + std::to_string(p.layers[i - 1].out_dim()));
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw ConfigError("layer " + std::to_string(i) + " has non-finite entries");
    }
  }
}

template <typename Scalar> ModelParams<Scalar> zeros_like(ModelParams<Scalar> const &p)
{
  ModelParams<Scalar> z;
  z.layers.reserve(p.layers.size());
  for (auto const &l : p.layers) {
    z.layers.push_back({Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()), Vector<Scalar>::Zero(l.bias.size())});
  }
  return z;
}

/// Concatenates every layer's weight (column-major) then bias.
template <typename Scalar> Vector<Scalar> to_flat(ModelParams<Scalar> const &p)
{
  Vector<Scalar> v(p.size());
  Index at = 0;
  for (auto const &l : p.layers) {
    v.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    v.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return v;
}

template <typename Scalar>
ModelParams<Scalar> from_flat(ModelParams<Scalar> const &shape, Eigen::Ref<Vector<Scalar> const> const &v)
{
  if (v.size() != shape.size()) {
    throw ConfigError("flat parameter vector has " + std::to_string(v.size()) + " entries, expected " +
                      std::to_string(shape.size()));
  }
  ModelParams<Scalar> p = zeros_like(shape);
  Index at = 0;
  for (auto &l : p.layers) {
    l.weight.reshaped() = v.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = v.segment(at, l.bias.size());
    at += l.bias.size();
  }
  return p;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases, drawn
/// layer by layer, weights column-major before biases.
template <typename Scalar = double> ModelParams<Scalar> init_mlp(std::vector<Index> const &dims, Rng &rng)
{
  if (dims.size() < 2) {
    throw ConfigError("an MLP needs at least an input and an output dimension");
  }
  ModelParams<Scalar> p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Index const in = dims[i];
    Index const out = dims[i + 1];
    if (in < 1 || out < 1) {
      throw ConfigError("layer dimensions must be positive");
    }
    double const bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer<Scalar> l{Matrix<Scalar>(out, in), Vector<Scalar>(out)};
    for (Index c = 0; c < in; ++c) {
      for (Index r = 0; r < out; ++r) {
        l.weight(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    }
    for (Index r = 0; r < out; ++r) {
      l.bias(r) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

/// Three-layer forecaster mapping L x K windows onto M x K horizons.
template <typename Scalar = double>
ModelParams<Scalar> make_forecaster(Index input_len, Index output_len, Index features, Index hidden, Rng &rng)
{
  if (input_len < 1 || output_len < 1 || features < 1 || hidden < 1) {
    throw ConfigError("forecaster dimensions must be positive");
  }
  return init_mlp<Scalar>({input_len * features, hidden, hidden, output_len * features}, rng);
}

/// Activations kept by the forward pass; `post[0]` is the input batch and
/// `post[i + 1]` is the output of layer i (after tanh on hidden layers).
template <typename Scalar> struct ForwardCache
{
  std::vector<Matrix<Scalar>> post;

  Matrix<Scalar> const &output() const { return post.back(); }
};

template <typename Scalar>
ForwardCache<Scalar> forward_cached(ModelParams<Scalar> const &p, ConstRef<Scalar> const &batch)
{
  if (p.layers.empty()) {
    throw ConfigError("model has no layers");
  }
  if (batch.rows() != p.input_dim()) {
    throw ConfigError("input has " + std::to_string(batch.rows()) + " rows, model expects " +
                      std::to_string(p.input_dim()));
  }
  ForwardCache<Scalar> cache;
  cache.post.reserve(p.layers.size() + 1);
  cache.post.emplace_back(batch);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto const &l = p.layers[i];
    Matrix<Scalar> z = l.weight * cache.post.back();
    z.colwise() += l.bias;
    if (i + 1 < p.layers.size()) {
      z = z.array().tanh().matrix();
    }
    cache.post.push_back(std::move(z));
  }
  return cache;
}

/// Batched forward pass: input is in_dim x N, output is out_dim x N.
template <typename Scalar>
Matrix<Scalar> forward(ModelParams<Scalar> const &p, ConstRef<Scalar> const &batch)
{
  return std::move(forward_cached(p, batch).post.back());
}

/// Reverse pass. `upstream` is d(loss)/d(output), out_dim x N; gradients are
/// summed over the batch columns.
template <typename Scalar>
ModelParams<Scalar> backward(ModelParams<Scalar> const &p, ForwardCache<Scalar> const &cache,
                             ConstRef<Scalar> const &upstream)
{
  auto const &out = cache.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ConfigError("upstream gradient is " + shape_string(upstream.rows(), upstream.cols()) + ", output is " +
                      shape_string(out.rows(), out.cols()));
  }
  ModelParams<Scalar> g = zeros_like(p);
  Matrix<Scalar> delta = upstream;
  for (std::size_t i = p.layers.size(); i-- > 0;) {
    if (i + 1 < p.layers.size()) {
      // tanh' = 1 - tanh^2
      delta.array() *= (Scalar(1) - cache.post[i + 1].array().square());
    }
    g.layers[i].weight.noalias() = delta * cache.post[i].transpose();
    g.layers[i].bias = delta.rowwise().sum();
    if (i > 0) {
      delta = p.layers[i].weight.transpose() * delta;
    }
  }
  return g;
}

template <typename Scalar>
ModelParams<Scalar> backward(ModelParams<Scalar> const &p, ConstRef<Scalar> const &batch,
                             ConstRef<Scalar> const &upstream)
{
  return backward(p, forward_cached(p, batch), upstream);
}

/// Time-major flattening of an L x K window into a column of length L * K.
template <typename Derived> Vector<typename Derived::Scalar> flatten(Eigen::MatrixBase<Derived> const &window)
{
  using S = typename Derived::Scalar;
  Vector<S> v(window.size());
  Index const K = window.cols();
  for (Index t = 0; t < window.rows(); ++t) {
    for (Index k = 0; k < K; ++k) {
      v(t * K + k) = window(t, k);
    }
  }
  return v;
}

template <typename Derived>
Matrix<typename Derived::Scalar> unflatten(Eigen::MatrixBase<Derived> const &column, Index features)
{
  using S = typename Derived::Scalar;
  if (features < 1 || column.size() % features != 0) {
    throw ConfigError("cannot reshape " + std::to_string(column.size()) + " values into rows of " +
                      std::to_string(features));
  }
  Index const rows = column.size() / features;
  Matrix<S> m(rows, features);
  for (Index t = 0; t < rows; ++t) {
    for (Index k = 0; k < features; ++k) {
      m(t, k) = column(t * features + k);
    }
  }
  return m;
}

/// Single-window forecast: L x K in, M x K out.
template <typename Scalar>
Matrix<Scalar> mlp_forward(ModelParams<Scalar> const &p, ConstRef<Scalar> const &past)
{
  Matrix<Scalar> column = flatten(past);
  return unflatten(forward(p, column), past.cols());
}

/// Single-window gradient of <upstream, forward(p, past)>.
template <typename Scalar>
ModelParams<Scalar> mlp_backward(ModelParams<Scalar> const &p, ConstRef<Scalar> const &past,
                                 ConstRef<Scalar> const &upstream)
{
  if (!upstream.allFinite()) {
    throw NumericError("upstream gradient has non-finite entries");
  }
  if (upstream.cols() != past.cols()) {
    throw ConfigError("upstream has " + std::to_string(upstream.cols()) + " features, input has " +
                      std::to_string(past.cols()));
  }
  Matrix<Scalar> x = flatten(past);
  Matrix<Scalar> u = flatten(upstream);
  return backward(p, x, u);
}

// Elementwise helpers over whole parameter sets.

template <typename Scalar, typename Fn> void for_each_tensor(ModelParams<Scalar> &a, ModelParams<Scalar> const &b, Fn &&fn)
{
  if (!same_shape(a, b)) {
    throw ConfigError("parameter sets have different shapes");
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    fn(a.layers[i].weight, b.layers[i].weight);
    fn(a.layers[i].bias, b.layers[i].bias);
  }
}

template <typename Scalar> ModelParams<Scalar> scaled(ModelParams<Scalar> p, Scalar s)
{
  for (auto &l : p.layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return p;
}

template <typename Scalar> Scalar max_abs_diff(ModelParams<Scalar> const &a, ModelParams<Scalar> const &b)
{
  if (!same_shape(a, b)) {
    throw ConfigError("parameter sets have different shapes");
  }
  Scalar m{0};
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    m = std::max(m, (a.layers[i].weight - b.layers[i].weight).cwiseAbs().maxCoeff());
    m = std::max(m, (a.layers[i].bias - b.layers[i].bias).cwiseAbs().maxCoeff());
  }
  return m;
}

template <typename Scalar> bool all_finite(ModelParams<Scalar> const &p)
{
  for (auto const &l : p.layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      return false;
    }
  }
  return true;
}

} // namespace wavebound
