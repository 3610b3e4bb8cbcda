#pragma once

// Independent oracles shared by the unit and acceptance suites.

#include "wavebound/mlp.hpp"
#include "wavebound/rng.hpp"

#include <cmath>
#include <functional>

namespace wavebound::testing {

inline MatrixXd random_matrix(Index rows, Index cols, Rng &rng, double scale = 1.0)
{
  MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      m(r, c) = scale * rng.normal();
    }
  }
  return m;
}

/// Straight-line forward pass: explicit loops, no Eigen products.
inline VectorXd loop_forward(Params const &p, VectorXd const &x)
{
  std::vector<double> act(x.data(), x.data() + x.size());
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    auto const &l = p.layers[li];
    std::vector<double> next(static_cast<std::size_t>(l.out_dim()));
    for (Index r = 0; r < l.out_dim(); ++r) {
      double s = l.bias(r);
      for (Index c = 0; c < l.in_dim(); ++c) {
        s += l.weight(r, c) * act[static_cast<std::size_t>(c)];
      }
      next[static_cast<std::size_t>(r)] = (li + 1 < p.layers.size()) ? std::tanh(s) : s;
    }
    act = std::move(next);
  }
  return Eigen::Map<VectorXd>(act.data(), static_cast<Index>(act.size()));
}

/// Central differences of a scalar function of the flattened parameters.
inline VectorXd central_difference(Params const &p, std::function<double(Params const &)> const &f, double h)
{
  VectorXd theta = to_flat(p);
  VectorXd g(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    double const orig = theta(i);
    theta(i) = orig + h;
    double const up = f(from_flat<double>(p, theta));
    theta(i) = orig - h;
    double const down = f(from_flat<double>(p, theta));
    theta(i) = orig;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// Passes when |a - b| <= rel * max(|a|, |b|) or |a - b| <= abs_floor.
inline bool grad_close(double a, double b, double rel, double abs_floor)
{
  double const diff = std::abs(a - b);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

} // namespace wavebound::testing
