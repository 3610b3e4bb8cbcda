#pragma once

// Per-element empirical risk and the training objectives built on it.
//
// Every objective is a mean over the M x K output elements of a "bounded"
// term  |r - c| + c,  which equals r when r >= c and 2c - r below the bound.
// The gradient of such a term w.r.t. r is +1 or -1, so each objective's
// gradient w.r.t. predictions is  mask (.) dMSE/dpred  with an M x K sign
// mask. Ties at the bound resolve to +1 (descent).

#include "core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace wavebound {

template <typename Scalar> struct RiskMatrix
{
  Matrix<Scalar> values; // M x K, entry (j, k) = batch mean of squared error
  Index batch_count = 0;

  Index horizon() const { return values.rows(); }
  Index features() const { return values.cols(); }
  Scalar mean() const { return values.mean(); }
};

enum class ObjectiveKind
{
  Plain,
  Flooding,
  ConstantFlooding,
  WaveAvg,
  WaveIndiv,
};

struct Objective
{
  ObjectiveKind kind = ObjectiveKind::Plain;
  double flood_level = 0.0; // b, used by Flooding and ConstantFlooding
  double epsilon = 0.0;     // used by WaveAvg and WaveIndiv; +inf disables the bound

  static Objective plain() { return {}; }
  static Objective flooding(double b) { return {ObjectiveKind::Flooding, b, 0.0}; }
  static Objective constant_flooding(double b) { return {ObjectiveKind::ConstantFlooding, b, 0.0}; }
  static Objective wave_avg(double eps) { return {ObjectiveKind::WaveAvg, 0.0, eps}; }
  static Objective wave_indiv(double eps) { return {ObjectiveKind::WaveIndiv, 0.0, eps}; }

  bool needs_target() const { return kind == ObjectiveKind::WaveAvg || kind == ObjectiveKind::WaveIndiv; }

  void validate() const
  {
    if (!(flood_level >= 0.0) || std::isinf(flood_level)) {
      throw ConfigError("flood level must be finite and >= 0");
    }
    if (!(epsilon >= 0.0)) {
      throw ConfigError("epsilon must be >= 0");
    }
  }
};

std::string_view to_string(ObjectiveKind kind);
/// Accepts plain, flooding, constant_flooding, wave_avg, wave_indiv.
ObjectiveKind parse_objective_kind(std::string_view name);

/// |value - bound| + bound, evaluated piecewise so that the result is exactly
/// `value` on or above the bound (also for bound = -inf).
template <typename Scalar> Scalar bounded(Scalar value, Scalar bound)
{
  return value >= bound ? value : Scalar(2) * bound - value;
}

template <typename Scalar> Scalar bound_sign(Scalar value, Scalar bound) { return value >= bound ? Scalar(1) : Scalar(-1); }

/// Batch-mean squared error per output element. Predictions and targets are
/// flattened batches (M*K x N, time-major rows).
template <typename Scalar>
RiskMatrix<Scalar> per_element_risk(ConstRef<Scalar> const &pred,
                                    ConstRef<Scalar> const &target, Index horizon, Index features)
{
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ConfigError("prediction " + shape_string(pred.rows(), pred.cols()) + " and target " +
                      shape_string(target.rows(), target.cols()) + " differ in shape");
  }
  if (pred.rows() != horizon * features) {
    throw ConfigError("flattened rows " + std::to_string(pred.rows()) + " != M*K = " +
                      std::to_string(horizon * features));
  }
  if (pred.cols() < 1) {
    throw ConfigError("risk needs at least one sample");
  }
  Vector<Scalar> const col = (pred - target).array().square().rowwise().sum().matrix() / Scalar(pred.cols());
  RiskMatrix<Scalar> r;
  r.values.resize(horizon, features);
  for (Index j = 0; j < horizon; ++j) {
    for (Index k = 0; k < features; ++k) {
      r.values(j, k) = col(j * features + k);
    }
  }
  r.batch_count = pred.cols();
  return r;
}

template <typename Scalar> Scalar flooding_objective(Scalar risk_mean, Scalar flood_level)
{
  return bounded(risk_mean, flood_level);
}

template <typename Scalar> Scalar constant_flooding_objective(RiskMatrix<Scalar> const &risk, Scalar flood_level)
{
  Matrix<Scalar> const terms = risk.values.unaryExpr([&](Scalar r) { return bounded(r, flood_level); });
  return terms.mean();
}

template <typename Scalar> void require_same_shape(RiskMatrix<Scalar> const &a, RiskMatrix<Scalar> const &b)
{
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw ConfigError("risk matrices differ in shape: " + shape_string(a.values.rows(), a.values.cols()) + " vs " +
                      shape_string(b.values.rows(), b.values.cols()));
  }
}

/// Mean over elements of |R_jk(source) - (R_jk(target) - eps)| + (R_jk(target) - eps).
template <typename Scalar>
Scalar wave_objective_indiv(RiskMatrix<Scalar> const &source, RiskMatrix<Scalar> const &target, Scalar epsilon)
{
  require_same_shape(source, target);
  Matrix<Scalar> const terms =
      source.values.binaryExpr(target.values, [&](Scalar s, Scalar t) { return bounded(s, t - epsilon); });
  return terms.mean();
}

/// The same bound applied once to the batch means.
template <typename Scalar> Scalar wave_objective_avg(Scalar source_mean, Scalar target_mean, Scalar epsilon)
{
  return bounded(source_mean, target_mean - epsilon);
}

/// +1 where source_jk >= target_jk - eps, -1 elsewhere.
template <typename Scalar>
Matrix<Scalar> gradient_sign_mask(RiskMatrix<Scalar> const &source, RiskMatrix<Scalar> const &target, Scalar epsilon)
{
  require_same_shape(source, target);
  return source.values.binaryExpr(target.values, [&](Scalar s, Scalar t) { return bound_sign(s, t - epsilon); });
}

/// Value of `objective` on a batch. `target` is only read by the wave kinds.
template <typename Scalar>
Scalar objective_value(Objective const &objective, RiskMatrix<Scalar> const &source, std::type_identity_t<RiskMatrix<Scalar>> const *target)
{
  auto const b = static_cast<Scalar>(objective.flood_level);
  auto const eps = static_cast<Scalar>(objective.epsilon);
  switch (objective.kind) {
  case ObjectiveKind::Plain:
    return source.mean();
  case ObjectiveKind::Flooding:
    return flooding_objective(source.mean(), b);
  case ObjectiveKind::ConstantFlooding:
    return constant_flooding_objective(source, b);
  case ObjectiveKind::WaveAvg:
    if (target == nullptr) {
      throw ConfigError("wave_avg needs target-network risks");
    }
    return wave_objective_avg(source.mean(), target->mean(), eps);
  case ObjectiveKind::WaveIndiv:
    if (target == nullptr) {
      throw ConfigError("wave_indiv needs target-network risks");
    }
    return wave_objective_indiv(source, *target, eps);
  }
  throw ConfigError("unknown objective");
}

/// M x K matrix of +-1 multiplying the per-element MSE gradient.
template <typename Scalar>
Matrix<Scalar> objective_sign_mask(Objective const &objective, RiskMatrix<Scalar> const &source,
                                   std::type_identity_t<RiskMatrix<Scalar>> const *target)
{
  auto const b = static_cast<Scalar>(objective.flood_level);
  auto const eps = static_cast<Scalar>(objective.epsilon);
  auto const rows = source.values.rows();
  auto const cols = source.values.cols();
  switch (objective.kind) {
  case ObjectiveKind::Plain:
    return Matrix<Scalar>::Ones(rows, cols);
  case ObjectiveKind::Flooding:
    return Matrix<Scalar>::Constant(rows, cols, bound_sign(source.mean(), b));
  case ObjectiveKind::ConstantFlooding:
    return source.values.unaryExpr([&](Scalar r) { return bound_sign(r, b); });
  case ObjectiveKind::WaveAvg:
    if (target == nullptr) {
      throw ConfigError("wave_avg needs target-network risks");
    }
    return Matrix<Scalar>::Constant(rows, cols, bound_sign(source.mean(), target->mean() - eps));
  case ObjectiveKind::WaveIndiv:
    if (target == nullptr) {
      throw ConfigError("wave_indiv needs target-network risks");
    }
    return gradient_sign_mask(source, *target, eps);
  }
  throw ConfigError("unknown objective");
}

/// Smallest |value - bound| over the bounds the objective uses; +inf for
/// Plain. Points closer than a finite-difference step to a bound sit on a
/// kink of the objective.
template <typename Scalar>
Scalar distance_to_bound(Objective const &objective, RiskMatrix<Scalar> const &source, std::type_identity_t<RiskMatrix<Scalar>> const *target)
{
  auto const b = static_cast<Scalar>(objective.flood_level);
  auto const eps = static_cast<Scalar>(objective.epsilon);
  switch (objective.kind) {
  case ObjectiveKind::Plain:
    return std::numeric_limits<Scalar>::infinity();
  case ObjectiveKind::Flooding:
    return std::abs(source.mean() - b);
  case ObjectiveKind::ConstantFlooding:
    return (source.values.array() - b).abs().minCoeff();
  case ObjectiveKind::WaveAvg:
    return std::abs(source.mean() - (target->mean() - eps));
  case ObjectiveKind::WaveIndiv:
    return (source.values.array() - (target->values.array() - eps)).abs().minCoeff();
  }
  return Scalar(0);
}

/// d(objective)/d(pred) for a flattened batch: mask_jk * 2 (pred - y) / (N M K).
template <typename Scalar>
Matrix<Scalar> objective_upstream(ConstRef<Scalar> const &pred,
                                  ConstRef<Scalar> const &target, Matrix<Scalar> const &mask)
{
  Index const M = mask.rows();
  Index const K = mask.cols();
  Index const N = pred.cols();
  Scalar const scale = Scalar(2) / (Scalar(N) * Scalar(M) * Scalar(K));
  Vector<Scalar> row_mask(M * K);
  for (Index j = 0; j < M; ++j) {
    for (Index k = 0; k < K; ++k) {
      row_mask(j * K + k) = mask(j, k);
    }
  }
  Matrix<Scalar> up = scale * (pred - target);
  up.array().colwise() *= row_mask.array();
  return up;
}

} // namespace wavebound
