#include "wavebound/evaluation.hpp"

#include "wavebound/format.hpp"
#include "wavebound/trainer.hpp"

#include <fstream>

namespace wavebound {

namespace {
constexpr Index kEvalChunk = 256;

void require_windows(FlatWindows const &windows)
{
  if (windows.empty()) {
    throw ConfigError("evaluation needs a non-empty window set");
  }
}
} // namespace

MetricRecord metrics_from_predictions(MatrixXd const &pred, MatrixXd const &target, Index horizon, Index features)
{
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.rows() != horizon * features) {
    throw ConfigError("prediction and target shapes do not match M*K x N");
  }
  if (pred.cols() < 1) {
    throw ConfigError("evaluation needs a non-empty window set");
  }
  MatrixXd const diff = pred - target;
  VectorXd const sq = diff.array().square().rowwise().sum();
  double const abs_sum = diff.array().abs().sum();
  auto const n = static_cast<double>(pred.cols());

  MetricRecord m;
  m.sample_count = pred.cols();
  m.per_element_mse.resize(horizon, features);
  for (Index j = 0; j < horizon; ++j) {
    for (Index k = 0; k < features; ++k) {
      m.per_element_mse(j, k) = sq(j * features + k) / n;
    }
  }
  m.per_step_mse = m.per_element_mse.rowwise().mean();
  m.mse = m.per_element_mse.mean();
  m.mae = abs_sum / (n * static_cast<double>(horizon * features));
  return m;
}

MetricRecord evaluate(Params const &params, FlatWindows const &windows)
{
  require_windows(windows);
  Index const M = windows.output_len;
  Index const K = windows.features;
  Index const N = windows.count();
  VectorXd sq = VectorXd::Zero(M * K);
  double abs_sum = 0.0;
  for (Index start = 0; start < N; start += kEvalChunk) {
    Index const n = std::min(kEvalChunk, N - start);
    MatrixXd const pred = forward<double>(params, windows.inputs.middleCols(start, n));
    MatrixXd const diff = pred - windows.targets.middleCols(start, n);
    sq += diff.array().square().rowwise().sum().matrix();
    abs_sum += diff.array().abs().sum();
  }
  MetricRecord m;
  m.sample_count = N;
  m.per_element_mse.resize(M, K);
  for (Index j = 0; j < M; ++j) {
    for (Index k = 0; k < K; ++k) {
      m.per_element_mse(j, k) = sq(j * K + k) / static_cast<double>(N);
    }
  }
  m.per_step_mse = m.per_element_mse.rowwise().mean();
  m.mse = m.per_element_mse.mean();
  m.mae = abs_sum / (static_cast<double>(N) * static_cast<double>(M * K));
  return m;
}

VectorXd per_step_error(Params const &params, FlatWindows const &windows) { return evaluate(params, windows).per_step_mse; }

std::vector<double> generalization_gap(TrainLog const &log)
{
  if (log.epochs.empty()) {
    throw ConfigError("training log is empty");
  }
  std::vector<double> gap;
  gap.reserve(log.epochs.size());
  for (auto const &e : log.epochs) {
    gap.push_back(e.test_mse - e.train_mse);
  }
  return gap;
}

Params filter_normalized_direction(Params const &params, std::uint64_t seed)
{
  Rng rng(seed);
  Params d = zeros_like(params);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto const &w = params.layers[i].weight;
    auto &dw = d.layers[i].weight;
    for (Index c = 0; c < dw.cols(); ++c) {
      for (Index r = 0; r < dw.rows(); ++r) {
        dw(r, c) = rng.normal();
      }
    }
    for (Index r = 0; r < dw.rows(); ++r) {
      double const target_norm = w.row(r).norm();
      double const norm = dw.row(r).norm();
      if (target_norm == 0.0 || norm == 0.0) {
        dw.row(r).setZero();
      } else {
        dw.row(r) *= target_norm / norm;
      }
    }
  }
  return d;
}

std::vector<SlicePoint> loss_slice(Params const &params, Params const &direction, double radius, int steps,
                                   FlatWindows const &windows)
{
  if (steps < 3 || steps % 2 == 0) {
    throw ConfigError("loss slice needs an odd number of steps >= 3");
  }
  if (!(radius > 0.0) || std::isinf(radius)) {
    throw ConfigError("loss slice radius must be positive and finite");
  }
  if (!same_shape(params, direction)) {
    throw ConfigError("slice direction does not match the parameter shapes");
  }
  require_windows(windows);
  int const half = (steps - 1) / 2;
  std::vector<SlicePoint> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = -half; i <= half; ++i) {
    double const t = radius * static_cast<double>(i) / static_cast<double>(half);
    Params shifted = params;
    if (i != 0) {
      for_each_tensor(shifted, direction, [&](auto &p, auto const &d) { p += t * d; });
    }
    out.push_back({t, evaluate(shifted, windows).mse});
  }
  return out;
}

std::vector<SlicePoint> loss_slice(Params const &params, std::uint64_t direction_seed, double radius, int steps,
                                   FlatWindows const &windows)
{
  return loss_slice(params, filter_normalized_direction(params, direction_seed), radius, steps, windows);
}

void write_metrics_header(std::ostream &out) { out << "label,mse,mae,samples\n"; }

void write_metrics_row(std::ostream &out, std::string const &label, MetricRecord const &m)
{
  out << label << ',' << format_double(m.mse) << ',' << format_double(m.mae) << ',' << m.sample_count << '\n';
}

namespace {
std::ofstream open_out(std::filesystem::path const &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  return out;
}
} // namespace

void write_per_step_csv(std::filesystem::path const &path, VectorXd const &per_step)
{
  auto out = open_out(path);
  out << "horizon,mse\n";
  for (Index j = 0; j < per_step.size(); ++j) {
    out << (j + 1) << ',' << format_double(per_step(j)) << '\n';
  }
}

void write_slice_csv(std::filesystem::path const &path, std::vector<SlicePoint> const &slice)
{
  auto out = open_out(path);
  out << "t,loss\n";
  for (auto const &p : slice) {
    out << format_double(p.t) << ',' << format_double(p.loss) << '\n';
  }
}

void write_gap_csv(std::filesystem::path const &path, TrainLog const &log)
{
  auto const gap = generalization_gap(log);
  auto out = open_out(path);
  out << "epoch,train_mse,test_mse,gap\n";
  for (std::size_t i = 0; i < gap.size(); ++i) {
    auto const &e = log.epochs[i];
    out << e.epoch << ',' << format_double(e.train_mse) << ',' << format_double(e.test_mse) << ','
        << format_double(gap[i]) << '\n';
  }
}

} // namespace wavebound
