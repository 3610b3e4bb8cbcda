#pragma once

#include "data.hpp"
#include "mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wavebound {

struct MetricRecord
{
  double mse = 0.0;
  double mae = 0.0;
  VectorXd per_step_mse;     // M
  MatrixXd per_element_mse;  // M x K
  Index sample_count = 0;
};

/// Metrics of flattened predictions against flattened targets (M*K x N).
MetricRecord metrics_from_predictions(MatrixXd const &pred, MatrixXd const &target, Index horizon, Index features);

/// Forward pass over the whole set in fixed-size chunks, summed in window
/// order.
MetricRecord evaluate(Params const &params, FlatWindows const &windows);
VectorXd per_step_error(Params const &params, FlatWindows const &windows);

struct TrainLog;
/// test MSE - train MSE for every logged epoch.
std::vector<double> generalization_gap(TrainLog const &log);

/// Random Gaussian direction with each weight row rescaled to the norm of the
/// matching row of `params` (filter normalization, one filter per output
/// neuron). Bias directions are zero. Rows whose weights are all zero get a
/// zero direction.
Params filter_normalized_direction(Params const &params, std::uint64_t seed);

struct SlicePoint
{
  double t = 0.0;
  double loss = 0.0;
};

/// MSE at params + t * direction for `steps` evenly spaced t in
/// [-radius, radius]. `steps` must be odd and >= 3 so t = 0 is included.
std::vector<SlicePoint> loss_slice(Params const &params, Params const &direction, double radius, int steps,
                                   FlatWindows const &windows);
std::vector<SlicePoint> loss_slice(Params const &params, std::uint64_t direction_seed, double radius, int steps,
                                   FlatWindows const &windows);

// CSV emitters.
void write_metrics_header(std::ostream &out);
void write_metrics_row(std::ostream &out, std::string const &label, MetricRecord const &m);
void write_per_step_csv(std::filesystem::path const &path, VectorXd const &per_step);
void write_slice_csv(std::filesystem::path const &path, std::vector<SlicePoint> const &slice);
void write_gap_csv(std::filesystem::path const &path, TrainLog const &log);

} // namespace wavebound
