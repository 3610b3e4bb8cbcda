#pragma once

#include "adam.hpp"
#include "data.hpp"
#include "ema.hpp"
#include "evaluation.hpp"
#include "mlp.hpp"
#include "risk.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace wavebound {

enum class EvalNetwork
{
  Source,
  Target,
};

std::string_view to_string(EvalNetwork n);
EvalNetwork parse_eval_network(std::string_view name);

struct TrainConfig
{
  Index input_len = 96;
  Index output_len = 96;
  Index hidden = 64;
  Objective objective;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double decay = 0.99; // EMA target decay
  int max_epochs = 30;
  int patience = 3;
  std::uint64_t seed = 1;
  EvalNetwork eval_network = EvalNetwork::Target;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, 0.9, 0.999, 1e-8}; }
};

struct EpochRecord
{
  int epoch = 0;
  double train_objective = 0.0; // mean of batch objectives during the epoch
  double train_mse = 0.0;       // evaluation network on the full train set
  double val_mse = 0.0;
  double test_mse = 0.0;
  VectorXd test_per_step;
  double seconds = 0.0;
};

struct TrainLog
{
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
};

void write_log_csv(std::filesystem::path const &path, TrainLog const &log, bool with_timing = false);
void write_log_jsonl(std::filesystem::path const &path, TrainLog const &log, bool with_timing = false);

struct TrainResult
{
  Params chosen;           // evaluation network at the best validation epoch
  Params source;           // source network at the best validation epoch
  EmaMirror<double> mirror; // target network at the best validation epoch
  TrainLog log;
};

/// Observer for step ordering; called after each optimizer step and each EMA
/// update with the global iteration index.
struct TrainHooks
{
  enum class Event
  {
    OptimizerStep,
    EmaUpdate,
  };
  std::function<void(std::int64_t iteration, Event event)> on_event;
};

/// Objective value, plain MSE and parameter gradient on one batch.
struct BatchObjective
{
  double value = 0.0;
  double mse = 0.0;
  Params grads;
  MatrixXd mask;          // M x K signs applied to the MSE gradient
  double bound_distance;  // distance of the batch risks to the nearest bound
};

/// `target` is read only by the wave objectives and gets no gradient.
BatchObjective batch_objective(Params const &source, Params const *target, Objective const &objective,
                               MatrixXd const &inputs, MatrixXd const &targets, Index horizon, Index features);

/// Mini-batched training with early stopping on validation MSE.
TrainResult train(TrainConfig const &config, FlatWindows const &train_set, FlatWindows const &val_set,
                  FlatWindows const &test_set, TrainHooks const *hooks = nullptr);

enum class SweepParam
{
  FloodLevel,
  Epsilon,
  LearningRate,
};

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

struct SweepRow
{
  std::size_t grid_index = 0;
  double value = 0.0;
  double val_mse = 0.0;
  double test_mse = 0.0;
  double test_mae = 0.0;
  double train_mse = 0.0;
  int epochs = 0;
  int best_epoch = 0;
};

TrainConfig with_param(TrainConfig config, SweepParam param, double value);

/// One training run per grid value, ranked by validation MSE (ties keep grid
/// order). Grid points may run on `workers` threads.
std::vector<SweepRow> sweep(TrainConfig const &base, SweepParam param, std::vector<double> const &grid,
                            FlatWindows const &train_set, FlatWindows const &val_set, FlatWindows const &test_set,
                            int workers = 1);

void write_sweep_csv(std::filesystem::path const &path, SweepParam param, std::vector<SweepRow> const &rows);

// Checkpoint layout (little-endian):
//   "WBCKPT\0\0"  u32 version=1  u32 network_count=2  f64 decay
//   per network: u32 layer_count, per layer u64 rows, u64 cols
//   per network, per layer: weight (column-major f64), bias (f64)
//   u64 FNV-1a of everything above
inline constexpr std::uint32_t kCheckpointVersion = 1;

void checkpoint_save(std::filesystem::path const &path, Params const &source, EmaMirror<double> const &mirror);

struct Checkpoint
{
  Params source;
  EmaMirror<double> mirror;
};
Checkpoint checkpoint_load(std::filesystem::path const &path);

} // namespace wavebound
