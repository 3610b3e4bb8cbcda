#include "wavebound/trainer.hpp"

#include "wavebound/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace wavebound {

std::string_view to_string(EvalNetwork n) { return n == EvalNetwork::Source ? "source" : "target"; }

EvalNetwork parse_eval_network(std::string_view name)
{
  if (name == "source") {
    return EvalNetwork::Source;
  }
  if (name == "target") {
    return EvalNetwork::Target;
  }
  throw ConfigError("eval_network must be 'source' or 'target', got '" + std::string(name) + "'");
}

void TrainConfig::validate() const
{
  if (input_len < 1 || output_len < 1 || hidden < 1) {
    throw ConfigError("input_len, output_len and hidden must be positive");
  }
  if (batch_size < 1) {
    throw ConfigError("batch_size must be >= 1");
  }
  if (!(learning_rate >= 0.0) || std::isinf(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw ConfigError("decay must lie in [0, 1]");
  }
  if (max_epochs < 1) {
    throw ConfigError("max_epochs must be >= 1");
  }
  if (patience < 1) {
    throw ConfigError("patience must be >= 1");
  }
  objective.validate();
}

BatchObjective batch_objective(Params const &source, Params const *target, Objective const &objective,
                               MatrixXd const &inputs, MatrixXd const &targets, Index horizon, Index features)
{
  auto const cache = forward_cached<double>(source, inputs);
  MatrixXd const &pred = cache.output();
  auto const src_risk = per_element_risk<double>(pred, targets, horizon, features);

  RiskMatrix<double> tgt_risk;
  RiskMatrix<double> const *tgt_ptr = nullptr;
  if (objective.needs_target()) {
    if (target == nullptr) {
      throw ConfigError(std::string(to_string(objective.kind)) + " needs a target network");
    }
    // Target risks are constants: no gradient flows into the target network.
    tgt_risk = per_element_risk<double>(forward<double>(*target, inputs), targets, horizon, features);
    tgt_ptr = &tgt_risk;
  }

  BatchObjective out;
  out.value = objective_value(objective, src_risk, tgt_ptr);
  out.mse = src_risk.mean();
  out.mask = objective_sign_mask(objective, src_risk, tgt_ptr);
  out.bound_distance = distance_to_bound(objective, src_risk, tgt_ptr);
  out.grads = backward<double>(source, cache, objective_upstream<double>(pred, targets, out.mask));
  return out;
}

TrainResult train(TrainConfig const &config, FlatWindows const &train_set, FlatWindows const &val_set,
                  FlatWindows const &test_set, TrainHooks const *hooks)
{
  config.validate();
  if (train_set.empty()) {
    throw ConfigError("training set is empty");
  }
  if (val_set.empty()) {
    throw ConfigError("validation set is empty");
  }
  if (train_set.input_len != config.input_len || train_set.output_len != config.output_len) {
    throw ConfigError("window lengths do not match the training config");
  }
  Index const K = train_set.features;
  Index const M = config.output_len;

  Rng root(config.seed);
  Rng init_rng = root.split();
  Rng shuffle_rng = root.split();

  Params source = make_forecaster<double>(config.input_len, config.output_len, K, config.hidden, init_rng);
  auto mirror = ema_init(source, config.decay);
  auto adam = adam_init(source);
  AdamConfig const adam_cfg = config.adam();

  auto eval_params = [&]() -> Params const & {
    return config.eval_network == EvalNetwork::Source ? source : mirror.target;
  };

  TrainResult result;
  result.chosen = eval_params();
  result.source = source;
  result.mirror = mirror;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  std::int64_t iteration = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto const started = std::chrono::steady_clock::now();
    auto const plan = batches(static_cast<std::size_t>(train_set.count()), config.batch_size, shuffle_rng, true);
    double objective_sum = 0.0;
    for (auto const &idx : plan) {
      FlatWindows const batch = gather(train_set, idx);
      auto const step = batch_objective(source, &mirror.target, config.objective, batch.inputs, batch.targets, M, K);
      if (!std::isfinite(step.value)) {
        throw NumericError("non-finite training loss at iteration " + std::to_string(iteration) + " (epoch " +
                           std::to_string(epoch) + ")");
      }
      objective_sum += step.value;
      adam_step(source, step.grads, adam, adam_cfg);
      if (hooks != nullptr && hooks->on_event) {
        hooks->on_event(iteration, TrainHooks::Event::OptimizerStep);
      }
      ema_update(mirror, source);
      if (hooks != nullptr && hooks->on_event) {
        hooks->on_event(iteration, TrainHooks::Event::EmaUpdate);
      }
      ++iteration;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_objective = objective_sum / static_cast<double>(plan.size());
    Params const &net = eval_params();
    rec.train_mse = evaluate(net, train_set).mse;
    rec.val_mse = evaluate(net, val_set).mse;
    if (!test_set.empty()) {
      auto const m = evaluate(net, test_set);
      rec.test_mse = m.mse;
      rec.test_per_step = m.per_step_mse;
    } else {
      rec.test_mse = std::nan("");
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!std::isfinite(rec.val_mse) || !std::isfinite(rec.train_mse)) {
      throw NumericError("non-finite evaluation loss after epoch " + std::to_string(epoch));
    }
    result.log.epochs.push_back(rec);

    if (rec.val_mse < best_val) {
      best_val = rec.val_mse;
      result.log.best_epoch = epoch;
      result.chosen = net;
      result.source = source;
      result.mirror = mirror;
      bad_epochs = 0;
    } else if (++bad_epochs >= config.patience) {
      break;
    }
  }
  return result;
}

void write_log_csv(std::filesystem::path const &path, TrainLog const &log, bool with_timing)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << "epoch,train_objective,train_mse,val_mse,test_mse" << (with_timing ? ",seconds" : "") << '\n';
  for (auto const &e : log.epochs) {
    out << e.epoch << ',' << format_double(e.train_objective) << ',' << format_double(e.train_mse) << ','
        << format_double(e.val_mse) << ',' << format_double(e.test_mse);
    if (with_timing) {
      out << ',' << format_double(e.seconds);
    }
    out << '\n';
  }
}

void write_log_jsonl(std::filesystem::path const &path, TrainLog const &log, bool with_timing)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  for (auto const &e : log.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_objective"] = e.train_objective;
    j["train_mse"] = e.train_mse;
    j["val_mse"] = e.val_mse;
    j["test_mse"] = std::isfinite(e.test_mse) ? nlohmann::ordered_json(e.test_mse) : nlohmann::ordered_json(nullptr);
    j["test_per_step"] = std::vector<double>(e.test_per_step.data(), e.test_per_step.data() + e.test_per_step.size());
    if (with_timing) {
      j["seconds"] = e.seconds;
    }
    out << j.dump() << '\n';
  }
}

std::string_view to_string(SweepParam p)
{
  switch (p) {
  case SweepParam::FloodLevel:
    return "flood_level";
  case SweepParam::Epsilon:
    return "epsilon";
  case SweepParam::LearningRate:
    return "learning_rate";
  }
  return "unknown";
}

SweepParam parse_sweep_param(std::string_view name)
{
  for (auto p : {SweepParam::FloodLevel, SweepParam::Epsilon, SweepParam::LearningRate}) {
    if (to_string(p) == name) {
      return p;
    }
  }
  throw ConfigError("cannot sweep over '" + std::string(name) + "' (expected flood_level, epsilon or learning_rate)");
}

TrainConfig with_param(TrainConfig config, SweepParam param, double value)
{
  switch (param) {
  case SweepParam::FloodLevel:
    config.objective.flood_level = value;
    break;
  case SweepParam::Epsilon:
    config.objective.epsilon = value;
    break;
  case SweepParam::LearningRate:
    config.learning_rate = value;
    break;
  }
  return config;
}

std::vector<SweepRow> sweep(TrainConfig const &base, SweepParam param, std::vector<double> const &grid,
                            FlatWindows const &train_set, FlatWindows const &val_set, FlatWindows const &test_set,
                            int workers)
{
  if (grid.empty()) {
    throw ConfigError("sweep grid is empty");
  }
  for (double v : grid) {
    with_param(base, param, v).validate();
  }
  std::vector<SweepRow> rows(grid.size());
  auto run_one = [&](std::size_t i) {
    auto const result = train(with_param(base, param, grid[i]), train_set, val_set, test_set);
    auto const &best = result.log.epochs[static_cast<std::size_t>(result.log.best_epoch - 1)];
    SweepRow row;
    row.grid_index = i;
    row.value = grid[i];
    row.val_mse = best.val_mse;
    row.train_mse = best.train_mse;
    if (!test_set.empty()) {
      auto const m = evaluate(result.chosen, test_set);
      row.test_mse = m.mse;
      row.test_mae = m.mae;
    } else {
      row.test_mse = row.test_mae = std::nan("");
    }
    row.epochs = static_cast<int>(result.log.epochs.size());
    row.best_epoch = result.log.best_epoch;
    rows[i] = row;
  };

  auto const n_workers = static_cast<std::size_t>(std::max(1, workers));
  if (n_workers == 1 || grid.size() == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      run_one(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, grid.size()); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
              error = std::current_exception();
            }
          }
        }
      });
    }
    for (auto &t : pool) {
      t.join();
    }
    if (error) {
      std::rethrow_exception(error);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](SweepRow const &a, SweepRow const &b) { return a.val_mse < b.val_mse; });
  return rows;
}

void write_sweep_csv(std::filesystem::path const &path, SweepParam param, std::vector<SweepRow> const &rows)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << "rank,grid_index," << to_string(param) << ",val_mse,test_mse,test_mae,train_mse,epochs,best_epoch\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto const &row = rows[r];
    out << (r + 1) << ',' << row.grid_index << ',' << format_double(row.value) << ',' << format_double(row.val_mse)
        << ',' << format_double(row.test_mse) << ',' << format_double(row.test_mae) << ','
        << format_double(row.train_mse) << ',' << row.epochs << ',' << row.best_epoch << '\n';
  }
}

} // namespace wavebound
