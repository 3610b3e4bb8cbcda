#include "test_support.hpp"
#include "wavebound/trainer.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <limits>

using namespace wavebound;
namespace fs = std::filesystem;

namespace {

struct Sets
{
  FlatWindows train, val, test;
};

Sets small_sets(Index L = 8, Index M = 4)
{
  auto const s = split_and_standardize(synth_series(300, 0.5, 1), SplitSpec{7, 1, 2});
  return {flatten_windows(windowize(s.train, L, M)), flatten_windows(windowize(s.val, L, M)),
          flatten_windows(windowize(s.test, L, M))};
}

TrainConfig small_config()
{
  TrainConfig c;
  c.input_len = 8;
  c.output_len = 4;
  c.hidden = 8;
  c.batch_size = 16;
  c.max_epochs = 3;
  c.patience = 5;
  c.seed = 7;
  return c;
}

bool same_log(TrainLog const &a, TrainLog const &b)
{
  if (a.best_epoch != b.best_epoch || a.epochs.size() != b.epochs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    auto const &x = a.epochs[i];
    auto const &y = b.epochs[i];
    if (x.epoch != y.epoch || x.train_objective != y.train_objective || x.train_mse != y.train_mse ||
        x.val_mse != y.val_mse || x.test_mse != y.test_mse || x.test_per_step != y.test_per_step) {
      return false;
    }
  }
  return true;
}

std::string slurp(fs::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path temp_dir()
{
  auto d = fs::temp_directory_path() / "wavebound_test_trainer";
  fs::create_directories(d);
  return d;
}

} // namespace

TEST(Train, ZeroLearningRateKeepsParameters)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.learning_rate = 0.0;
  Rng root(cfg.seed);
  Rng init = root.split();
  auto const initial = make_forecaster<double>(8, 4, 1, 8, init);
  auto const r = train(cfg, sets.train, sets.val, sets.test);
  EXPECT_TRUE(r.source == initial);
  EXPECT_TRUE(r.mirror.target == initial);
  EXPECT_EQ(r.log.epochs.size(), 3u);
}

TEST(Train, InfiniteEpsilonMatchesPlainBitForBit)
{
  auto const sets = small_sets();
  auto plain = small_config();
  auto wave = plain;
  wave.objective = Objective::wave_indiv(std::numeric_limits<double>::infinity());
  auto const a = train(plain, sets.train, sets.val, sets.test);
  auto const b = train(wave, sets.train, sets.val, sets.test);
  EXPECT_TRUE(a.source == b.source);
  EXPECT_TRUE(a.mirror.target == b.mirror.target);
  EXPECT_TRUE(same_log(a.log, b.log));
}

TEST(Train, ZeroFloodLevelMatchesPlainBitForBit)
{
  auto const sets = small_sets();
  auto plain = small_config();
  auto flood = plain;
  flood.objective = Objective::flooding(0.0);
  auto const a = train(plain, sets.train, sets.val, sets.test);
  auto const b = train(flood, sets.train, sets.val, sets.test);
  EXPECT_TRUE(a.source == b.source);
  EXPECT_TRUE(same_log(a.log, b.log));
}

TEST(Train, EmaFollowsEveryOptimizerStep)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.objective = Objective::wave_indiv(0.01);
  std::vector<std::pair<std::int64_t, TrainHooks::Event>> events;
  TrainHooks hooks;
  hooks.on_event = [&](std::int64_t it, TrainHooks::Event e) { events.emplace_back(it, e); };
  train(cfg, sets.train, sets.val, sets.test, &hooks);

  auto const per_epoch = static_cast<std::int64_t>((sets.train.count() + 15) / 16);
  ASSERT_EQ(static_cast<std::int64_t>(events.size()), 2 * per_epoch * cfg.max_epochs);
  for (std::size_t i = 0; i < events.size(); i += 2) {
    auto const it = static_cast<std::int64_t>(i / 2);
    EXPECT_EQ(events[i].first, it);
    EXPECT_EQ(events[i].second, TrainHooks::Event::OptimizerStep);
    EXPECT_EQ(events[i + 1].first, it);
    EXPECT_EQ(events[i + 1].second, TrainHooks::Event::EmaUpdate);
  }
}

TEST(Train, SameConfigSameLog)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.objective = Objective::wave_avg(0.01);
  auto const a = train(cfg, sets.train, sets.val, sets.test);
  auto const b = train(cfg, sets.train, sets.val, sets.test);
  EXPECT_TRUE(same_log(a.log, b.log));
  EXPECT_TRUE(a.chosen == b.chosen);
  cfg.seed = 8;
  auto const c = train(cfg, sets.train, sets.val, sets.test);
  EXPECT_FALSE(same_log(a.log, c.log));
}

TEST(Train, LogIsWellFormed)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.objective = Objective::constant_flooding(0.05);
  cfg.max_epochs = 4;
  auto const r = train(cfg, sets.train, sets.val, sets.test);
  ASSERT_FALSE(r.log.epochs.empty());
  for (std::size_t i = 0; i < r.log.epochs.size(); ++i) {
    auto const &e = r.log.epochs[i];
    EXPECT_EQ(e.epoch, static_cast<int>(i + 1));
    EXPECT_TRUE(std::isfinite(e.train_objective) && std::isfinite(e.train_mse) && std::isfinite(e.val_mse) &&
                std::isfinite(e.test_mse));
    EXPECT_EQ(e.test_per_step.size(), 4);
  }
  double best = std::numeric_limits<double>::infinity();
  for (auto const &e : r.log.epochs) {
    best = std::min(best, e.val_mse);
  }
  EXPECT_EQ(r.log.epochs[static_cast<std::size_t>(r.log.best_epoch - 1)].val_mse, best);
  EXPECT_EQ(evaluate(r.chosen, sets.val).mse, best);
}

TEST(Train, EarlyStoppingHonoursPatience)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.learning_rate = 0.0; // validation never improves after epoch 1
  cfg.patience = 2;
  cfg.max_epochs = 10;
  auto const r = train(cfg, sets.train, sets.val, sets.test);
  EXPECT_EQ(r.log.best_epoch, 1);
  EXPECT_EQ(r.log.epochs.size(), 3u);
}

TEST(Train, InputErrors)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  EXPECT_THROW(train(cfg, sets.train, FlatWindows{}, sets.test), ConfigError);
  cfg.output_len = 5;
  EXPECT_THROW(train(cfg, sets.train, sets.val, sets.test), ConfigError);
  cfg = small_config();
  cfg.objective = Objective::flooding(-1.0);
  EXPECT_THROW(train(cfg, sets.train, sets.val, sets.test), ConfigError);
}

TEST(Train, DivergenceNamesTheIteration)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.learning_rate = 1e300;
  try {
    train(cfg, sets.train, sets.val, sets.test);
    FAIL() << "expected NumericError";
  } catch (NumericError const &e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos) << e.what();
  }
}

TEST(BatchObjective, PlainGradientIsMeanMseGradient)
{
  Rng rng(3);
  Index const L = 6, M = 3, K = 2, N = 5;
  auto const p = make_forecaster<double>(L, M, K, 7, rng);
  MatrixXd const x = wavebound::testing::random_matrix(L * K, N, rng);
  MatrixXd const y = wavebound::testing::random_matrix(M * K, N, rng);
  auto const b = batch_objective(p, nullptr, Objective::plain(), x, y, M, K);
  MatrixXd const upstream = 2.0 * (forward<double>(p, x) - y) / double(N * M * K);
  auto const expect = backward<double>(p, x, upstream);
  EXPECT_LE(max_abs_diff(b.grads, expect), 1e-12);
  EXPECT_NEAR(b.value, (forward<double>(p, x) - y).array().square().mean(), 1e-12);
}

TEST(BatchObjective, WaveGradientMatchesFiniteDifferences)
{
  Rng rng(5);
  Index const L = 4, M = 2, K = 2, N = 6;
  auto const src = make_forecaster<double>(L, M, K, 5, rng);
  auto const tgt = make_forecaster<double>(L, M, K, 5, rng);
  MatrixXd const x = wavebound::testing::random_matrix(L * K, N, rng);
  MatrixXd const y = wavebound::testing::random_matrix(M * K, N, rng);
  auto const obj = Objective::wave_indiv(0.05);
  auto const b = batch_objective(src, &tgt, obj, x, y, M, K);
  ASSERT_GT(b.bound_distance, 1e-3);
  auto const f = [&](Params const &q) { return batch_objective(q, &tgt, obj, x, y, M, K).value; };
  VectorXd const fd = wavebound::testing::central_difference(src, f, 1e-6);
  VectorXd const an = to_flat(b.grads);
  for (Index i = 0; i < an.size(); ++i) {
    ASSERT_TRUE(wavebound::testing::grad_close(an(i), fd(i), 1e-4, 1e-8)) << i << ": " << an(i) << " vs " << fd(i);
  }
  EXPECT_THROW(batch_objective(src, nullptr, obj, x, y, M, K), ConfigError);
}

TEST(Checkpoint, RoundTripIsByteIdentical)
{
  Rng rng(11);
  auto const src = make_forecaster<double>(8, 4, 2, 6, rng);
  auto mirror = ema_init(src, 0.97);
  ema_update(mirror, make_forecaster<double>(8, 4, 2, 6, rng));
  auto const dir = temp_dir();
  checkpoint_save(dir / "a.bin", src, mirror);
  auto const loaded = checkpoint_load(dir / "a.bin");
  EXPECT_TRUE(loaded.source == src);
  EXPECT_TRUE(loaded.mirror.target == mirror.target);
  EXPECT_EQ(loaded.mirror.decay, 0.97);
  checkpoint_save(dir / "b.bin", loaded.source, loaded.mirror);
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));

  MatrixXd const probe = wavebound::testing::random_matrix(16, 3, rng);
  EXPECT_EQ(forward<double>(loaded.source, probe), forward<double>(src, probe));
  EXPECT_EQ(forward<double>(loaded.mirror.target, probe), forward<double>(mirror.target, probe));
}

TEST(Checkpoint, DamagedFilesAreRejected)
{
  Rng rng(12);
  auto const src = make_forecaster<double>(4, 2, 1, 3, rng);
  auto const dir = temp_dir();
  checkpoint_save(dir / "ok.bin", src, ema_init(src, 0.99));
  auto const bytes = slurp(dir / "ok.bin");

  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(checkpoint_load(dir / "short.bin"), DataError);

  auto flipped = bytes;
  flipped[flipped.size() / 2] = static_cast<char>(flipped[flipped.size() / 2] ^ 0x10);
  std::ofstream(dir / "flip.bin", std::ios::binary) << flipped;
  try {
    checkpoint_load(dir / "flip.bin");
    FAIL() << "expected DataError";
  } catch (DataError const &e) {
    EXPECT_NE(std::string(e.what()).find("integrity"), std::string::npos) << e.what();
  }

  std::ofstream(dir / "empty.bin", std::ios::binary) << "";
  EXPECT_THROW(checkpoint_load(dir / "empty.bin"), DataError);
  EXPECT_THROW(checkpoint_load(dir / "missing.bin"), IoError);
}

TEST(Sweep, SingletonGridMatchesTrain)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.objective = Objective::wave_indiv(0.01);
  auto const rows = sweep(cfg, SweepParam::Epsilon, {0.01}, sets.train, sets.val, sets.test);
  auto const r = train(cfg, sets.train, sets.val, sets.test);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].val_mse, r.log.epochs[static_cast<std::size_t>(r.log.best_epoch - 1)].val_mse);
  EXPECT_EQ(rows[0].test_mse, evaluate(r.chosen, sets.test).mse);
  EXPECT_EQ(rows[0].best_epoch, r.log.best_epoch);
  EXPECT_THROW(sweep(cfg, SweepParam::Epsilon, {}, sets.train, sets.val, sets.test), ConfigError);
}

TEST(Sweep, ZeroFloodArmEqualsPlain)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.objective = Objective::flooding(0.0);
  auto const rows = sweep(cfg, SweepParam::FloodLevel, {0.0, 0.1}, sets.train, sets.val, sets.test);
  ASSERT_EQ(rows.size(), 2u);
  auto const plain = train(small_config(), sets.train, sets.val, sets.test);
  auto const zero = rows[0].grid_index == 0 ? rows[0] : rows[1];
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_EQ(zero.test_mse, evaluate(plain.chosen, sets.test).mse);
}

TEST(Sweep, RowsReproducibleAndWorkerCountIrrelevant)
{
  auto const sets = small_sets();
  auto cfg = small_config();
  cfg.objective = Objective::wave_indiv(0.01);
  std::vector<double> const grid{0.01, 0.001};
  auto const serial = sweep(cfg, SweepParam::Epsilon, grid, sets.train, sets.val, sets.test, 1);
  auto const parallel = sweep(cfg, SweepParam::Epsilon, grid, sets.train, sets.val, sets.test, 2);
  ASSERT_EQ(serial.size(), 2u);
  EXPECT_LE(serial[0].val_mse, serial[1].val_mse);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].grid_index, parallel[i].grid_index);
    EXPECT_EQ(serial[i].test_mse, parallel[i].test_mse);
    auto const single = train(with_param(cfg, SweepParam::Epsilon, grid[serial[i].grid_index]), sets.train,
                              sets.val, sets.test);
    EXPECT_EQ(serial[i].test_mse, evaluate(single.chosen, sets.test).mse);
  }
  EXPECT_THROW(parse_sweep_param("hidden"), ConfigError);
}

TEST(TrainLog, CsvAndJsonl)
{
  TrainLog log;
  EpochRecord e;
  e.epoch = 1;
  e.train_objective = 0.5;
  e.train_mse = 0.25;
  e.val_mse = 0.125;
  e.test_mse = 0.1;
  e.test_per_step = VectorXd::Constant(2, 0.1);
  e.seconds = 3.0;
  log.epochs.push_back(e);
  log.best_epoch = 1;
  auto const dir = temp_dir();
  write_log_csv(dir / "log.csv", log);
  EXPECT_EQ(slurp(dir / "log.csv"), "epoch,train_objective,train_mse,val_mse,test_mse\n1,0.5,0.25,0.125,0.1\n");
  write_log_csv(dir / "log_t.csv", log, true);
  EXPECT_NE(slurp(dir / "log_t.csv").find(",seconds"), std::string::npos);
  write_log_jsonl(dir / "log.jsonl", log);
  EXPECT_EQ(slurp(dir / "log.jsonl"), "{\"epoch\":1,\"train_objective\":0.5,\"train_mse\":0.25,\"val_mse\":0.125,"
                                      "\"test_mse\":0.1,\"test_per_step\":[0.1,0.1]}\n");
}
