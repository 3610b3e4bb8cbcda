#include "wavebound/config.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace wavebound;

TEST(KeyValue, ParsesCommentsAndOverrides)
{
  auto cfg = KeyValueConfig::from_string("# comment\n objective = wave_indiv \n\nepsilon=0.01\nepsilon = 0.001\n");
  EXPECT_EQ(cfg.get_string("objective", ""), "wave_indiv");
  EXPECT_EQ(cfg.get_double("epsilon", 0.0), 0.001);
  cfg.assign("epsilon=inf");
  EXPECT_EQ(cfg.get_double("epsilon", 0.0), std::numeric_limits<double>::infinity());
  EXPECT_EQ(cfg.get_int("missing", 7), 7);
  EXPECT_EQ(cfg.serialize(), "epsilon=inf\nobjective=wave_indiv\n");
}

TEST(KeyValue, TypedErrors)
{
  auto const cfg = KeyValueConfig::from_string("a=1.5\nb=maybe\nc=x\n");
  EXPECT_THROW(cfg.get_int("a", 0), ConfigError);
  EXPECT_THROW(cfg.get_bool("b", false), ConfigError);
  EXPECT_THROW(cfg.get_double("c", 0.0), ConfigError);
  EXPECT_THROW(KeyValueConfig::from_string("no equals sign"), ConfigError);
  KeyValueConfig k;
  EXPECT_THROW(k.assign("=3"), ConfigError);
  EXPECT_THROW(KeyValueConfig::from_file("/nonexistent/cfg.txt"), ConfigError);
}

TEST(KeyValue, DoubleLists)
{
  EXPECT_EQ(parse_double_list("0.01, 0.001,1e-4"), (std::vector<double>{0.01, 0.001, 1e-4}));
  EXPECT_TRUE(parse_double_list("").empty());
  EXPECT_THROW(parse_double_list("0.1,x"), ConfigError);
}

TEST(Resolve, FillsDefaultsAndRejectsUnknownKeys)
{
  auto const r = resolve(KeyValueConfig::from_string("hidden=16\n"), training_defaults());
  EXPECT_EQ(r.get_string("hidden", ""), "16");
  EXPECT_EQ(r.get_string("objective", ""), "plain");
  EXPECT_EQ(r.entries().size(), training_defaults().size());
  EXPECT_THROW(resolve(KeyValueConfig::from_string("hiden=16\n"), training_defaults()), ConfigError);
  // Resolving twice changes nothing.
  EXPECT_EQ(resolve(r, training_defaults()).serialize(), r.serialize());
}

TEST(TrainConfigFrom, MapsEveryKey)
{
  auto const tc = train_config_from(KeyValueConfig::from_string(
      "input_len=24\noutput_len=12\nhidden=8\nobjective=constant_flooding\nflood_level=0.1\nbatch_size=16\n"
      "learning_rate=3e-4\ndecay=0.9\nmax_epochs=5\npatience=2\nseed=9\neval_network=source\n"));
  EXPECT_EQ(tc.input_len, 24);
  EXPECT_EQ(tc.output_len, 12);
  EXPECT_EQ(tc.hidden, 8);
  EXPECT_EQ(tc.objective.kind, ObjectiveKind::ConstantFlooding);
  EXPECT_EQ(tc.objective.flood_level, 0.1);
  EXPECT_EQ(tc.batch_size, 16u);
  EXPECT_EQ(tc.learning_rate, 3e-4);
  EXPECT_EQ(tc.decay, 0.9);
  EXPECT_EQ(tc.max_epochs, 5);
  EXPECT_EQ(tc.patience, 2);
  EXPECT_EQ(tc.seed, 9u);
  EXPECT_EQ(tc.eval_network, EvalNetwork::Source);

  auto const defaults = train_config_from(KeyValueConfig{});
  EXPECT_EQ(defaults.input_len, 96);
  EXPECT_EQ(defaults.batch_size, 32u);
  EXPECT_EQ(defaults.decay, 0.99);
  EXPECT_EQ(defaults.eval_network, EvalNetwork::Target);

  EXPECT_THROW(train_config_from(KeyValueConfig::from_string("decay=1.5\n")), ConfigError);
  EXPECT_THROW(train_config_from(KeyValueConfig::from_string("objective=huber\n")), ConfigError);
  EXPECT_THROW(train_config_from(KeyValueConfig::from_string("batch_size=0\n")), ConfigError);
}

TEST(OracleInstanceFrom, Defaults)
{
  auto const inst = oracle_instance_from(KeyValueConfig{});
  EXPECT_EQ(inst.population.elements(), 4);
  EXPECT_EQ(inst.population.truth(2, 2), 0.8);
  EXPECT_EQ(inst.g(1, 1), -0.25);
  EXPECT_EQ(inst.g_star, inst.population.truth);
  EXPECT_EQ(inst.trials, 20000);
  EXPECT_EQ(inst.sample_size, 25);
  EXPECT_THROW(oracle_instance_from(KeyValueConfig::from_string("noise_std=0\n")), ConfigError);
  EXPECT_THROW(oracle_instance_from(KeyValueConfig::from_string("margin_alpha=-1\n")), ConfigError);
}

TEST(PrepareData, SyntheticDefaults)
{
  auto const d = prepare_data(KeyValueConfig{});
  EXPECT_EQ(d.features, 1);
  // 2000 points split 7:1:2 -> 1400 / 200 / 400 rows; L = M = 96.
  EXPECT_EQ(d.train.count(), 1400 - 192 + 1);
  EXPECT_EQ(d.val.count(), 200 - 192 + 1);
  EXPECT_EQ(d.test.count(), 400 - 192 + 1);
  EXPECT_EQ(d.train.inputs.rows(), 96);
  EXPECT_TRUE(d.warnings.empty());
}
