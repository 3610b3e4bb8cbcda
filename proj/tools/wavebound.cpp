#include "wavebound/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
  using namespace wavebound::app;
  CLI::App cli{"Error-bounded training lab for MLP time-series forecasters"};
  cli.require_subcommand(1);

  SynthOptions synth;
  auto *c_synth = cli.add_subcommand("synth", "write a synthetic sine + noise series as CSV");
  c_synth->add_option("--length", synth.length, "number of time steps")->required();
  c_synth->add_option("--sigma", synth.sigma, "noise standard deviation");
  c_synth->add_option("--seed", synth.seed, "RNG seed");
  c_synth->add_option("--out", synth.out, "output CSV path")->required();

  TrainOptions train;
  auto *c_train = cli.add_subcommand("train", "train one model and write logs, metrics and a checkpoint");
  c_train->add_option("--config", train.config, "key=value config file");
  c_train->add_option("--set", train.overrides, "override a config key (key=value); repeatable");
  c_train->add_option("--out", train.out_dir, "output directory")->required();

  SweepOptions sweep;
  auto *c_sweep = cli.add_subcommand("sweep", "train once per grid value and rank by validation MSE");
  c_sweep->add_option("--config", sweep.config, "key=value config file");
  c_sweep->add_option("--set", sweep.overrides, "override a config key (key=value); repeatable");
  c_sweep->add_option("--grid-spec,--grid", sweep.grid, "param=v1,v2,... (flood_level, epsilon, learning_rate)")
      ->required();
  c_sweep->add_option("--workers", sweep.workers, "parallel training runs");
  c_sweep->add_option("--out", sweep.out_dir, "output directory")->required();

  EvalOptions eval;
  auto *c_eval = cli.add_subcommand("eval", "evaluate a checkpoint on one split");
  c_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  c_eval->add_option("--config", eval.config, "resolved config (default: config.txt beside the checkpoint)");
  c_eval->add_option("--data", eval.data, "dataset CSV overriding the config");
  c_eval->add_option("--split", eval.split, "train, val or test");
  c_eval->add_option("--network", eval.network, "source or target (default: config eval_network)");
  c_eval->add_option("--out", eval.out, "metrics CSV path");

  TheoremOptions theorem;
  auto *c_theorem = cli.add_subcommand("theorem", "Monte-Carlo check of the wave estimator's MSE reduction");
  c_theorem->add_option("--instance-config", theorem.instance_config, "key=value instance file");
  c_theorem->add_option("--set", theorem.overrides, "override an instance key (key=value); repeatable");
  c_theorem->add_option("--out", theorem.out, "report JSON path");

  try {
    cli.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    // CLI11 exit codes are not ours; any parse failure is a usage error.
    return cli.exit(e) == 0 ? 0 : 1;
  }

  if (*c_synth) {
    return cmd_synth(synth, std::cout, std::cerr);
  }
  if (*c_train) {
    return cmd_train(train, std::cout, std::cerr);
  }
  if (*c_sweep) {
    return cmd_sweep(sweep, std::cout, std::cerr);
  }
  if (*c_eval) {
    return cmd_eval(eval, std::cout, std::cerr);
  }
  return cmd_theorem(theorem, std::cout, std::cerr);
}
