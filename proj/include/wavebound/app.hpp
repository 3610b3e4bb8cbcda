#pragma once

// Command implementations behind the `wavebound` executable. Each returns a
// process exit code (see ExitCode) and writes diagnostics to `err`.

#include "core.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wavebound::app {

struct SynthOptions
{
  long long length = 2000;
  double sigma = 0.5;
  std::uint64_t seed = 1;
  std::filesystem::path out;
};

struct TrainOptions
{
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides; // key=value, applied after the file
  std::filesystem::path out_dir;
};

struct SweepOptions
{
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;
  std::string grid; // e.g. "epsilon=0.01,0.001"
  int workers = 1;
  std::filesystem::path out_dir;
};

struct EvalOptions
{
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> config; // defaults to config.txt beside the checkpoint
  std::optional<std::string> data;
  std::string split = "test";
  std::optional<std::string> network;
  std::optional<std::filesystem::path> out; // stdout when empty
};

struct TheoremOptions
{
  std::optional<std::filesystem::path> instance_config;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> out;
};

int cmd_synth(SynthOptions const &opt, std::ostream &out, std::ostream &err);
int cmd_train(TrainOptions const &opt, std::ostream &out, std::ostream &err);
int cmd_sweep(SweepOptions const &opt, std::ostream &out, std::ostream &err);
int cmd_eval(EvalOptions const &opt, std::ostream &out, std::ostream &err);
int cmd_theorem(TheoremOptions const &opt, std::ostream &out, std::ostream &err);

} // namespace wavebound::app
