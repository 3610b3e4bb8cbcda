#pragma once

// Flat `key = value` configuration. Lines starting with '#' are comments.
// Later assignments win, so command-line overrides are applied last.

#include "data.hpp"
#include "theorem.hpp"
#include "trainer.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wavebound {

class KeyValueConfig
{
public:
  static KeyValueConfig from_file(std::filesystem::path const &path);
  static KeyValueConfig from_string(std::string const &text, std::string const &origin = "<string>");

  /// Applies one `key=value` assignment.
  void assign(std::string const &assignment);
  void set(std::string const &key, std::string const &value);
  bool has(std::string const &key) const;

  std::string get_string(std::string const &key, std::string const &fallback) const;
  double get_double(std::string const &key, double fallback) const;
  long long get_int(std::string const &key, long long fallback) const;
  bool get_bool(std::string const &key, bool fallback) const;
  std::vector<double> get_doubles(std::string const &key, std::vector<double> const &fallback) const;

  /// Throws ConfigError naming the first key outside `allowed`.
  void require_known(std::set<std::string> const &allowed) const;

  /// Sorted `key=value` lines.
  std::string serialize() const;

  std::map<std::string, std::string> const &entries() const { return entries_; }

private:
  std::map<std::string, std::string> entries_;
};

std::vector<double> parse_double_list(std::string const &text);

/// Keys understood by the training commands with their defaults.
std::map<std::string, std::string> const &training_defaults();
/// Keys understood by the theorem command with their defaults.
std::map<std::string, std::string> const &theorem_defaults();

/// Copy of `cfg` with every missing default filled in.
KeyValueConfig resolve(KeyValueConfig const &cfg, std::map<std::string, std::string> const &defaults);

TrainConfig train_config_from(KeyValueConfig const &cfg);
OracleInstance oracle_instance_from(KeyValueConfig const &cfg);

struct PreparedData
{
  FlatWindows train;
  FlatWindows val;
  FlatWindows test;
  Index features = 0;
  std::vector<std::string> warnings;
};

/// Loads or synthesizes the series, splits, standardizes and windows it.
PreparedData prepare_data(KeyValueConfig const &cfg);

} // namespace wavebound
