#include "wavebound/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace wavebound {

namespace {

std::string trim(std::string s)
{
  auto const first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  auto const last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string const &key, std::string const &text)
{
  std::string const t = trim(text);
  if (t == "inf" || t == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  auto const [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return v;
}

} // namespace

KeyValueConfig KeyValueConfig::from_file(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path.string());
}

KeyValueConfig KeyValueConfig::from_string(std::string const &text, std::string const &origin)
{
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto const content = trim(line);
    if (content.empty() || content.front() == '#') {
      continue;
    }
    if (content.find('=') == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    cfg.assign(content);
  }
  return cfg;
}

void KeyValueConfig::assign(std::string const &assignment)
{
  auto const eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  auto key = trim(assignment.substr(0, eq));
  if (key.empty()) {
    throw ConfigError("override '" + assignment + "' has an empty key");
  }
  set(key, trim(assignment.substr(eq + 1)));
}

void KeyValueConfig::set(std::string const &key, std::string const &value) { entries_[key] = value; }

bool KeyValueConfig::has(std::string const &key) const { return entries_.count(key) != 0; }

std::string KeyValueConfig::get_string(std::string const &key, std::string const &fallback) const
{
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(std::string const &key, double fallback) const
{
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double(key, it->second);
}

long long KeyValueConfig::get_int(std::string const &key, long long fallback) const
{
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return fallback;
  }
  long long v = 0;
  auto const &t = it->second;
  auto const [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + t + "' as an integer");
  }
  return v;
}

bool KeyValueConfig::get_bool(std::string const &key, bool fallback) const
{
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return fallback;
  }
  auto const &t = it->second;
  if (t == "true" || t == "1" || t == "yes") {
    return true;
  }
  if (t == "false" || t == "0" || t == "no") {
    return false;
  }
  throw ConfigError("config key '" + key + "': expected true or false, got '" + t + "'");
}

std::vector<double> parse_double_list(std::string const &text)
{
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto const t = trim(item);
    if (!t.empty()) {
      out.push_back(parse_double("list", t));
    }
  }
  return out;
}

std::vector<double> KeyValueConfig::get_doubles(std::string const &key, std::vector<double> const &fallback) const
{
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double_list(it->second);
}

void KeyValueConfig::require_known(std::set<std::string> const &allowed) const
{
  for (auto const &[k, v] : entries_) {
    if (allowed.count(k) == 0) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
}

std::string KeyValueConfig::serialize() const
{
  std::string out;
  for (auto const &[k, v] : entries_) {
    out += k + "=" + v + "\n";
  }
  return out;
}

std::map<std::string, std::string> const &training_defaults()
{
  static std::map<std::string, std::string> const defaults{
      {"data", ""},
      {"synth_length", "2000"},
      {"synth_sigma", "0.5"},
      {"synth_seed", "1"},
      {"univariate", "true"},
      {"target_column", ""},
      {"standardize", "true"},
      {"split", "7:1:2"},
      {"input_len", "96"},
      {"output_len", "96"},
      {"hidden", "64"},
      {"objective", "plain"},
      {"flood_level", "0"},
      {"epsilon", "0.01"},
      {"batch_size", "32"},
      {"learning_rate", "0.001"},
      {"decay", "0.99"},
      {"max_epochs", "30"},
      {"patience", "3"},
      {"seed", "1"},
      {"eval_network", "target"},
      {"slice_steps", "0"},
      {"slice_radius", "1"},
      {"slice_seed", "1"},
      {"log_timing", "false"},
  };
  return defaults;
}

std::map<std::string, std::string> const &theorem_defaults()
{
  static std::map<std::string, std::string> const defaults{
      {"horizon", "2"},        {"features", "2"},     {"truth", "1,-0.5,0.8,0.3"}, {"input_std", "1"},
      {"noise_std", "0.3"},    {"delta", "0.25"},     {"star_offset", "0"},        {"epsilon", "0.01"},
      {"sample_size", "25"},   {"trials", "20000"},   {"margin_alpha", "0.01"},    {"jensen_batch", "5"},
      {"seed", "1"},
  };
  return defaults;
}

KeyValueConfig resolve(KeyValueConfig const &cfg, std::map<std::string, std::string> const &defaults)
{
  std::set<std::string> allowed;
  for (auto const &[k, v] : defaults) {
    allowed.insert(k);
  }
  cfg.require_known(allowed);
  KeyValueConfig out;
  for (auto const &[k, v] : defaults) {
    out.set(k, cfg.get_string(k, v));
  }
  return out;
}

TrainConfig train_config_from(KeyValueConfig const &raw)
{
  auto const cfg = resolve(raw, training_defaults());
  TrainConfig tc;
  tc.input_len = cfg.get_int("input_len", 96);
  tc.output_len = cfg.get_int("output_len", 96);
  tc.hidden = cfg.get_int("hidden", 64);
  tc.objective.kind = parse_objective_kind(cfg.get_string("objective", "plain"));
  tc.objective.flood_level = cfg.get_double("flood_level", 0.0);
  tc.objective.epsilon = cfg.get_double("epsilon", 0.01);
  auto const batch = cfg.get_int("batch_size", 32);
  if (batch < 1) {
    throw ConfigError("batch_size must be >= 1");
  }
  tc.batch_size = static_cast<std::size_t>(batch);
  tc.learning_rate = cfg.get_double("learning_rate", 1e-3);
  tc.decay = cfg.get_double("decay", 0.99);
  tc.max_epochs = static_cast<int>(cfg.get_int("max_epochs", 30));
  tc.patience = static_cast<int>(cfg.get_int("patience", 3));
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  tc.eval_network = parse_eval_network(cfg.get_string("eval_network", "target"));
  tc.validate();
  return tc;
}

OracleInstance oracle_instance_from(KeyValueConfig const &raw)
{
  auto const cfg = resolve(raw, theorem_defaults());
  auto inst = make_diagonal_instance(cfg.get_int("horizon", 2), cfg.get_int("features", 2),
                                     cfg.get_doubles("truth", {1.0}), cfg.get_double("input_std", 1.0),
                                     cfg.get_double("noise_std", 0.3), cfg.get_double("delta", 0.25),
                                     cfg.get_double("star_offset", 0.0));
  inst.epsilon = cfg.get_double("epsilon", 0.01);
  inst.sample_size = cfg.get_int("sample_size", 25);
  inst.trials = cfg.get_int("trials", 20000);
  inst.margin_alpha = cfg.get_double("margin_alpha", 0.01);
  inst.jensen_batch = cfg.get_int("jensen_batch", 5);
  inst.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  inst.validate();
  return inst;
}

PreparedData prepare_data(KeyValueConfig const &raw)
{
  auto const cfg = resolve(raw, training_defaults());
  SeriesDataset series;
  auto const path = cfg.get_string("data", "");
  if (path.empty()) {
    series = synth_series(cfg.get_int("synth_length", 2000), cfg.get_double("synth_sigma", 0.5),
                          static_cast<std::uint64_t>(cfg.get_int("synth_seed", 1)));
  } else {
    series = load_csv(path);
  }
  if (cfg.get_bool("univariate", true)) {
    series = select_feature(series, cfg.get_string("target_column", ""));
  }
  auto const split = split_and_standardize(series, SplitSpec::parse(cfg.get_string("split", "7:1:2")),
                                           cfg.get_bool("standardize", true));
  Index const L = cfg.get_int("input_len", 96);
  Index const M = cfg.get_int("output_len", 96);
  Index const K = series.features();

  PreparedData out;
  out.features = K;
  out.warnings = split.warnings;
  out.train = flatten_windows(windowize(split.train, L, M, &out.warnings), L, M, K);
  out.val = flatten_windows(windowize(split.val, L, M, &out.warnings), L, M, K);
  out.test = flatten_windows(windowize(split.test, L, M, &out.warnings), L, M, K);
  return out;
}

} // namespace wavebound
