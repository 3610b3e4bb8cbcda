#include "wavebound/data.hpp"

#include "wavebound/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace wavebound {

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto const pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

} // namespace

SplitSpec SplitSpec::parse(std::string const &text)
{
  SplitSpec s;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(text);
  if (!(in >> s.train >> c1 >> s.val >> c2 >> s.test) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof()) {
    throw ConfigError("split must look like 7:1:2, got '" + text + "'");
  }
  s.validate();
  return s;
}

std::string SplitSpec::to_string() const
{
  return std::to_string(train) + ":" + std::to_string(val) + ":" + std::to_string(test);
}

void SplitSpec::validate() const
{
  if (train <= 0 || val <= 0 || test <= 0) {
    throw ConfigError("split parts must be positive, got " + to_string());
  }
}

SeriesDataset synth_series(Index length, double sigma, std::uint64_t seed)
{
  if (length < 1) {
    throw ConfigError("length must be >= 1");
  }
  if (!(sigma >= 0.0) || std::isinf(sigma)) {
    throw ConfigError("sigma must be finite and >= 0");
  }
  Rng rng(seed);
  SeriesDataset d;
  d.values.resize(length, 1);
  d.timestamps.reserve(static_cast<std::size_t>(length));
  for (Index t = 0; t < length; ++t) {
    double const td = static_cast<double>(t);
    double const clean = 2.0 * std::sin(2.0 * std::numbers::pi * td / 32.0) + std::sin(2.0 * std::numbers::pi * td / 48.0);
    double const z = rng.normal();
    d.values(t, 0) = clean + sigma * z;
    d.timestamps.push_back(std::to_string(t));
  }
  d.feature_names = {"value"};
  d.mean = VectorXd::Zero(1);
  d.std = VectorXd::Ones(1);
  return d;
}

SeriesDataset load_csv(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open dataset '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ": empty dataset");
  }
  auto header = split_fields(trim(line));
  if (header.size() < 2) {
    throw DataError(path.string() + ": header needs a timestamp column and at least one feature");
  }
  SeriesDataset d;
  for (std::size_t i = 1; i < header.size(); ++i) {
    d.feature_names.emplace_back(trim(header[i]));
  }
  auto const K = static_cast<Index>(d.feature_names.size());

  std::vector<double> flat;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto const content = trim(line);
    if (content.empty()) {
      continue;
    }
    auto fields = split_fields(content);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    d.timestamps.emplace_back(trim(fields[0]));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto const cell = trim(fields[c]);
      double v = 0.0;
      auto const *first = cell.data();
      auto const *last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') {
        ++first;
      }
      auto const [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last || cell.empty()) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        " ('" + std::string(header[c]) + "'): cannot parse '" + std::string(cell) + "' as a number");
      }
      flat.push_back(v);
    }
    ++row;
  }
  if (row == 0) {
    throw DataError(path.string() + ": empty dataset");
  }
  d.values.resize(static_cast<Index>(row), K);
  for (Index r = 0; r < d.values.rows(); ++r) {
    for (Index k = 0; k < K; ++k) {
      d.values(r, k) = flat[static_cast<std::size_t>(r * K + k)];
    }
  }
  d.mean = VectorXd::Zero(K);
  d.std = VectorXd::Ones(K);
  return d;
}

void write_csv(SeriesDataset const &data, std::filesystem::path const &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write dataset '" + path.string() + "'");
  }
  out << "timestamp";
  for (auto const &n : data.feature_names) {
    out << ',' << n;
  }
  out << '\n';
  for (Index t = 0; t < data.length(); ++t) {
    if (static_cast<std::size_t>(t) < data.timestamps.size()) {
      out << data.timestamps[static_cast<std::size_t>(t)];
    } else {
      out << t;
    }
    for (Index k = 0; k < data.features(); ++k) {
      out << ',' << format_double(data.values(t, k));
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("failed while writing '" + path.string() + "'");
  }
}

SeriesDataset select_feature(SeriesDataset const &data, std::string const &name)
{
  if (data.features() == 0) {
    throw DataError("dataset has no features");
  }
  Index col = data.features() - 1;
  if (!name.empty()) {
    col = -1;
    for (std::size_t i = 0; i < data.feature_names.size(); ++i) {
      if (data.feature_names[i] == name) {
        col = static_cast<Index>(i);
      }
    }
    if (col < 0) {
      throw ConfigError("feature '" + name + "' not found in dataset");
    }
  }
  SeriesDataset out;
  out.values = data.values.col(col);
  out.feature_names = {data.feature_names[static_cast<std::size_t>(col)]};
  out.timestamps = data.timestamps;
  out.mean = data.mean.size() ? VectorXd::Constant(1, data.mean(col)) : VectorXd::Zero(1);
  out.std = data.std.size() ? VectorXd::Constant(1, data.std(col)) : VectorXd::Ones(1);
  out.standardized = data.standardized;
  return out;
}

MatrixXd standardize(MatrixXd const &values, VectorXd const &mean, VectorXd const &std)
{
  return (values.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

MatrixXd destandardize(MatrixXd const &values, VectorXd const &mean, VectorXd const &std)
{
  return (values.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

namespace {

SeriesDataset segment(SeriesDataset const &data, Index begin, Index count)
{
  SeriesDataset s;
  s.values = data.values.middleRows(begin, count);
  s.feature_names = data.feature_names;
  if (!data.timestamps.empty()) {
    s.timestamps.assign(data.timestamps.begin() + begin, data.timestamps.begin() + begin + count);
  }
  s.mean = data.mean;
  s.std = data.std;
  s.standardized = data.standardized;
  return s;
}

} // namespace

SplitDatasets split_and_standardize(SeriesDataset const &data, SplitSpec const &spec, bool do_standardize)
{
  spec.validate();
  Index const T = data.length();
  Index const total = spec.train + spec.val + spec.test;
  Index const n_train = T * spec.train / total;
  Index const n_val = T * spec.val / total;
  Index const n_test = T - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw DataError("series of length " + std::to_string(T) + " is too short for split " + spec.to_string());
  }

  SplitDatasets out;
  SeriesDataset base = data;
  if (do_standardize) {
    auto const train_block = data.values.topRows(n_train);
    VectorXd const mean = train_block.colwise().mean().transpose();
    VectorXd std = ((train_block.rowwise() - mean.transpose()).array().square().colwise().sum() /
                    static_cast<double>(n_train))
                       .sqrt()
                       .transpose();
    for (Index k = 0; k < std.size(); ++k) {
      if (!(std(k) > 0.0)) {
        std::string const name =
            static_cast<std::size_t>(k) < data.feature_names.size() ? data.feature_names[static_cast<std::size_t>(k)]
                                                                    : std::to_string(k);
        out.warnings.push_back("feature '" + name + "' is constant on the train split; std clamped to 1");
        std(k) = 1.0;
      }
    }
    base.values = standardize(data.values, mean, std);
    base.mean = mean;
    base.std = std;
    base.standardized = true;
  }
  out.train = segment(base, 0, n_train);
  out.val = segment(base, n_train, n_val);
  out.test = segment(base, n_train + n_val, n_test);
  return out;
}

std::vector<WindowPair> windowize(SeriesDataset const &seg, Index input_len, Index output_len,
                                  std::vector<std::string> *warnings)
{
  if (input_len < 1 || output_len < 1) {
    throw ConfigError("input and output lengths must be positive");
  }
  std::vector<WindowPair> out;
  Index const T = seg.length();
  if (T < input_len + output_len) {
    if (warnings != nullptr) {
      warnings->push_back("segment of length " + std::to_string(T) + " is shorter than L + M = " +
                          std::to_string(input_len + output_len) + "; no windows");
    }
    return out;
  }
  Index const count = T - input_len - output_len + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (Index s = 0; s < count; ++s) {
    out.push_back({seg.values.middleRows(s, input_len), seg.values.middleRows(s + input_len, output_len),
                   s + input_len - 1});
  }
  return out;
}

FlatWindows flatten_windows(std::vector<WindowPair> const &windows, Index input_len, Index output_len, Index features)
{
  FlatWindows f;
  f.input_len = input_len;
  f.output_len = output_len;
  f.features = features;
  auto const W = static_cast<Index>(windows.size());
  f.inputs.resize(input_len * features, W);
  f.targets.resize(output_len * features, W);
  for (Index w = 0; w < W; ++w) {
    auto const &win = windows[static_cast<std::size_t>(w)];
    if (win.past.rows() != input_len || win.future.rows() != output_len || win.past.cols() != features ||
        win.future.cols() != features) {
      throw ConfigError("window " + std::to_string(w) + " has inconsistent shape");
    }
    for (Index t = 0; t < input_len; ++t) {
      for (Index k = 0; k < features; ++k) {
        f.inputs(t * features + k, w) = win.past(t, k);
      }
    }
    for (Index t = 0; t < output_len; ++t) {
      for (Index k = 0; k < features; ++k) {
        f.targets(t * features + k, w) = win.future(t, k);
      }
    }
  }
  return f;
}

FlatWindows flatten_windows(std::vector<WindowPair> const &windows)
{
  if (windows.empty()) {
    return {};
  }
  auto const &w0 = windows.front();
  return flatten_windows(windows, w0.past.rows(), w0.future.rows(), w0.past.cols());
}

FlatWindows gather(FlatWindows const &set, std::vector<std::size_t> const &indices)
{
  FlatWindows g;
  g.input_len = set.input_len;
  g.output_len = set.output_len;
  g.features = set.features;
  auto const n = static_cast<Index>(indices.size());
  g.inputs.resize(set.inputs.rows(), n);
  g.targets.resize(set.targets.rows(), n);
  for (Index i = 0; i < n; ++i) {
    auto const src = static_cast<Index>(indices[static_cast<std::size_t>(i)]);
    g.inputs.col(i) = set.inputs.col(src);
    g.targets.col(i) = set.targets.col(src);
  }
  return g;
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, Rng &rng, bool shuffle)
{
  if (batch_size < 1) {
    throw ConfigError("batch size must be >= 1");
  }
  std::vector<std::size_t> order;
  if (shuffle) {
    order = permutation(count, rng);
  } else {
    order.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      order[i] = i;
    }
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < count; start += batch_size) {
    auto const end = std::min(count, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle)
{
  Rng rng(seed);
  return batches(count, batch_size, rng, shuffle);
}

} // namespace wavebound
