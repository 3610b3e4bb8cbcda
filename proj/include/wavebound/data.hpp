#pragma once

#include "core.hpp"
#include "rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wavebound {

/// T x K observations. `mean` / `std` are the statistics the values were
/// standardized with (zeros / ones for raw data).
struct SeriesDataset
{
  MatrixXd values;
  std::vector<std::string> feature_names;
  std::vector<std::string> timestamps;
  VectorXd mean;
  VectorXd std;
  bool standardized = false;

  Index length() const { return values.rows(); }
  Index features() const { return values.cols(); }
};

/// One rolling-forecast sample. `origin` is the segment index of the last
/// past row; the future starts at origin + 1.
struct WindowPair
{
  MatrixXd past;   // L x K
  MatrixXd future; // M x K
  Index origin = 0;
};

/// Chronological train/val/test split given as integer parts, e.g. 6:2:2.
/// Segment lengths are floor(T * part / total) for train and val; test
/// takes the remainder.
struct SplitSpec
{
  int train = 7;
  int val = 1;
  int test = 2;

  static SplitSpec parse(std::string const &text);
  std::string to_string() const;
  void validate() const;
};

struct SplitDatasets
{
  SeriesDataset train;
  SeriesDataset val;
  SeriesDataset test;
  std::vector<std::string> warnings;
};

/// f(t) = 2 sin(2 pi t / 32) + sin(2 pi t / 48) + sigma * z_t, z_t ~ N(0, 1).
SeriesDataset synth_series(Index length, double sigma, std::uint64_t seed);

/// Header row, then `timestamp,v1,...,vK` rows. Throws DataError with the
/// offending row / column on malformed input.
SeriesDataset load_csv(std::filesystem::path const &path);
void write_csv(SeriesDataset const &data, std::filesystem::path const &path);

/// Keeps one column. An empty name selects the last column.
SeriesDataset select_feature(SeriesDataset const &data, std::string const &name);

SplitDatasets split_and_standardize(SeriesDataset const &data, SplitSpec const &spec, bool standardize = true);

MatrixXd standardize(MatrixXd const &values, VectorXd const &mean, VectorXd const &std);
MatrixXd destandardize(MatrixXd const &values, VectorXd const &mean, VectorXd const &std);

/// Stride-1 windows; count = T - L - M + 1. Too short a segment yields no
/// windows and a warning.
std::vector<WindowPair> windowize(SeriesDataset const &segment, Index input_len, Index output_len,
                                  std::vector<std::string> *warnings = nullptr);

/// Windows packed column-wise: inputs is L*K x W, targets is M*K x W.
struct FlatWindows
{
  MatrixXd inputs;
  MatrixXd targets;
  Index input_len = 0;
  Index output_len = 0;
  Index features = 0;

  Index count() const { return inputs.cols(); }
  bool empty() const { return inputs.cols() == 0; }
};

FlatWindows flatten_windows(std::vector<WindowPair> const &windows);
FlatWindows flatten_windows(std::vector<WindowPair> const &windows, Index input_len, Index output_len, Index features);

/// Column subset of a packed window set.
FlatWindows gather(FlatWindows const &set, std::vector<std::size_t> const &indices);

/// Mini-batch index lists. With shuffle the order is one Fisher-Yates
/// permutation drawn from `rng`; the last batch may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, Rng &rng, bool shuffle);
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle);

} // namespace wavebound
