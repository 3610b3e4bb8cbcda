#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <type_traits>

namespace wavebound {

using Index = Eigen::Index;

template <typename Scalar> using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
/// Read-only view that does not take part in template deduction, so callers
/// may pass plain matrices or blocks once Scalar is fixed by another argument.
template <typename Scalar> using ConstRef = std::type_identity_t<Eigen::Ref<Matrix<Scalar> const>>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Error taxonomy. Each kind maps to one process exit code in the CLI.
struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

enum class ExitCode : int
{
  Ok = 0,
  Usage = 1,
  Config = 2,
  Data = 3,
  Numeric = 4,
};

inline std::string shape_string(Index rows, Index cols)
{
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived> bool all_finite(Eigen::DenseBase<Derived> const &m)
{
  return m.allFinite();
}

} // namespace wavebound
