#pragma once

#include <charconv>
#include <string>

namespace wavebound {

/// Shortest round-trip decimal form of a double ("nan", "inf" and "-inf"
/// for the special values).
inline std::string format_double(double v)
{
  char buf[64];
  auto const [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

} // namespace wavebound
