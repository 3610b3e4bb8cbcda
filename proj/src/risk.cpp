#include "wavebound/risk.hpp"

namespace wavebound {

std::string_view to_string(ObjectiveKind kind)
{
  switch (kind) {
  case ObjectiveKind::Plain:
    return "plain";
  case ObjectiveKind::Flooding:
    return "flooding";
  case ObjectiveKind::ConstantFlooding:
    return "constant_flooding";
  case ObjectiveKind::WaveAvg:
    return "wave_avg";
  case ObjectiveKind::WaveIndiv:
    return "wave_indiv";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name)
{
  for (auto k : {ObjectiveKind::Plain, ObjectiveKind::Flooding, ObjectiveKind::ConstantFlooding, ObjectiveKind::WaveAvg,
                 ObjectiveKind::WaveIndiv}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw ConfigError("unknown objective '" + std::string(name) +
                    "' (expected plain, flooding, constant_flooding, wave_avg or wave_indiv)");
}

} // namespace wavebound
