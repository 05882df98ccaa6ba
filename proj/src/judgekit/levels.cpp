#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"

namespace veal::judgekit {

const char* level_name(Level level) {
  switch (level) {
    case Level::kStronglyKnown: return "Strongly Known";
    case Level::kKnown: return "Known";
    case Level::kWeaklyUnknown: return "Weakly Unknown";
    case Level::kUnknown: return "Unknown";
  }
  return "?";
}

Level parse_level(const std::string& name) {
  for (Level l : kLevels) {
    if (name == level_name(l)) return l;
  }
  throw ProtocolError("unknown recognition level '" + name + "'");
}

bool better(Level a, Level b) { return static_cast<int>(a) < static_cast<int>(b); }

}  // namespace veal::judgekit
