#include "iotc/common/duration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace iotc {

std::chrono::milliseconds parse_duration(std::string_view text) {
  std::string s(text);
  double scale = 1000.0;
  auto strip = [&](std::string_view suffix, double factor) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.resize(s.size() - suffix.size());
      scale = factor;
      return true;
    }
    return false;
  };
  strip("ms", 1.0) || strip("s", 1000.0) || strip("m", 60000.0);
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(value) || value < 0) {
    throw std::invalid_argument("bad duration: " + std::string(text));
  }
  return std::chrono::milliseconds(std::llround(value * scale));
}

}  // namespace iotc
