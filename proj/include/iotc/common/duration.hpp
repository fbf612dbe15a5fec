#pragma once

#include <chrono>
#include <string_view>

namespace iotc {

// "250ms", "2s", "1.5s", "3m", or a bare number of seconds ("2", "0.5").
// Throws std::invalid_argument on anything else or on negative values.
std::chrono::milliseconds parse_duration(std::string_view text);

}  // namespace iotc
