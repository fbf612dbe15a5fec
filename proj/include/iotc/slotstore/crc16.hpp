#pragma once

#include <cstdint>
#include <string_view>

namespace iotc::slotstore {

inline constexpr std::uint32_t kSlotCount = 16384;

// CRC-16/XMODEM: poly 0x1021, init 0x0000, no reflection, xorout 0x0000.
std::uint16_t crc16(std::string_view data);
std::uint16_t crc16(const std::uint8_t* data, std::size_t size);

// CRC16(key) mod 16384.
inline std::uint16_t hash_slot(std::string_view key) {
  return static_cast<std::uint16_t>(crc16(key) % kSlotCount);
}

}  // namespace iotc::slotstore
