#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotc/mqtt/packet.hpp"

namespace iotc::mqtt {

// Thrown when asked to encode a value or packet that violates its invariants.
class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown by the decoder for malformed input. The connection must be closed.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base-128 little-endian varint, continuation bit 0x80, 1..4 bytes.
std::vector<std::uint8_t> encode_remaining_length(std::uint64_t n);
void append_remaining_length(std::uint64_t n, std::vector<std::uint8_t>& out);

struct VarintDecode {
  std::uint32_t value = 0;
  std::size_t length = 0;
};

// std::nullopt when more bytes are needed.
std::optional<VarintDecode> decode_remaining_length(std::span<const std::uint8_t> buf);

std::vector<std::uint8_t> encode_packet(const Packet& p);
void append_packet(const Packet& p, std::vector<std::uint8_t>& out);

struct Decoded {
  Packet packet;
  std::size_t consumed = 0;
};

// Decodes the first complete frame in buf. Returns std::nullopt (consuming
// nothing) when buf holds only a partial frame.
std::optional<Decoded> decode_packet(std::span<const std::uint8_t> buf);

}  // namespace iotc::mqtt
