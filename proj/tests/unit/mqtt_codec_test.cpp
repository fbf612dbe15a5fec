#include "iotc/mqtt/codec.hpp"

#include <gtest/gtest.h>

#include <random>

#include "mqtt_generators.hpp"

namespace iotc::mqtt {
namespace {

using Bytes = std::vector<std::uint8_t>;

// Independent oracle: repeated division by 128, least significant group first.
Bytes varint_by_division(std::uint32_t n) {
  Bytes digits;
  do {
    digits.push_back(static_cast<std::uint8_t>(n % 128));
    n /= 128;
  } while (n != 0);
  for (std::size_t i = 0; i + 1 < digits.size(); ++i) digits[i] |= 0x80;
  return digits;
}

TEST(RemainingLength, BoundaryVectors) {
  EXPECT_EQ(encode_remaining_length(0), (Bytes{0x00}));
  EXPECT_EQ(encode_remaining_length(127), (Bytes{0x7F}));
  EXPECT_EQ(encode_remaining_length(128), (Bytes{0x80, 0x01}));
  EXPECT_EQ(encode_remaining_length(321), (Bytes{0xC1, 0x02}));
  EXPECT_EQ(encode_remaining_length(16383), (Bytes{0xFF, 0x7F}));
  EXPECT_EQ(encode_remaining_length(16384), (Bytes{0x80, 0x80, 0x01}));
  EXPECT_EQ(encode_remaining_length(268435455), (Bytes{0xFF, 0xFF, 0xFF, 0x7F}));
}

TEST(RemainingLength, OutOfRangeIsAnEncodingError) {
  EXPECT_THROW(encode_remaining_length(268435456), EncodeError);
}

TEST(RemainingLength, MatchesDivisionOracleAndRoundTripsBelow2To21) {
  for (std::uint32_t n = 0; n < (1u << 21); ++n) {
    Bytes enc = encode_remaining_length(n);
    ASSERT_EQ(enc, varint_by_division(n)) << n;
    ASSERT_EQ(enc.back() & 0x80, 0) << n;
    auto dec = decode_remaining_length(enc);
    ASSERT_TRUE(dec.has_value());
    ASSERT_EQ(dec->value, n);
    ASSERT_EQ(dec->length, enc.size());
  }
}

TEST(RemainingLength, ShortestEncoding) {
  // A value needs k bytes iff it is >= 128^(k-1).
  const std::uint32_t starts[] = {0, 128, 16384, 2097152};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(encode_remaining_length(starts[k]).size(), k + 1);
    if (starts[k] > 0) {
      EXPECT_EQ(encode_remaining_length(starts[k] - 1).size(), k);
    }
  }
}

TEST(RemainingLength, FiveByteVarintIsRejected) {
  Bytes buf{0x30, 0xFF, 0xFF, 0xFF, 0xFF, 0x01};
  EXPECT_THROW(decode_packet(buf), ProtocolError);
}

TEST(EncodePacket, FixedVectors) {
  EXPECT_EQ(encode_packet(Packet::simple(PacketType::PingReq)), (Bytes{0xC0, 0x00}));
  EXPECT_EQ(encode_packet(Packet::simple(PacketType::PingResp)), (Bytes{0xD0, 0x00}));
  EXPECT_EQ(encode_packet(Packet::simple(PacketType::Disconnect)), (Bytes{0xE0, 0x00}));
  EXPECT_EQ(encode_packet(Packet::ack(PacketType::PubRel, 0x1234)), (Bytes{0x62, 0x02, 0x12, 0x34}));
}

TEST(EncodePacket, PublishLayout) {
  Bytes got = encode_packet(Packet::publish("t", "x", 1, 10));
  // 2 (topic length) + 1 (topic) + 2 (packet id) + 1 (payload) = 6
  Bytes expected{0x32, 0x06, 0x00, 0x01, 't', 0x00, 0x0A, 'x'};
  EXPECT_EQ(got, expected);
}

TEST(EncodePacket, ConnectLayout) {
  Bytes got = encode_packet(Packet::connect_packet("c1", 60));
  Bytes expected{0x10, 14,  0x00, 0x04, 'M', 'Q', 'T', 'T', 0x04,
                 0x02, 0x00, 60,  0x00, 0x02, 'c', '1'};
  EXPECT_EQ(got, expected);
}

TEST(EncodePacket, SubscribeLayout) {
  Bytes got = encode_packet(Packet::subscribe(1, {{"a", 1}, {"b", 2}}));
  Bytes expected{0x82, 10, 0x00, 0x01, 0x00, 0x01, 'a', 0x01, 0x00, 0x01, 'b', 0x02};
  EXPECT_EQ(got, expected);
}

TEST(EncodePacket, RejectsInvariantViolations) {
  Packet no_id = Packet::publish("t", "x", 1);
  EXPECT_THROW(encode_packet(no_id), EncodeError);

  Packet id_on_qos0 = Packet::publish("t", "x", 0, 5);
  EXPECT_THROW(encode_packet(id_on_qos0), EncodeError);

  EXPECT_THROW(encode_packet(Packet::publish("a/+", "x")), EncodeError);
  EXPECT_THROW(encode_packet(Packet::publish("", "x")), EncodeError);
  EXPECT_THROW(encode_packet(Packet::publish("t", std::string(kMaxPayload + 1, 'p'))), EncodeError);

  Packet retained = Packet::publish("t", "x");
  retained.retain = true;
  EXPECT_THROW(encode_packet(retained), EncodeError);

  Packet qos3 = Packet::publish("t", "x", 3, 1);
  EXPECT_THROW(encode_packet(qos3), EncodeError);

  EXPECT_THROW(encode_packet(Packet::subscribe(1, {})), EncodeError);
  EXPECT_THROW(encode_packet(Packet::ack(PacketType::PubAck, 0)), EncodeError);
}

TEST(DecodePacket, SimpleFrames) {
  Bytes ping{0xC0, 0x00};
  auto d = decode_packet(ping);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->packet.type, PacketType::PingReq);
  EXPECT_EQ(d->consumed, 2u);
}

TEST(DecodePacket, IncompleteFrameNeedsMoreBytes) {
  EXPECT_FALSE(decode_packet(Bytes{0xC0}));
  EXPECT_FALSE(decode_packet(Bytes{}));
  Bytes pub = encode_packet(Packet::publish("topic", "payload", 1, 3));
  for (std::size_t n = 0; n < pub.size(); ++n) {
    EXPECT_FALSE(decode_packet(std::span(pub.data(), n))) << n;
  }
}

TEST(DecodePacket, ConsumesOnlyFirstFrame) {
  Bytes two = encode_packet(Packet::publish("a", "1"));
  Bytes second = encode_packet(Packet::simple(PacketType::PingReq));
  std::size_t first_len = two.size();
  two.insert(two.end(), second.begin(), second.end());
  auto d = decode_packet(two);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->consumed, first_len);
  EXPECT_EQ(d->packet.payload, "1");
}

TEST(DecodePacket, ProtocolErrors) {
  EXPECT_THROW(decode_packet(Bytes{0x36, 0x00}), ProtocolError);  // qos bits = 3
  EXPECT_THROW(decode_packet(Bytes{0x31, 0x03, 0x00, 0x01, 't'}), ProtocolError);  // retain
  EXPECT_THROW(decode_packet(Bytes{0x00, 0x00}), ProtocolError);  // reserved type 0
  EXPECT_THROW(decode_packet(Bytes{0xF0, 0x00}), ProtocolError);  // reserved type 15
  EXPECT_THROW(decode_packet(Bytes{0xC1, 0x00}), ProtocolError);  // bad flags
  EXPECT_THROW(decode_packet(Bytes{0x80, 0x02, 0x00, 0x01}), ProtocolError);  // SUBSCRIBE flags
  EXPECT_THROW(decode_packet(Bytes{0x82, 0x02, 0x00, 0x01}), ProtocolError);  // no topics
  EXPECT_THROW(decode_packet(Bytes{0x40, 0x02, 0x00, 0x00}), ProtocolError);  // id 0
  EXPECT_THROW(decode_packet(Bytes{0xC0, 0x01, 0x00}), ProtocolError);  // PINGREQ with body
  EXPECT_THROW(decode_packet(Bytes{0x40, 0x01, 0x00}), ProtocolError);  // truncated
}

TEST(DecodePacket, WildcardTopicsRejected) {
  Bytes sub{0x82, 0x06, 0x00, 0x01, 0x00, 0x01, '#', 0x00};
  EXPECT_THROW(decode_packet(sub), ProtocolError);
  Bytes pub{0x30, 0x05, 0x00, 0x03, 'a', '/', '+'};
  EXPECT_THROW(decode_packet(pub), ProtocolError);
}

TEST(DecodePacket, ConnectWithWillOrCredentialsRejected) {
  Bytes base = encode_packet(Packet::connect_packet("c", 10));
  for (std::uint8_t flag : {std::uint8_t{0x04}, std::uint8_t{0x40}, std::uint8_t{0x80},
                            std::uint8_t{0x01}}) {
    Bytes bad = base;
    bad[9] |= flag;  // connect flags byte
    EXPECT_THROW(decode_packet(bad), ProtocolError) << int(flag);
  }
}

TEST(DecodePacket, UnsupportedProtocolLevelStillDecodes) {
  Packet p = Packet::connect_packet("c");
  p.connect.protocol_level = 5;
  auto d = decode_packet(encode_packet(p));
  ASSERT_TRUE(d);
  EXPECT_EQ(d->packet.connect.protocol_level, 5);
}

TEST(DecodePacket, OversizedRemainingLengthRejectedBeforeBuffering) {
  Bytes header{0x30};
  append_remaining_length(kMaxPayload + 80000, header);
  EXPECT_THROW(decode_packet(header), ProtocolError);
}

TEST(CodecProperty, RoundTripRandomPackets) {
  std::mt19937_64 rng(20240607);
  for (int i = 0; i < 20000; ++i) {
    Packet p = gen::random_valid_packet(rng);
    Bytes enc = encode_packet(p);
    auto d = decode_packet(enc);
    ASSERT_TRUE(d) << describe(p);
    ASSERT_EQ(d->consumed, enc.size());
    ASSERT_EQ(d->packet, p) << describe(p);
  }
}

}  // namespace
}  // namespace iotc::mqtt
